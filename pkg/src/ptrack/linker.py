"""Re-links detections into trajectories guided by a pattern set.

Linking picks one outgoing and one incoming edge per detection so that the
selected edges decompose into entry-to-exit paths, each path following a
single pattern, and the summed aligned/total score ratio over all paths is
maximal.  The search is exact: a bisection over the ratio with one 0/1
feasibility problem per probe.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import (
    SINK_NODE,
    SOURCE_NODE,
    Assignment,
    Config,
    DetectionGraph,
    Pattern,
    Trajectory,
    validate_trajectory_set,
)
from .fracopt import (
    Constraint,
    RatioSearchConfig,
    SolverModel,
    maximize_ratio,
)
from .scoring import PatternScorer


@dataclass(frozen=True)
class LinkResult:
    """Outcome of one linking solve.

    `trajectories` and `assignment` are the reported output (trajectories
    assigned to the empty pattern are dropped when the config says so);
    `all_trajectories` and `full_assignment` keep the complete decomposition.
    `alpha_star` is the exact objective value of that decomposition and
    `search_alpha` the certified bisection bound it improves on.
    """

    trajectories: tuple[Trajectory, ...]
    assignment: Assignment
    all_trajectories: tuple[Trajectory, ...]
    full_assignment: Assignment
    alpha_star: float
    search_alpha: float
    lower_bound_only: bool = False


def ratio_bounds(cfg: Config, iters: int) -> RatioSearchConfig:
    """Bisection bracket for the linking objective.

    The objective never exceeds 1 (aligned length cannot beat total length)
    and never drops below 0 when off-pattern motion scores non-negatively.
    A negative empty rate pulls the floor down; reverse penalties can push a
    pattern-assigned trajectory slightly below it, hence the extra headroom.
    """
    lo = 0.0
    if cfg.empty_rate < 0:
        lo = -(1.0 + cfg.reverse_penalty + abs(cfg.empty_rate))
    return RatioSearchConfig(lo=lo, hi=1.0, iters=iters)


def require_empty_pattern(patterns: Sequence[Pattern]) -> int:
    """Index of the single empty pattern; raises if absent or duplicated."""
    empties = [k for k, p in enumerate(patterns) if p.is_empty]
    if len(empties) != 1:
        raise ValueError(f"pattern set must contain exactly one empty pattern, found {len(empties)}")
    return empties[0]


def build_link_model(
    graph: DetectionGraph, patterns: Sequence[Pattern], cfg: Config
) -> tuple[SolverModel, tuple[tuple[int, int, int], ...]]:
    """Construct the 0/1 model for linking.

    One variable per (pattern, edge) triple.  Constraints: every detection
    selects exactly one outgoing and one incoming edge across patterns, the
    selected pattern is conserved through each detection, and entries balance
    exits.  Returns the model and the triple for each variable index.
    """
    edges = graph.sorted_edges
    triples = tuple(
        (p, i, j) for p in range(len(patterns)) for (i, j) in edges
    )
    var_of = {t: k for k, t in enumerate(triples)}

    numer = []
    denom = []
    first, last = graph.batch
    for p_idx, pattern in enumerate(patterns):
        scorer = PatternScorer(graph, pattern, cfg)
        for i, j in edges:
            if i == SOURCE_NODE:
                score = scorer.entry_edge(j, graph.detection(j).frame == first)
            elif j == SINK_NODE:
                score = scorer.exit_edge(i, graph.detection(i).frame == last)
            else:
                score = scorer.detection_edge(i, j)
            numer.append(score.aligned)
            denom.append(score.total)

    constraints: list[Constraint] = []
    n_patterns = len(patterns)
    for det in graph.detections:
        d = det.id
        outs = graph.out_neighbors[d]
        ins = graph.in_neighbors[d]
        out_vars = tuple(var_of[(p, d, j)] for p in range(n_patterns) for j in outs)
        in_vars = tuple(var_of[(p, i, d)] for p in range(n_patterns) for i in ins)
        constraints.append(Constraint(out_vars, (1.0,) * len(out_vars), "==", 1.0))
        constraints.append(Constraint(in_vars, (1.0,) * len(in_vars), "==", 1.0))
        for p in range(n_patterns):
            cons_vars = tuple(var_of[(p, i, d)] for i in ins) + tuple(
                var_of[(p, d, j)] for j in outs
            )
            coeffs = (1.0,) * len(ins) + (-1.0,) * len(outs)
            constraints.append(Constraint(cons_vars, coeffs, "==", 0.0))

    entry_vars = tuple(k for k, (p, i, j) in enumerate(triples) if i == SOURCE_NODE)
    exit_vars = tuple(k for k, (p, i, j) in enumerate(triples) if j == SINK_NODE)
    constraints.append(
        Constraint(
            entry_vars + exit_vars,
            (1.0,) * len(entry_vars) + (-1.0,) * len(exit_vars),
            "==",
            0.0,
        )
    )

    # Decompositions with zero total score (every detection its own path)
    # would satisfy any ratio probe vacuously; a floor on the total keeps the
    # bisection a genuine threshold search.
    floor_vars = tuple(k for k, n in enumerate(denom) if n != 0.0)
    if floor_vars:
        floor_coeffs = tuple(denom[k] for k in floor_vars)
        floor = 1e-7 * (1.0 + sum(abs(c) for c in floor_coeffs))
        constraints.append(Constraint(floor_vars, floor_coeffs, ">=", floor))

    model = SolverModel(
        num_vars=len(triples),
        constraints=tuple(constraints),
        numer=tuple(numer),
        denom=tuple(denom),
    )
    return model, triples


def _decode(
    graph: DetectionGraph,
    triples: tuple[tuple[int, int, int], ...],
    witness: tuple[int, ...],
) -> tuple[tuple[Trajectory, ...], Assignment]:
    succ: dict[int, tuple[int, int]] = {}
    starts: list[tuple[int, int]] = []
    for k, x in enumerate(witness):
        if not x:
            continue
        p, i, j = triples[k]
        if i == SOURCE_NODE:
            starts.append((j, p))
        else:
            succ[i] = (j, p)
    paths: list[tuple[tuple[int, ...], int]] = []
    for v, p in starts:
        nodes = [v]
        while True:
            nxt, p_next = succ[nodes[-1]]
            assert p_next == p, "pattern changed along a trajectory"
            if nxt == SINK_NODE:
                break
            nodes.append(nxt)
        paths.append((tuple(nodes), p))

    def sort_key(item: tuple[tuple[int, ...], int]):
        head = graph.detection(item[0][0])
        return (head.frame, head.pos[0], head.pos[1], head.id)

    paths.sort(key=sort_key)
    first, last = graph.batch
    trajectories = tuple(
        Trajectory(
            nodes=nodes,
            starts_at_batch_begin=graph.detection(nodes[0]).frame == first,
            ends_at_batch_end=graph.detection(nodes[-1]).frame == last,
        )
        for nodes, _ in paths
    )
    assignment = Assignment(tuple(p for _, p in paths))
    violations = validate_trajectory_set(graph, trajectories)
    if violations:
        raise AssertionError(f"solver produced an invalid decomposition: {violations[:3]}")
    return trajectories, assignment


def link(
    graph: DetectionGraph,
    patterns: Sequence[Pattern],
    cfg: Config,
    iters: int = 10,
    time_budget: float | None = None,
) -> LinkResult:
    """Find the optimal pattern-guided decomposition of the graph.

    Raises if the pattern set lacks the empty pattern, a detection has no
    outgoing or incoming edge, or no decomposition has positive total score.
    """
    empty_idx = require_empty_pattern(patterns)
    for det in graph.detections:
        if not graph.out_neighbors[det.id]:
            raise ValueError(f"detection {det.id} has no outgoing edge")
        if not graph.in_neighbors[det.id]:
            raise ValueError(f"detection {det.id} has no incoming edge")

    model, triples = build_link_model(graph, patterns, cfg)
    try:
        result = maximize_ratio(model, ratio_bounds(cfg, iters), time_budget)
    except ValueError as err:
        if "no feasible solution" in str(err):
            raise ValueError(
                "degenerate instance: every decomposition has zero total score"
            ) from err
        raise
    if result.achieved is None:
        raise ValueError("degenerate instance: every decomposition has zero total score")
    all_trajectories, full_assignment = _decode(graph, triples, result.witness)

    if cfg.remove_empty:
        kept = [
            (t, p)
            for t, p in zip(all_trajectories, full_assignment)
            if p != empty_idx
        ]
        trajectories = tuple(t for t, _ in kept)
        assignment = Assignment(tuple(p for _, p in kept))
    else:
        trajectories = all_trajectories
        assignment = full_assignment

    return LinkResult(
        trajectories=trajectories,
        assignment=assignment,
        all_trajectories=all_trajectories,
        full_assignment=full_assignment,
        alpha_star=result.achieved,
        search_alpha=result.alpha,
        lower_bound_only=result.lower_bound_only,
    )

"""Selects motion patterns that explain a trajectory set.

Candidates are the trajectories themselves, turned into centerlines at a
range of corridor widths; the empty pattern is always on offer.  Mining picks
a subset within a count budget and a total-cost budget, together with one
pattern per trajectory, maximizing the same aligned/total ratio the linker
uses.  Keeping patterns cheap (short and narrow) is what forces the selection
to generalize instead of memorizing every trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import (
    Assignment,
    Config,
    DetectionGraph,
    EMPTY_PATTERN,
    Pattern,
    Trajectory,
    tracking_area,
)
from .fracopt import Constraint, SolverModel, maximize_ratio
from .linker import ratio_bounds
from .scoring import trajectory_score


@dataclass(frozen=True)
class CandidateSet:
    """Candidate patterns for mining; index 0 is always the empty pattern.

    `source` records which trajectory produced each candidate (None for the
    empty pattern).
    """

    patterns: tuple[Pattern, ...]
    source: tuple[int | None, ...]

    def __post_init__(self) -> None:
        if not self.patterns or not self.patterns[0].is_empty:
            raise ValueError("candidate set must start with the empty pattern")
        if any(p.is_empty for p in self.patterns[1:]):
            raise ValueError("only the first candidate may be empty")
        if len(self.source) != len(self.patterns):
            raise ValueError("source length does not match patterns")

    def __len__(self) -> int:
        return len(self.patterns)


@dataclass(frozen=True)
class MineResult:
    """Selected patterns (empty pattern first) and the per-trajectory choice.

    `alpha_star` is the exact objective of the returned assignment;
    `search_alpha` the certified bisection bound.  `selected_candidates`
    are indices into the candidate set, for traceability.
    """

    patterns: tuple[Pattern, ...]
    assignment: Assignment
    alpha_star: float
    search_alpha: float
    selected_candidates: tuple[int, ...]
    lower_bound_only: bool = False


def generate_candidates(
    graph: DetectionGraph,
    trajectories: Sequence[Trajectory],
    cfg: Config,
    batch: tuple[int, int] | None = None,
) -> CandidateSet:
    """Candidate centerlines from trajectories fully inside the batch.

    Trajectories touching the batch boundary are skipped: they were cut by
    the observation window, so their shape is not a complete pattern.  Each
    eligible centerline is offered at every configured width.  Degenerate
    (stationary) trajectories yield no candidates.
    """
    first, last = batch if batch is not None else graph.batch
    patterns: list[Pattern] = [EMPTY_PATTERN]
    source: list[int | None] = [None]
    for t_idx, traj in enumerate(trajectories):
        frames = [graph.detection(n).frame for n in traj.nodes]
        if min(frames) <= first or max(frames) >= last:
            continue
        points = [graph.detection(n).pos for n in traj.nodes]
        try:
            base = Pattern.from_points(points, cfg.candidate_widths[0])
        except ValueError:
            continue
        for w in cfg.candidate_widths:
            patterns.append(Pattern(base.centerline, w))
            source.append(t_idx)
    return CandidateSet(tuple(patterns), tuple(source))


def build_mine_model(
    graph: DetectionGraph,
    trajectories: Sequence[Trajectory],
    candidates: CandidateSet,
    cfg: Config,
) -> SolverModel:
    """0/1 model for pattern selection.

    Assignment variables pair each trajectory with each candidate; selection
    variables gate the non-empty candidates.  A trajectory may only use a
    selected candidate, at most `max_patterns` candidates may be selected,
    and their summed cost must fit the budget.  The empty pattern is always
    available and never counts against either budget.
    """
    n_traj = len(trajectories)
    n_cand = len(candidates)
    assign_var = lambda t, p: t * n_cand + p
    select_var = lambda p: n_traj * n_cand + (p - 1)
    num_vars = n_traj * n_cand + (n_cand - 1)

    numer = [0.0] * num_vars
    denom = [0.0] * num_vars
    for t, traj in enumerate(trajectories):
        for p, pattern in enumerate(candidates.patterns):
            score = trajectory_score(graph, traj, pattern, cfg)
            numer[assign_var(t, p)] = score.aligned
            denom[assign_var(t, p)] = score.total

    constraints: list[Constraint] = []
    for t in range(n_traj):
        cvars = tuple(assign_var(t, p) for p in range(n_cand))
        constraints.append(Constraint(cvars, (1.0,) * n_cand, "==", 1.0))
    for t in range(n_traj):
        for p in range(1, n_cand):
            constraints.append(
                Constraint((assign_var(t, p), select_var(p)), (1.0, -1.0), "<=", 0.0)
            )
    if n_cand > 1:
        sel = tuple(select_var(p) for p in range(1, n_cand))
        constraints.append(Constraint(sel, (1.0,) * len(sel), "<=", float(cfg.max_patterns)))
        costs = tuple(candidates.patterns[p].cost for p in range(1, n_cand))
        budget = cfg.resolved_cost_budget(tracking_area(d.pos for d in graph.detections))
        constraints.append(Constraint(sel, costs, "<=", budget))

    # Same total-score floor as the linker: assignments whose summed total
    # is zero would pass every ratio probe vacuously.
    floor_vars = tuple(k for k, n in enumerate(denom) if n != 0.0)
    if floor_vars:
        floor_coeffs = tuple(denom[k] for k in floor_vars)
        floor = 1e-7 * (1.0 + sum(abs(c) for c in floor_coeffs))
        constraints.append(Constraint(floor_vars, floor_coeffs, ">=", floor))

    return SolverModel(
        num_vars=num_vars,
        constraints=tuple(constraints),
        numer=tuple(numer),
        denom=tuple(denom),
    )


def mine(
    graph: DetectionGraph,
    trajectories: Sequence[Trajectory],
    candidates: CandidateSet,
    cfg: Config,
    iters: int = 5,
    time_budget: float | None = None,
) -> MineResult:
    """Pick the pattern subset and assignment with the best objective.

    The returned pattern set always starts with the empty pattern; only
    candidates actually used by some trajectory are included beyond it.
    """
    if not trajectories:
        raise ValueError("no trajectories to mine from")
    model = build_mine_model(graph, trajectories, candidates, cfg)
    try:
        result = maximize_ratio(model, ratio_bounds(cfg, iters), time_budget)
    except ValueError as err:
        if "no feasible solution" in str(err):
            raise ValueError(
                "degenerate instance: every assignment has zero total score"
            ) from err
        raise
    if result.achieved is None:
        raise ValueError("degenerate instance: every assignment has zero total score")

    n_cand = len(candidates)
    chosen: list[int] = []
    for t in range(len(trajectories)):
        row = result.witness[t * n_cand : (t + 1) * n_cand]
        picks = [p for p, x in enumerate(row) if x]
        assert len(picks) == 1, "each trajectory must use exactly one pattern"
        chosen.append(picks[0])

    used = sorted({p for p in chosen if p != 0})
    selected = (0, *used)
    new_index = {old: new for new, old in enumerate(selected)}
    patterns = tuple(candidates.patterns[p] for p in selected)
    assignment = Assignment(tuple(new_index[p] for p in chosen))
    return MineResult(
        patterns=patterns,
        assignment=assignment,
        alpha_star=result.achieved,
        search_alpha=result.alpha,
        selected_candidates=selected,
        lower_bound_only=result.lower_bound_only,
    )

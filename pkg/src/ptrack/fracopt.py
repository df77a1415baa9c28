"""Exact solver for 0/1 linear-fractional programs.

The linker and the miner both maximize a ratio of two linear functions over
binary variables under linear constraints.  That reduces to a sequence of
feasibility questions: is there an assignment x with
sum((numer - alpha * denom) * x) >= 0 subject to the constraints?  The answer
is monotone in alpha whenever the denominator stays non-negative, so a
bisection over alpha brackets the optimum to any fixed precision.

Feasibility itself is decided exactly by depth-first search with unit
propagation and an optimistic bound on the parametric sum.  Instances here
are small and highly structured (selection rows and flow conservation), which
the propagation exploits; there is no approximation anywhere.
"""
from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

_SENSES = ("<=", "==", ">=")


@dataclass(frozen=True)
class Constraint:
    """A sparse linear constraint over binary variables."""

    vars: tuple[int, ...]
    coeffs: tuple[float, ...]
    sense: str
    rhs: float

    def __post_init__(self) -> None:
        if self.sense not in _SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        if len(self.vars) != len(self.coeffs):
            raise ValueError("vars and coeffs lengths differ")
        if len(set(self.vars)) != len(self.vars):
            raise ValueError("constraint repeats a variable")
        if not all(math.isfinite(c) for c in self.coeffs) or not math.isfinite(self.rhs):
            raise ValueError("constraint coefficients must be finite")


@dataclass(frozen=True)
class SolverModel:
    """Binary variables, constraints, and the two linear ratio terms."""

    num_vars: int
    constraints: tuple[Constraint, ...]
    numer: tuple[float, ...]
    denom: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.num_vars < 1:
            raise ValueError("model needs at least one variable")
        if len(self.numer) != self.num_vars or len(self.denom) != self.num_vars:
            raise ValueError("ratio term length does not match num_vars")
        if not all(math.isfinite(v) for v in self.numer + self.denom):
            raise ValueError("ratio terms must be finite")
        for con in self.constraints:
            if any(v < 0 or v >= self.num_vars for v in con.vars):
                raise ValueError("constraint references an unknown variable")

    @cached_property
    def _numer_arr(self) -> np.ndarray:
        return np.asarray(self.numer)

    @cached_property
    def _denom_arr(self) -> np.ndarray:
        return np.asarray(self.denom)

    def ratio_of(self, assignment: tuple[int, ...]) -> float | None:
        """Achieved ratio of an assignment, or None if its denominator is not positive."""
        x = np.asarray(assignment)
        if x.shape != (self.num_vars,):
            raise ValueError("assignment length does not match num_vars")
        total = float(self._denom_arr @ x)
        if total <= 0.0:
            return None
        return float(self._numer_arr @ x) / total

    def certifies(self, assignment: tuple[int, ...], alpha: float) -> bool:
        """Whether an assignment witnesses feasibility at the given ratio level."""
        x = np.asarray(assignment)
        value = float((self._numer_arr - alpha * self._denom_arr) @ x)
        scale = float(np.abs(self._numer_arr).sum() + abs(alpha) * np.abs(self._denom_arr).sum())
        return value >= -1e-9 * (1.0 + scale)


@dataclass(frozen=True)
class FeasibilityResult:
    assignment: tuple[int, ...] | None
    timed_out: bool = False


@dataclass(frozen=True)
class RatioSearchConfig:
    """Bisection bracket and iteration count for the ratio search."""

    lo: float = 0.0
    hi: float = 1.0
    iters: int = 10

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if not isinstance(self.iters, int) or self.iters < 1:
            raise ValueError("iters must be a positive int")


@dataclass(frozen=True)
class RatioSearchResult:
    """Outcome of the bisection.

    `alpha` is the certified lower bound reached by the search grid;
    `achieved` is the exact ratio of the returned witness (None when its
    denominator is not positive).  When a probe hits its time budget it is
    treated as infeasible and the result is flagged as a lower bound only.
    """

    alpha: float
    witness: tuple[int, ...]
    achieved: float | None
    lower_bound_only: bool = False


class _Timeout(Exception):
    pass


class _Search:
    """One exact feasibility probe: DFS with propagation and pruning."""

    def __init__(self, model: SolverModel, alpha: float, deadline: float | None):
        n = model.num_vars
        self.n = n
        self.deadline = deadline
        self.nodes = 0
        w = [model.numer[v] - alpha * model.denom[v] for v in range(n)]
        self.w = w
        self.w_tol = 1e-9 * (1.0 + sum(abs(x) for x in w))

        self.con_vars = [list(c.vars) for c in model.constraints]
        self.con_coeffs = [list(c.coeffs) for c in model.constraints]
        self.con_sense = [c.sense for c in model.constraints]
        self.con_rhs = [c.rhs for c in model.constraints]
        self.con_tol = [
            1e-9 * (1.0 + abs(c.rhs) + sum(abs(q) for q in c.coeffs)) for c in model.constraints
        ]
        self.var_cons: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for ci, c in enumerate(model.constraints):
            for v, q in zip(c.vars, c.coeffs):
                self.var_cons[v].append((ci, q))

        self.fixed_sum = [0.0] * len(model.constraints)
        self.pos_un = [sum(max(q, 0.0) for q in c.coeffs) for c in model.constraints]
        self.neg_un = [sum(min(q, 0.0) for q in c.coeffs) for c in model.constraints]

        self.value = [-1] * n
        self.fixed_w = 0.0
        self.pos_un_w = sum(max(x, 0.0) for x in w)

        # Selection rows (sum of a group == 1, unit coefficients) sharpen the
        # optimistic bound: a group contributes at most its best unfixed gain.
        group_of = [-1] * n
        g = 0
        for ci, c in enumerate(model.constraints):
            if c.sense == "==" and c.rhs == 1.0 and all(q == 1.0 for q in c.coeffs):
                claimed = False
                for v in c.vars:
                    if group_of[v] == -1:
                        group_of[v] = g
                        claimed = True
                if claimed:
                    g += 1
        for v in range(n):
            if group_of[v] == -1:
                group_of[v] = g
                g += 1

        order = sorted(range(n), key=lambda v: (group_of[v], v))
        self._bound_order = np.asarray(order)
        self._bound_w = np.asarray([w[v] for v in order])
        starts = [0]
        for k in range(1, n):
            if group_of[order[k]] != group_of[order[k - 1]]:
                starts.append(k)
        self._group_starts = np.asarray(starts)
        self._grouped = len(starts) < n
        self._unfixed_mask = np.ones(n, dtype=bool)

        self.branch_order = sorted(range(n), key=lambda v: (-abs(w[v]), v))
        self.trail: list[int] = []

    def _optimistic_bound(self) -> float:
        """Best possible parametric gain from the unfixed variables."""
        if not self._grouped:
            return self.pos_un_w
        masked = np.where(self._unfixed_mask[self._bound_order], self._bound_w, -np.inf)
        best = np.maximum.reduceat(masked, self._group_starts)
        return float(np.sum(np.maximum(best, 0.0)))

    def _assign(self, v: int, val: int, pending: list[tuple[int, int]]) -> bool:
        cur = self.value[v]
        if cur != -1:
            return cur == val
        self.value[v] = val
        self.trail.append(v)
        self._unfixed_mask[v] = False
        wv = self.w[v]
        if wv > 0.0:
            self.pos_un_w -= wv
        if val:
            self.fixed_w += wv
        for ci, q in self.var_cons[v]:
            if q > 0.0:
                self.pos_un[ci] -= q
            else:
                self.neg_un[ci] -= q
            if val:
                self.fixed_sum[ci] += q
        if self.fixed_w + self.pos_un_w < -self.w_tol:
            return False
        for ci, _ in self.var_cons[v]:
            if not self._check_constraint(ci, pending):
                return False
        return True

    def _check_constraint(self, ci: int, pending: list[tuple[int, int]]) -> bool:
        sense = self.con_sense[ci]
        rhs = self.con_rhs[ci]
        tol = self.con_tol[ci]
        fixed = self.fixed_sum[ci]
        if sense != ">=" and fixed + self.neg_un[ci] > rhs + tol:
            return False
        if sense != "<=" and fixed + self.pos_un[ci] < rhs - tol:
            return False
        for u, q in zip(self.con_vars[ci], self.con_coeffs[ci]):
            if self.value[u] != -1:
                continue
            lo_rest = self.neg_un[ci] - min(q, 0.0)
            hi_rest = self.pos_un[ci] - max(q, 0.0)
            can_zero = True
            can_one = True
            if sense != ">=":
                if fixed + q + lo_rest > rhs + tol:
                    can_one = False
                if fixed + lo_rest > rhs + tol:
                    can_zero = False
            if sense != "<=":
                if fixed + q + hi_rest < rhs - tol:
                    can_one = False
                if fixed + hi_rest < rhs - tol:
                    can_zero = False
            if not can_zero and not can_one:
                return False
            if not can_zero:
                pending.append((u, 1))
            elif not can_one:
                pending.append((u, 0))
        return True

    def _propagate(self, v: int, val: int) -> bool:
        pending: list[tuple[int, int]] = [(v, val)]
        while pending:
            u, uval = pending.pop()
            if not self._assign(u, uval, pending):
                return False
        return True

    def _undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            v = self.trail.pop()
            val = self.value[v]
            self.value[v] = -1
            self._unfixed_mask[v] = True
            wv = self.w[v]
            if wv > 0.0:
                self.pos_un_w += wv
            if val:
                self.fixed_w -= wv
            for ci, q in self.var_cons[v]:
                if q > 0.0:
                    self.pos_un[ci] += q
                else:
                    self.neg_un[ci] += q
                if val:
                    self.fixed_sum[ci] -= q

    def _all_satisfied(self) -> bool:
        if self.fixed_w < -self.w_tol:
            return False
        for ci in range(len(self.con_rhs)):
            fixed = self.fixed_sum[ci]
            rhs = self.con_rhs[ci]
            tol = self.con_tol[ci]
            sense = self.con_sense[ci]
            if sense != ">=" and fixed > rhs + tol:
                return False
            if sense != "<=" and fixed < rhs - tol:
                return False
        return True

    def _dfs(self, order_pos: int) -> bool:
        self.nodes += 1
        if self.deadline is not None and self.nodes % 256 == 0:
            if time.monotonic() > self.deadline:
                raise _Timeout
        if self.fixed_w + self._optimistic_bound() < -self.w_tol:
            return False
        while order_pos < self.n and self.value[self.branch_order[order_pos]] != -1:
            order_pos += 1
        if order_pos == self.n:
            return self._all_satisfied()
        v = self.branch_order[order_pos]
        first = 1 if self.w[v] > self.w_tol else 0
        for val in (first, 1 - first):
            mark = len(self.trail)
            if self._propagate(v, val) and self._dfs(order_pos + 1):
                return True
            self._undo(mark)
        return False

    def run(self) -> FeasibilityResult:
        limit = sys.getrecursionlimit()
        needed = self.n * 2 + 200
        if needed > limit:
            sys.setrecursionlimit(needed)
        try:
            if self._dfs(0):
                return FeasibilityResult(tuple(self.value))
            return FeasibilityResult(None)
        except _Timeout:
            return FeasibilityResult(None, timed_out=True)
        finally:
            if needed > limit:
                sys.setrecursionlimit(limit)


def feasible(model: SolverModel, alpha: float, time_budget: float | None = None) -> FeasibilityResult:
    """Decide exactly whether some assignment reaches ratio level alpha.

    Searches for binary x satisfying all constraints with
    sum((numer - alpha * denom) * x) >= 0.  With a time budget, an undecided
    probe is reported as timed out (and callers treat it as infeasible).
    """
    deadline = None if time_budget is None else time.monotonic() + time_budget
    return _Search(model, alpha, deadline).run()


def maximize_ratio(
    model: SolverModel,
    search: RatioSearchConfig | None = None,
    time_budget: float | None = None,
) -> RatioSearchResult:
    """Bisection for the best achievable ratio.

    Probes the lower bracket first and fails loudly if nothing is feasible
    there.  Each feasible probe raises the certified bound and keeps the
    best witness seen; each infeasible (or timed-out) probe lowers the upper
    bracket.  After `iters` halvings the certified bound is within
    (hi - lo) * 2**-iters of the true optimum.
    """
    cfg = search or RatioSearchConfig()
    first = feasible(model, cfg.lo, time_budget)
    if first.assignment is None:
        detail = "probe timed out" if first.timed_out else "no feasible assignment"
        raise ValueError(f"no feasible solution at ratio bound {cfg.lo}: {detail}")
    witness = first.assignment
    achieved = model.ratio_of(witness)
    lo, hi = cfg.lo, cfg.hi
    lb_only = False
    for _ in range(cfg.iters):
        mid = 0.5 * (lo + hi)
        if model.certifies(witness, mid):
            lo = mid
            continue
        probe = feasible(model, mid, time_budget)
        if probe.assignment is not None:
            lo = mid
            ratio = model.ratio_of(probe.assignment)
            if achieved is None or (ratio is not None and ratio > achieved):
                witness, achieved = probe.assignment, ratio
        else:
            hi = mid
            if probe.timed_out:
                lb_only = True
    return RatioSearchResult(alpha=lo, witness=witness, achieved=achieved, lower_bound_only=lb_only)

"""WCDFP upper bounds assembled from busy-period starting points.

Each possible busy-period start (the ``j``-th candidate release of a
higher-priority task ``i``, plus the analyzed release itself) contributes a
term bounded by ``min(P(BW >= (j-1) T_i + D_k), rho)``. Summing the terms
gives the basic bound; the improved bound replaces the ``m`` terms that use
``rho`` by ``1 - (1 - rho)^m``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .busy import BusyPeriodDist, bw_distribution, bw_tail, default_epsilon, EPSILON_FACTOR
from .critical import RhoResult, compute_rho
from .taskset import TaskSet

B1 = "B1"
B2 = "B2"


@dataclass(frozen=True)
class StartingPointTable:
    counts: Tuple[int, ...]  # n_i for i = 1..k-1

    @property
    def total(self) -> int:
        return sum(self.counts) + 1


def starting_point_counts(ts: TaskSet, k: int) -> StartingPointTable:
    """``n_i = ceil((D_i + ... + D_{k-1}) / T_i)`` for every higher-priority task."""
    ts.check_index(k)
    deadlines = [t.deadline for t in ts.hp(k)]
    counts = []
    for i, task in enumerate(ts.hp(k)):
        window = sum(deadlines[i:])
        counts.append(-(-window // task.period))
    return StartingPointTable(tuple(counts))


@dataclass(frozen=True)
class Term:
    i: int
    j: int
    busy_tail: float
    chosen: str


@dataclass(frozen=True)
class BoundReport:
    k: int
    rho: RhoResult
    table: StartingPointTable
    terms: Tuple[Term, ...]
    m: int
    bound_basic: float
    bound_improved: float
    method: str
    epsilon: float = 0.0
    busy: Optional[BusyPeriodDist] = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.table.total

    def to_dict(self) -> dict:
        out = {
            "k": self.k,
            "method": self.method,
            "rho": self.rho.to_dict(),
            "n_i": list(self.table.counts),
            "N": self.N,
            "m": self.m,
            "epsilon": self.epsilon,
            "terms": [
                {"i": t.i, "j": t.j, "busy_tail": t.busy_tail, "chosen": t.chosen} for t in self.terms
            ],
            "bound_basic": self.bound_basic,
            "bound_improved": self.bound_improved,
        }
        if self.busy is not None:
            out["busy"] = {"residual": self.busy.residual, "truncation": self.busy.truncation_point,
                           "support": len(self.busy.dist)}
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _classify(ts: TaskSet, k: int, rho: float, bw: BusyPeriodDist) -> List[Term]:
    d_k = ts.task(k).deadline
    table = starting_point_counts(ts, k)
    terms = []
    for i, (task, n_i) in enumerate(zip(ts.hp(k), table.counts), start=1):
        for j in range(1, n_i + 1):
            tail = bw_tail(bw, (j - 1) * task.period + d_k)
            terms.append(Term(i, j, tail, B1 if tail < rho else B2))
    return terms


def _union_of_rho(rho: float, m: int) -> float:
    """``1 - (1 - rho)^m``, computed without cancellation and never above ``m * rho``."""
    if rho >= 1.0:
        return 1.0
    if m == 1:
        return rho
    return min(-math.expm1(m * math.log1p(-rho)), m * rho)


def _assemble(ts, k, rho: RhoResult, bw: BusyPeriodDist, epsilon: float) -> BoundReport:
    ts.check_index(k)
    terms = _classify(ts, k, rho.rho, bw)
    b1 = math.fsum(t.busy_tail for t in terms if t.chosen == B1)
    # the analyzed release itself always counts as a rho term
    m = 1 + sum(1 for t in terms if t.chosen == B2)
    basic = min(1.0, b1 + m * rho.rho)
    improved = min(1.0, b1 + _union_of_rho(rho.rho, m))
    return BoundReport(
        k=k,
        rho=rho,
        table=starting_point_counts(ts, k),
        terms=tuple(terms),
        m=m,
        bound_basic=basic,
        bound_improved=improved,
        method=rho.method,
        epsilon=epsilon,
        busy=bw,
    )


def bound_basic(ts: TaskSet, k: int, rho: RhoResult, bw: BusyPeriodDist) -> BoundReport:
    """Sum of ``min(busy tail, rho)`` over all starting points (``bound_basic`` field)."""
    return _assemble(ts, k, rho, bw, 0.0)


def bound_improved(ts: TaskSet, k: int, rho: RhoResult, bw: BusyPeriodDist) -> BoundReport:
    """Busy tails below ``rho`` plus ``1 - (1 - rho)^m`` (``bound_improved`` field).

    Both bounds are always computed together; this and :func:`bound_basic`
    return the same report.
    """
    return _assemble(ts, k, rho, bw, 0.0)


def analyze(
    ts: TaskSet,
    k: Optional[int] = None,
    method: str = "convolution",
    epsilon_factor: float = EPSILON_FACTOR,
    epsilon: Optional[float] = None,
    horizon_cap: Optional[int] = None,
) -> BoundReport:
    """Full pipeline: rho, busy-period distribution, both bounds.

    Args:
        ts: task set in priority order.
        k: analyzed task (1-based); defaults to the lowest-priority task.
        method: ``"convolution"`` or ``"chernoff"`` for rho.
        epsilon_factor: truncation threshold as a multiple of rho.
        epsilon: explicit truncation threshold, overriding ``epsilon_factor``.
        horizon_cap: busy-period recursion cap; see :func:`bw_distribution`.
    """
    if k is None:
        k = len(ts)
    ts.check_index(k)
    rho = compute_rho(ts, k, method)
    eps = default_epsilon(rho.rho, epsilon_factor) if epsilon is None else epsilon
    bw = bw_distribution(ts, k, eps, horizon_cap)
    return _assemble(ts, k, rho, bw, eps)

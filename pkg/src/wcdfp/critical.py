"""Critical-instant deadline failure probability.

For the analyzed task ``k`` this computes

    rho = min over t in (0, D_k] of P(C_k + sum_{j<k} sum_{x=1}^{ceil(t/T_j)} C_j > t)

either exactly (convolution) or as a Chernoff upper bound.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .dist import DiscreteDist, convolve, split_at
from .taskset import TaskSet

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ChernoffOverflow(ArithmeticError):
    pass


@dataclass(frozen=True)
class RhoResult:
    rho: float
    argmin_t: int
    method: str
    per_point: Tuple[Tuple[int, float], ...] = field(default=(), repr=False)

    def per_point_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "prob"])
        for t, p in self.per_point:
            writer.writerow([t, f"{p:.11e}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rho": self.rho, "argmin_t": self.argmin_t, "method": self.method}


def candidate_points(ts: TaskSet, k: int) -> List[int]:
    """Right endpoints of the intervals on which every ``ceil(t/T_j)`` is constant.

    ``P(W(t) > t)`` is constant in the workload and decreasing in ``t`` on
    each such interval, so the minimum over ``(0, D_k]`` is attained here.
    """
    ts.check_index(k)
    d_k = ts.task(k).deadline
    points = {d_k}
    for task in ts.hp(k):
        points.update(range(task.period, d_k + 1, task.period))
    return sorted(points)


def _points(ts: TaskSet, k: int, sweep: str) -> List[int]:
    if sweep == "candidates":
        return candidate_points(ts, k)
    if sweep == "all":
        return list(range(1, ts.task(k).deadline + 1))
    raise ValueError(f"unknown sweep {sweep!r}")


def rho_convolution(ts: TaskSet, k: int, sweep: str = "candidates") -> RhoResult:
    """Exact critical-instant failure probability.

    The workload ``W(t)`` is built incrementally over ascending ``t``. Mass
    above ``D_k`` exceeds every remaining ``t`` and stays there after further
    convolution, so it is folded into a single overflow scalar.

    Args:
        ts: task set.
        k: 1-based analyzed task index.
        sweep: ``"candidates"`` (default) or ``"all"`` to evaluate every
            integer in ``(0, D_k]``; both give the same minimum.
    """
    ts.check_index(k)
    task_k = ts.task(k)
    cap = task_k.deadline
    hp = ts.hp(k)

    workload = task_k.pwcet
    for task in hp:
        workload = convolve(workload, task.pwcet)
    workload, above = split_at(workload, cap)
    overflow = above.mass
    counts = [1] * len(hp)

    best, best_t = math.inf, 0
    per_point = []
    for t in _points(ts, k, sweep):
        for j, task in enumerate(hp):
            need = -(-t // task.period)
            while counts[j] < need:
                workload = convolve(workload, task.pwcet)
                workload, above = split_at(workload, cap)
                overflow += above.mass
                counts[j] += 1
        _, exceed = split_at(workload, t)
        p = min(1.0, exceed.mass + overflow)
        per_point.append((t, p))
        if p < best:
            best, best_t = p, t
    return RhoResult(best, best_t, "convolution", tuple(per_point))


def _log_mgf(dist: DiscreteDist, s):
    """``log E[exp(s X)]`` for a scalar or 1-D array of ``s``."""
    s = np.asarray(s, dtype=np.float64)
    expo = np.log(dist.probs) + np.multiply.outer(s, dist.values.astype(np.float64))
    top = expo.max(axis=-1)
    return top + np.log(np.exp(expo - top[..., None]).sum(axis=-1))


def _golden_min(f, lo: float, hi: float, rel_width: float = 1e-6) -> Tuple[float, float]:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rel_width * max(abs(b), abs(a), 1e-300):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def chernoff_tail(
    terms: List[Tuple[DiscreteDist, int]], t: int, s0: float, exponents: int = 64
) -> Tuple[float, float]:
    """Chernoff bound on ``P(sum of independent copies >= t)``, hence also on ``> t``.

    Minimizes ``exp(-s t) * prod M_i(s)^{count_i}`` over a geometric grid
    ``s0 * 2^e`` followed by golden-section refinement in the bracketing
    cell. The log of the objective is convex in ``s``, so the refinement
    cannot leave the basin found on the grid.

    Args:
        terms: ``(distribution, number_of_copies)`` pairs.
        t: threshold.
        s0: smallest grid point.
        exponents: grid points are ``e = 0..exponents``.

    Returns:
        ``(bound, s)`` with the bound clamped to ``[0, 1]``.

    Raises:
        ChernoffOverflow: if the log-domain objective is not finite.
    """

    def objective(s):
        value = -np.asarray(s) * t + sum(c * _log_mgf(d, s) for d, c in terms)
        if not np.all(np.isfinite(value)):
            raise ChernoffOverflow("chernoff overflow")
        return value

    grid = s0 * 2.0 ** np.arange(exponents + 1)
    values = objective(grid)
    e = int(np.argmin(values))
    lo = grid[e - 1] if e > 0 else 0.0
    hi = grid[e + 1] if e < exponents else grid[e]
    s_best, v_best = float(grid[e]), float(values[e])
    if hi > lo:
        s_ref, v_ref = _golden_min(lambda s: float(objective(s)), float(lo), float(hi))
        if v_ref < v_best:
            s_best, v_best = s_ref, v_ref
    if v_best >= 0.0:
        return 1.0, 0.0
    return math.exp(v_best), s_best


def rho_chernoff(ts: TaskSet, k: int, sweep: str = "candidates", exponents: int = 64) -> RhoResult:
    """Chernoff upper bound on the critical-instant failure probability.

    Never below :func:`rho_convolution`: at each point the Chernoff value
    bounds ``P(W(t) >= t) >= P(W(t) > t)``.
    """
    ts.check_index(k)
    task_k = ts.task(k)
    hp = ts.hp(k)
    s0 = 1.0 / max(t.pwcet.max for t in ts.tasks[:k])
    best, best_t = math.inf, 0
    per_point = []
    for t in _points(ts, k, sweep):
        terms = [(task_k.pwcet, 1)] + [(task.pwcet, -(-t // task.period)) for task in hp]
        p, _ = chernoff_tail(terms, t, s0, exponents)
        per_point.append((t, p))
        if p < best:
            best, best_t = p, t
    return RhoResult(best, best_t, "chernoff", tuple(per_point))


def compute_rho(ts: TaskSet, k: int, method: str = "convolution") -> RhoResult:
    if method in ("convolution", "conv"):
        return rho_convolution(ts, k)
    if method == "chernoff":
        return rho_chernoff(ts, k)
    raise ValueError(f"unknown method {method!r}")

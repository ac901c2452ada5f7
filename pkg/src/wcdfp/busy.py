"""Busy-period length distribution under the synchronous periodic release pattern.

All tasks up to the analyzed one release at time 0; higher-priority tasks
then release periodically at their minimum inter-arrival time. Releases are
processed in time order: the current distribution is split at the release
time, the released job's pWCET is convolved into the part that is still
busy, and the two parts are merged again.

Job abortion is ignored here. Aborting can only shorten a busy period, so
the computed tails over-approximate the real ones.
"""

from __future__ import annotations

import heapq
import json
import warnings
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

from .dist import TOL, DiscreteDist, coalesce, convolve, split_at, tail_geq
from .taskset import TaskSet

EPSILON_FACTOR = 1e-4
EPSILON_FLOOR = 1e-16


class HorizonExhausted(RuntimeWarning):
    """The horizon cap was reached while the unstable mass was still >= epsilon."""


@dataclass(frozen=True)
class BusyPeriodDist:
    dist: DiscreteDist
    residual: float
    # release time of the first job not convolved; None when nothing was truncated
    truncation_point: Optional[int]
    exhausted: bool = False

    def tail(self, t: int) -> float:
        return bw_tail(self, t)

    def to_dict(self) -> dict:
        return {"dist": self.dist.pairs(), "residual": self.residual, "truncation": self.truncation_point}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "BusyPeriodDist":
        return cls(DiscreteDist.from_pairs(data["dist"]), float(data["residual"]), data["truncation"])


def default_epsilon(rho: float, factor: float = EPSILON_FACTOR) -> float:
    """``factor * rho``, or a small absolute floor when ``rho`` is zero."""
    eps = factor * rho
    return eps if eps > 0 else EPSILON_FLOOR


def default_horizon_cap(ts: TaskSet, k: int) -> int:
    return 64 * max(t.period for t in ts.tasks[:k])


def iter_releases(ts: TaskSet, k: int) -> Iterator[Tuple[int, int]]:
    """Unbounded ``(release_time, task_index)`` stream of higher-priority jobs after time 0."""
    heap = [(task.period, j) for j, task in enumerate(ts.hp(k), start=1)]
    heapq.heapify(heap)
    while heap:
        t, j = heapq.heappop(heap)
        yield t, j
        heapq.heappush(heap, (t + ts.task(j).period, j))


def release_sequence_xistar(ts: TaskSet, k: int, horizon: int) -> List[Tuple[int, int]]:
    """Releases ``(time, task)`` at multiples of each higher-priority period up to ``horizon``.

    Time-0 jobs are excluded; they seed the recursion. Ties are ordered by
    task index.
    """
    ts.check_index(k)
    out = []
    for t, j in iter_releases(ts, k):
        if t > horizon:
            break
        out.append((t, j))
    return out


@dataclass(frozen=True)
class RecursionStep:
    release: int
    task: int
    stable: DiscreteDist
    unstable: DiscreteDist


def iter_bw_steps(ts: TaskSet, k: int) -> Iterator[RecursionStep]:
    """Yield the recursion state before each release is convolved.

    ``stable`` holds the finalized busy-period lengths (``<= release``),
    ``unstable`` the lengths that the released job extends. The caller
    decides when to stop; the stream is infinite when ``k > 1``.
    """
    ts.check_index(k)
    current = ts.task(k).pwcet
    for task in ts.hp(k):
        current = convolve(current, task.pwcet)
    stable = DiscreteDist.empty()
    for t, j in iter_releases(ts, k):
        done, unstable = split_at(current, t)
        stable = coalesce(stable, done)
        yield RecursionStep(t, j, stable, unstable)
        current = convolve(unstable, ts.task(j).pwcet)


def bw_distribution(
    ts: TaskSet,
    k: int,
    epsilon: float,
    horizon_cap: Optional[int] = None,
) -> BusyPeriodDist:
    """Truncated distribution of the synchronous busy-period length.

    Stops before convolving the release at which the unstable mass drops
    below ``epsilon`` (or becomes zero), or the first release beyond
    ``horizon_cap``. The unstable mass at that point becomes the residual.

    Warns:
        HorizonExhausted: when stopped by the horizon cap with unstable mass
            still at or above ``epsilon``; the result is still safe.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    ts.check_index(k)
    if k == 1:
        return BusyPeriodDist(ts.task(1).pwcet, 0.0, None)
    if horizon_cap is None:
        horizon_cap = default_horizon_cap(ts, k)
    for step in iter_bw_steps(ts, k):
        u_mass = step.unstable.mass
        hit_cap = step.release > horizon_cap
        if u_mass < epsilon or len(step.unstable) == 0 or hit_cap:
            exhausted = hit_cap and not (u_mass < epsilon or len(step.unstable) == 0)
            if exhausted:
                warnings.warn(
                    f"horizon exhausted at t={step.release} with unstable mass {u_mass:.3e}",
                    HorizonExhausted,
                    stacklevel=2,
                )
            return BusyPeriodDist(step.stable, u_mass, step.release, exhausted)
    raise AssertionError("release stream ended unexpectedly")


def bw_tail(b: BusyPeriodDist, t: int) -> float:
    """Conservative ``P(BW >= t)``: stable tail plus all residual mass, clamped to [0, 1]."""
    return min(1.0, max(0.0, tail_geq(b.dist, t, b.residual)))


def check_mass(b: BusyPeriodDist, tol: float = TOL) -> bool:
    return abs(b.dist.mass + b.residual - 1.0) <= tol

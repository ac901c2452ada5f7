"""Sporadic task model and synthetic task-set generation.

Tasks are listed in priority order: the first task has the highest priority.
Task indices exposed to users are 1-based, matching the usual notation
``tau_1 ... tau_n``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .dist import TOL, DiscreteDist


@dataclass(frozen=True)
class Task:
    pwcet: DiscreteDist
    deadline: int
    period: int

    @property
    def utilization(self) -> float:
        """Mean-execution utilization."""
        return self.pwcet.mean() / self.period


@dataclass(frozen=True)
class TaskSet:
    tasks: Tuple[Task, ...]

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks)

    def task(self, i: int) -> Task:
        """1-based access."""
        if not 1 <= i <= len(self.tasks):
            raise IndexError(f"task index {i} out of range 1..{len(self.tasks)}")
        return self.tasks[i - 1]

    def hp(self, k: int) -> Tuple[Task, ...]:
        """Tasks with priority higher than task ``k``."""
        return self.tasks[: k - 1]

    def check_index(self, k: int) -> None:
        if not 1 <= k <= len(self.tasks):
            raise IndexError(f"analyzed task index {k} out of range 1..{len(self.tasks)}")

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "tasks": [
                {"T": t.period, "D": t.deadline, "pwcet": t.pwcet.pairs()} for t in self.tasks
            ]
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "TaskSet":
        try:
            raw = data["tasks"]
            tasks = [
                Task(DiscreteDist.from_pairs(t["pwcet"]), int(t["D"]), int(t["T"])) for t in raw
            ]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed task-set document: {exc}") from exc
        return cls(tuple(tasks))

    @classmethod
    def from_json(cls, text: str) -> "TaskSet":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "TaskSet":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def validate(ts: TaskSet) -> List[str]:
    """Return every violated model constraint; an empty list means the set is valid."""
    problems = []
    if len(ts) == 0:
        problems.append("task set is empty")
    for i, t in enumerate(ts.tasks, start=1):
        if t.deadline < 1:
            problems.append(f"task {i}: deadline must be >= 1")
        if t.period < 1:
            problems.append(f"task {i}: period must be >= 1")
        if t.deadline > t.period:
            problems.append(f"task {i}: deadline exceeds period")
        if len(t.pwcet) == 0 or abs(t.pwcet.mass - 1.0) > TOL:
            problems.append(f"task {i}: incomplete pWCET (mass {t.pwcet.mass:.12g})")
        if len(t.pwcet) and t.pwcet.min < 1:
            problems.append(f"task {i}: pWCET values must be >= 1")
    return problems


# ---------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class GenParams:
    n: int
    u_sum: float
    period_range: Tuple[int, int] = (1, 100)
    abnormal_ratio: float = 1.83
    abnormal_prob: float = 0.025
    seed: int = 0
    # allowed |sum(c^N/T) - u_sum| as a fraction of u_sum after integer rounding
    util_tolerance: float = 0.02
    # integer ticks per time unit of period_range
    time_scale: int = 1
    max_attempts: int = 100_000

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 < self.u_sum < 1:
            raise ValueError("u_sum must lie in (0, 1)")
        if not 0 < self.abnormal_prob < 1:
            raise ValueError("abnormal_prob must lie in (0, 1)")
        if self.abnormal_ratio < 1:
            raise ValueError("abnormal_ratio must be >= 1")
        lo, hi = self.period_range
        if lo < 1 or hi < lo:
            raise ValueError("period_range must satisfy 1 <= T_min <= T_max")
        if self.time_scale < 1:
            raise ValueError("time_scale must be >= 1")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; the bit stream is fixed by numpy for a given seed."""
    return np.random.Generator(np.random.PCG64(seed))


def uunifast(n: int, u_sum: float, rng: np.random.Generator) -> np.ndarray:
    """UUniFast: ``n`` utilizations drawn uniformly from the simplex summing to ``u_sum``."""
    if n < 1 or not 0 < u_sum <= 1:
        raise ValueError("need n >= 1 and 0 < u_sum <= 1")
    utils = np.empty(n)
    remaining = u_sum
    for i in range(1, n):
        nxt = remaining * rng.random() ** (1.0 / (n - i))
        utils[i - 1] = remaining - nxt
        remaining = nxt
    utils[n - 1] = remaining
    return utils


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def two_point_pwcet(c_normal: int, c_abnormal: int, p_abnormal: float) -> DiscreteDist:
    return DiscreteDist.from_pairs([(c_normal, 1.0 - p_abnormal), (c_abnormal, p_abnormal)])


def generate(params: GenParams, stats: Optional[dict] = None) -> TaskSet:
    """Generate an implicit-deadline task set with two-point pWCETs under RM priorities.

    Periods are log-uniform over ``period_range`` (times ``time_scale``
    ticks per unit, then rounded); ``c^N = round(U_i * T_i)``
    (at least 1) and ``c^A = round(r * c^N)``. A draw is rejected and the
    whole set redrawn when some task has ``c^A > T`` or when integer rounding
    moves the total utilization more than ``util_tolerance * u_sum`` away
    from the target.

    Args:
        params: generation parameters; ``params.seed`` fixes the result.
        stats: if given, rejection counters are accumulated into it under
            the keys ``"abnormal_exceeds_period"`` and ``"utilization_drift"``.

    Raises:
        RuntimeError: when ``max_attempts`` draws are all rejected.
    """
    rng = make_rng(params.seed)
    lo, hi = params.period_range
    counts = {"abnormal_exceeds_period": 0, "utilization_drift": 0}
    for _ in range(params.max_attempts):
        utils = uunifast(params.n, params.u_sum, rng)
        periods = np.exp(rng.uniform(math.log(lo), math.log(hi), size=params.n))
        rows = []
        bad = None
        for u, p in zip(utils, periods):
            period = max(1, round_half_up(float(p) * params.time_scale))
            c_n = max(1, round_half_up(float(u) * period))
            c_a = max(1, round_half_up(params.abnormal_ratio * c_n))
            if c_a > period:
                bad = "abnormal_exceeds_period"
                break
            rows.append((period, c_n, c_a))
        if bad is None:
            drift = abs(sum(c_n / period for period, c_n, _ in rows) - params.u_sum)
            if drift > params.util_tolerance * params.u_sum:
                bad = "utilization_drift"
        if bad is not None:
            counts[bad] += 1
            continue
        # stable sort keeps generation order among equal periods
        rows.sort(key=lambda row: row[0])
        tasks = tuple(
            Task(two_point_pwcet(c_n, c_a, params.abnormal_prob), period, period)
            for period, c_n, c_a in rows
        )
        if stats is not None:
            for key, v in counts.items():
                stats[key] = stats.get(key, 0) + v
        return TaskSet(tasks)
    raise RuntimeError(f"no valid task set after {params.max_attempts} attempts: {counts}")

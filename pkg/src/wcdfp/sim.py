"""Discrete-time fixed-priority preemptive scheduling simulator and DFP oracles.

A job that reaches its absolute deadline with work left is aborted. The
oracles here compute the deadline failure probability of one analyzed job
under a fixed release pattern:

* :func:`exact_dfp` enumerates every execution-time pattern (brute force).
* :func:`dfp_state_merge` is also exact but merges identical scheduler
  states between release/deadline events, which keeps it fast enough for
  release-pattern search.
* :func:`estimate_dfp` is a Monte-Carlo estimate.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .taskset import TaskSet

INF = math.inf
ENUM_GUARD = 10**7
Z95 = 1.959963984540054


class StateSpaceTooLarge(RuntimeError):
    pass


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class ReleasePattern:
    """Release times per task (index 0 is task 1) and the analyzed job ``(k, x)``, both 1-based."""

    releases: Tuple[Tuple[int, ...], ...]
    analyzed: Tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "releases", tuple(tuple(int(r) for r in rs) for rs in self.releases))
        object.__setattr__(self, "analyzed", tuple(int(a) for a in self.analyzed))

    @property
    def analyzed_release(self) -> int:
        k, x = self.analyzed
        return self.releases[k - 1][x - 1]

    def task_releases(self, i: int) -> Tuple[int, ...]:
        return self.releases[i - 1] if i <= len(self.releases) else ()

    def to_dict(self) -> dict:
        return {"releases": [list(r) for r in self.releases], "analyzed": list(self.analyzed)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ReleasePattern":
        return cls(tuple(tuple(r) for r in data["releases"]), tuple(data["analyzed"]))

    @classmethod
    def from_json(cls, text: str) -> "ReleasePattern":
        return cls.from_dict(json.loads(text))

    def check(self, ts: TaskSet) -> None:
        """Raise :class:`PatternError` unless the pattern is legal for ``ts``."""
        if len(self.releases) > len(ts):
            raise PatternError("pattern has more tasks than the task set")
        for i, rs in enumerate(self.releases, start=1):
            if any(r < 0 for r in rs):
                raise PatternError(f"task {i}: negative release time")
            gaps = np.diff(rs)
            if np.any(gaps < ts.task(i).period):
                raise PatternError(f"task {i}: releases closer than the minimum inter-arrival time")
        k, x = self.analyzed
        if not 1 <= k <= len(self.releases) or not 1 <= x <= len(self.releases[k - 1]):
            raise PatternError("analyzed job is not in the pattern")


def synchronous_pattern(ts: TaskSet, k: int, start: int = 0) -> ReleasePattern:
    """All tasks up to ``k`` release at ``start``; higher-priority tasks then release periodically."""
    ts.check_index(k)
    end = start + ts.task(k).deadline
    releases = [tuple(range(start, end, t.period)) for t in ts.hp(k)]
    releases.append((start,))
    return ReleasePattern(tuple(releases), (k, 1))


@dataclass(frozen=True)
class Job:
    task: int
    index: int
    release: int
    deadline: int


def pattern_jobs(ts: TaskSet, pattern: ReleasePattern) -> List[Job]:
    """All jobs in the pattern, in priority order (task, then release)."""
    jobs = []
    for i, rs in enumerate(pattern.releases, start=1):
        d = ts.task(i).deadline
        jobs.extend(Job(i, x, r, r + d) for x, r in enumerate(rs, start=1))
    return jobs


def relevant_jobs(ts: TaskSet, pattern: ReleasePattern) -> Tuple[List[Job], int]:
    """Jobs that can influence the analyzed job, and the analyzed job's position in the list.

    Only the analyzed task and higher-priority tasks matter, and only jobs
    released before the analyzed deadline. Other jobs of the analyzed task
    are finished or aborted before the analyzed release (constrained
    deadlines), so they are dropped as well.
    """
    k, x = pattern.analyzed
    d_a = pattern.analyzed_release + ts.task(k).deadline
    jobs = [j for j in pattern_jobs(ts, pattern) if j.task < k and j.release < d_a]
    jobs.append(Job(k, x, pattern.analyzed_release, d_a))
    return jobs, len(jobs) - 1


# ---------------------------------------------------------------------------
# single run with trace


@dataclass
class Trace:
    pattern: ReleasePattern
    exec_times: Dict[Tuple[int, int], int]
    response: Dict[Tuple[int, int], float]
    # running[u] is the (task, job) executing in [u, u+1), or None when idle
    running: List[Optional[Tuple[int, int]]]

    @property
    def analyzed_missed(self) -> bool:
        return self.response[self.pattern.analyzed] == INF

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_unit", "running_task", "running_job"])
        for u, job in enumerate(self.running):
            w.writerow([u, job[0], job[1]] if job else [u, "", ""])
        return buf.getvalue()


def simulate_once(
    ts: TaskSet,
    pattern: ReleasePattern,
    exec_times: Mapping[Tuple[int, int], int],
    horizon: Optional[int] = None,
) -> Trace:
    """Unit-step simulation of one execution-time pattern.

    Args:
        ts: task set (priority order).
        pattern: release pattern; every job needs an entry in ``exec_times``.
        exec_times: ``(task, job) -> execution time``, 1-based keys.
        horizon: last simulated instant; defaults to the latest absolute
            deadline of any released job.

    Returns:
        A :class:`Trace` with the response time of every job (``inf`` when
        aborted) and the job running in each time unit.
    """
    jobs = pattern_jobs(ts, pattern)
    if horizon is None:
        horizon = max((j.deadline for j in jobs), default=0)
    pending: Dict[int, List[Job]] = defaultdict(list)
    for j in jobs:
        pending[j.task].append(j)
    remaining = {(j.task, j.index): int(exec_times[(j.task, j.index)]) for j in jobs}
    response: Dict[Tuple[int, int], float] = {}
    running: List[Optional[Tuple[int, int]]] = []
    order = sorted(pending)
    for u in range(horizon):
        chosen = None
        for i in order:
            queue = pending[i]
            while queue:
                head = queue[0]
                key = (head.task, head.index)
                if head.release > u:
                    break
                if remaining[key] == 0:
                    response[key] = response.get(key, 0)
                    queue.pop(0)
                    continue
                if head.deadline <= u:
                    response[key] = INF
                    queue.pop(0)
                    continue
                break
            if chosen is None and queue and queue[0].release <= u:
                chosen = queue[0]
        if chosen is None:
            running.append(None)
            continue
        key = (chosen.task, chosen.index)
        running.append(key)
        remaining[key] -= 1
        if remaining[key] == 0:
            response[key] = u + 1 - chosen.release
            pending[chosen.task].pop(0)
    for i in order:
        for j in pending[i]:
            key = (j.task, j.index)
            if key in response:
                continue
            if remaining[key] == 0:
                response[key] = 0
            elif j.deadline <= horizon:
                response[key] = INF
    return Trace(pattern, dict(exec_times), response, running)


# ---------------------------------------------------------------------------
# vectorized runs


def simulate_batch(jobs: Sequence[Job], analyzed: int, exec_matrix: np.ndarray) -> np.ndarray:
    """Vectorized unit-step simulation; returns a boolean miss flag per row.

    ``exec_matrix`` has one row per execution-time pattern and one column per
    job in ``jobs`` (which must be in priority order). Simulation stops at
    the analyzed job's deadline.
    """
    rem = np.array(exec_matrix, dtype=np.int64, copy=True)
    if rem.ndim != 2 or rem.shape[1] != len(jobs):
        raise ValueError("exec_matrix must be (patterns, jobs)")
    rel = np.array([j.release for j in jobs])
    dl = np.array([j.deadline for j in jobs])
    a = jobs[analyzed]
    rows = np.arange(rem.shape[0])
    for u in range(int(rel.min()), a.deadline):
        expired = dl <= u
        if expired.any():
            rem[:, expired] = 0
        ready = (rem > 0) & (rel <= u)
        busy = ready.any(axis=1)
        if not busy.any():
            continue
        first = np.argmax(ready, axis=1)
        rem[rows[busy], first[busy]] -= 1
    return rem[:, analyzed] > 0


def _support_tables(ts: TaskSet, jobs: Sequence[Job]):
    values = [ts.task(j.task).pwcet.values for j in jobs]
    probs = [ts.task(j.task).pwcet.probs for j in jobs]
    return values, probs


def enumeration_size(ts: TaskSet, pattern: ReleasePattern) -> int:
    jobs, _ = relevant_jobs(ts, pattern)
    return math.prod(len(ts.task(j.task).pwcet) for j in jobs)


def exact_dfp(
    ts: TaskSet, pattern: ReleasePattern, horizon: Optional[int] = None, chunk: int = 1 << 15
) -> float:
    """Exact DFP of the analyzed job by enumerating every execution-time pattern.

    ``horizon`` is accepted for interface symmetry; the run always ends at
    the analyzed deadline, after which nothing can change the outcome.

    Raises:
        StateSpaceTooLarge: when more than ``10**7`` patterns would be enumerated.
    """
    pattern.check(ts)
    jobs, a = relevant_jobs(ts, pattern)
    values, probs = _support_tables(ts, jobs)
    sizes = [len(v) for v in values]
    total = math.prod(sizes)
    if total > ENUM_GUARD:
        raise StateSpaceTooLarge(f"state space too large: {total} execution patterns")
    varying = [c for c, s in enumerate(sizes) if s > 1]
    fixed_exec = np.array([v[0] for v in values], dtype=np.int64)
    fixed_prob = math.prod(float(p[0]) for c, p in enumerate(probs) if sizes[c] == 1)
    miss = 0.0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        ex = np.tile(fixed_exec, (idx.size, 1))
        pr = np.full(idx.size, fixed_prob, dtype=np.float64)
        rest = idx.copy()
        for c in reversed(varying):
            digit = rest % sizes[c]
            rest //= sizes[c]
            ex[:, c] = values[c][digit]
            pr *= probs[c][digit]
        missed = simulate_batch(jobs, a, ex)
        miss += math.fsum(pr[missed])
    return min(1.0, miss)


def dfp_state_merge(ts: TaskSet, pattern: ReleasePattern, max_states: int = 200_000) -> float:
    """Exact DFP of the analyzed job by forward propagation of merged scheduler states.

    Constrained deadlines allow at most one live job per task, so the state
    is the vector of remaining work per task. Between consecutive release or
    deadline instants the schedule is deterministic: work is consumed in
    priority order.

    Raises:
        StateSpaceTooLarge: when more than ``max_states`` distinct states coexist.
    """
    pattern.check(ts)
    jobs, a = relevant_jobs(ts, pattern)
    k = jobs[a].task
    d_a = jobs[a].deadline
    releases: Dict[int, List[int]] = defaultdict(list)
    deadlines: Dict[int, List[int]] = defaultdict(list)
    for j in jobs:
        releases[j.release].append(j.task)
        deadlines[j.deadline].append(j.task)
    events = sorted(set(releases) | {t for t in deadlines if t <= d_a})
    dists = {i: list(zip(ts.task(i).pwcet.values.tolist(), ts.task(i).pwcet.probs.tolist()))
             for i in range(1, k + 1)}

    states: Dict[Tuple[int, ...], float] = {(0,) * k: 1.0}
    miss = 0.0
    for e, g in enumerate(events):
        if g >= d_a:
            break
        # aborts at g
        if g in deadlines:
            aborted = deadlines[g]
            merged: Dict[Tuple[int, ...], float] = defaultdict(float)
            for s, p in states.items():
                s = list(s)
                for i in aborted:
                    s[i - 1] = 0
                merged[tuple(s)] += p
            states = merged
        # releases at g
        for i in releases.get(g, ()):
            branched: Dict[Tuple[int, ...], float] = defaultdict(float)
            for s, p in states.items():
                for c, q in dists[i]:
                    s2 = list(s)
                    s2[i - 1] = c
                    branched[tuple(s2)] += p * q
            states = branched
        if len(states) > max_states:
            raise StateSpaceTooLarge(f"{len(states)} scheduler states")
        # execute until the next event
        budget0 = min(events[e + 1], d_a) - g
        evolved: Dict[Tuple[int, ...], float] = defaultdict(float)
        for s, p in states.items():
            s = list(s)
            budget = budget0
            for i in range(k):
                if budget == 0:
                    break
                used = min(s[i], budget)
                s[i] -= used
                budget -= used
            if g >= jobs[a].release and s[k - 1] == 0:
                continue  # analyzed job finished
            evolved[tuple(s)] += p
        states = evolved
        if not states:
            break
    for s, p in states.items():
        if s[k - 1] > 0:
            miss += p
    return min(1.0, miss)


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class SimEstimate:
    dfp_hat: float
    trials: int
    ci_halfwidth: float
    seed: int


def ci_halfwidth(p_hat: float, n: int, degenerate: bool = False) -> float:
    """95% half-width: normal approximation, Wilson score when few successes or failures."""
    if degenerate:
        return 0.0
    if n * p_hat * (1 - p_hat) >= 9:
        return Z95 * math.sqrt(p_hat * (1 - p_hat) / n)
    z2 = Z95 * Z95
    centre = (p_hat + z2 / (2 * n)) / (1 + z2 / n)
    half = Z95 * math.sqrt(p_hat * (1 - p_hat) / n + z2 / (4 * n * n)) / (1 + z2 / n)
    return max(abs(centre + half - p_hat), abs(p_hat - (centre - half)))


def sample_exec(ts: TaskSet, jobs: Sequence[Job], rng: np.random.Generator, size: int) -> np.ndarray:
    """i.i.d. execution times, one column per job."""
    out = np.empty((size, len(jobs)), dtype=np.int64)
    u = rng.random((size, len(jobs)))
    for c, j in enumerate(jobs):
        d = ts.task(j.task).pwcet
        cdf = np.cumsum(d.probs)
        cdf[-1] = max(cdf[-1], 1.0)
        out[:, c] = d.values[np.minimum(np.searchsorted(cdf, u[:, c], side="right"), len(d) - 1)]
    return out


def estimate_dfp(
    ts: TaskSet, pattern: ReleasePattern, trials: int, seed: int, chunk: int = 8192
) -> SimEstimate:
    """Monte-Carlo DFP estimate.

    Trials are grouped in fixed chunks, each with its own stream seeded by
    ``(seed, chunk_index)``, so the result depends only on ``seed`` and
    ``trials``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pattern.check(ts)
    jobs, a = relevant_jobs(ts, pattern)
    misses = 0
    for c, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, c])))
        ex = sample_exec(ts, jobs, rng, size)
        misses += int(simulate_batch(jobs, a, ex).sum())
    p_hat = misses / trials
    degenerate = all(len(ts.task(j.task).pwcet) == 1 for j in jobs)
    return SimEstimate(p_hat, trials, ci_halfwidth(p_hat, trials, degenerate), seed)


# ---------------------------------------------------------------------------
# release-pattern search


@dataclass(frozen=True)
class SearchResult:
    pattern: ReleasePattern
    dfp: float
    exact: bool
    ci_halfwidth: float
    evaluated: int


def random_pattern(ts: TaskSet, k: int, rng: np.random.Generator) -> ReleasePattern:
    """Random legal pattern with the analyzed job released at ``2 * sum(D_1..D_k)``."""
    window = 2 * sum(t.deadline for t in ts.tasks[:k])
    end = window + ts.task(k).deadline
    releases = []
    for task in ts.hp(k):
        r = int(rng.integers(0, task.period))
        rs = []
        while r < end:
            rs.append(r)
            slack = 0 if rng.random() < 0.5 else int(rng.integers(1, task.period + 1))
            r += task.period + slack
        releases.append(tuple(rs))
    releases.append((window,))
    return ReleasePattern(tuple(releases), (k, 1))


def evaluate_pattern(
    ts: TaskSet, pattern: ReleasePattern, trials: int = 10_000, seed: int = 0,
    max_states: int = 200_000,
) -> Tuple[float, bool, float]:
    """``(dfp, exact, ci_halfwidth)``: exact when the state space allows, else Monte Carlo."""
    try:
        return dfp_state_merge(ts, pattern, max_states), True, 0.0
    except StateSpaceTooLarge:
        est = estimate_dfp(ts, pattern, trials, seed)
        return est.dfp_hat, False, est.ci_halfwidth


def pattern_search(
    ts: TaskSet, k: int, budget: int, seed: int, trials: int = 10_000, max_states: int = 200_000
) -> SearchResult:
    """Sample ``budget`` release patterns (the synchronous one first) and keep the worst."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    ts.check_index(k)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x5EA4C4])))
    best = None
    for b in range(budget):
        pattern = synchronous_pattern(ts, k) if b == 0 else random_pattern(ts, k, rng)
        dfp, exact, ci = evaluate_pattern(ts, pattern, trials, seed + b, max_states)
        if best is None or dfp > best[1]:
            best = (pattern, dfp, exact, ci)
    return SearchResult(best[0], best[1], best[2], best[3], budget)


# ---------------------------------------------------------------------------
# busy-period starting points on a trace


def busy_start_points(trace: Trace, ts: TaskSet) -> Dict[int, int]:
    """``{i: t_i}`` for ``i = 1..k``, reconstructed backwards from ``t_k = r_{k,x}``.

    ``t_i = min(t_{i+1}, r)`` where ``r`` is the release of the first job
    of task ``i`` that executes at or after ``t_{i+1}``.
    """
    k, _ = trace.pattern.analyzed
    t = {k: trace.pattern.analyzed_release}
    first_exec = _executed_units(trace)
    for i in range(k - 1, 0, -1):
        t_next = t[i + 1]
        t_i = t_next
        for x, r in enumerate(trace.pattern.task_releases(i), start=1):
            units = first_exec.get((i, x), ())
            if any(u >= t_next for u in units):
                t_i = min(t_next, r)
                break
        t[i] = t_i
    return t


def _executed_units(trace: Trace) -> Dict[Tuple[int, int], List[int]]:
    units: Dict[Tuple[int, int], List[int]] = defaultdict(list)
    for u, job in enumerate(trace.running):
        if job is not None:
            units[job].append(u)
    return units


def check_t1_invariants(trace: Trace, ts: TaskSet) -> List[str]:
    """Check the three structural properties of the busy-period starting points.

    * ``lemma1``: during ``[t_1, t_i)`` only tasks with priority above ``i`` run.
    * ``lemma2``: higher-priority jobs released before ``t_1`` never run at or after ``t_1``.
    * ``lemma3``: ``t_i + D_i > t_{i+1}``.

    Returns:
        Violation descriptions; empty when all hold.
    """
    k, _ = trace.pattern.analyzed
    t = busy_start_points(trace, ts)
    units = _executed_units(trace)
    problems = []
    for i in range(2, k + 1):
        for u in range(t[1], t[i]):
            job = trace.running[u] if u < len(trace.running) else None
            if job is None or job[0] >= i:
                problems.append(f"lemma1: unit {u} in [t_1, t_{i}) runs {job}")
                break
    for i in range(1, k):
        for x, r in enumerate(trace.pattern.task_releases(i), start=1):
            if r < t[1] and any(u >= t[1] for u in units.get((i, x), ())):
                problems.append(f"lemma2: job ({i},{x}) released at {r} runs after t_1={t[1]}")
    for i in range(1, k):
        if not t[i] + ts.task(i).deadline > t[i + 1]:
            problems.append(f"lemma3: t_{i} + D_{i} <= t_{i + 1}")
    return problems

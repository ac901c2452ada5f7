"""Command-line harness: ``wcdfp analyze | experiment | verify``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .bounds import analyze
from .busy import EPSILON_FACTOR
from .sim import pattern_search
from .taskset import GenParams, TaskSet, generate, validate

EXPERIMENT_COLUMNS = [
    "seed", "n", "u_sum", "rho", "N", "m", "bound_basic", "bound_improved", "runtime_ms",
    "errors", "t_min", "t_max", "ratio", "p_a", "method",
]
VERIFY_COLUMNS = [
    "seed", "n", "u_sum", "rho", "bound_improved", "dfp", "exact", "ci_halfwidth", "ratio", "ok",
]
# absolute slack for float round-off when an exact DFP equals the bound
FLOAT_SLACK = 1e-12


def fmt_prob(p: float) -> str:
    return f"{p:.11e}"


def sub_seed(seed: int, tag: str, index: int) -> int:
    digest = hashlib.blake2b(f"{seed}:{tag}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def method_name(m: str) -> str:
    return "convolution" if m in ("conv", "convolution") else m


@dataclass(frozen=True)
class ExperimentConfig:
    sets_per_point: int = 20
    n: Tuple[int, ...] = (5,)
    u_sum: Tuple[float, ...] = (0.6,)
    period_range: Tuple[int, int] = (1, 100)
    ratio: Tuple[float, ...] = (1.83,)
    p_a: Tuple[float, ...] = (0.025,)
    method: str = "convolution"
    seed: int = 0
    epsilon_factor: float = EPSILON_FACTOR
    time_scale: int = 1
    timing: bool = True
    jobs: int = 1

    def points(self):
        for n, u, r, pa in itertools.product(self.n, self.u_sum, self.ratio, self.p_a):
            for idx in range(self.sets_per_point):
                yield GenParams(
                    n=n, u_sum=u, period_range=self.period_range, abnormal_ratio=r,
                    abnormal_prob=pa, seed=sub_seed(self.seed, f"gen:{n}:{u}:{r}:{pa}", idx),
                    time_scale=self.time_scale,
                )


def _experiment_row(args) -> dict:
    params, cfg = args
    row = {
        "seed": params.seed, "n": params.n, "u_sum": params.u_sum, "rho": "", "N": "", "m": "",
        "bound_basic": "", "bound_improved": "", "runtime_ms": "", "errors": "",
        "t_min": params.period_range[0], "t_max": params.period_range[1],
        "ratio": params.abnormal_ratio, "p_a": params.abnormal_prob, "method": cfg.method,
    }
    start = time.perf_counter()
    try:
        ts = generate(params)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = analyze(ts, len(ts), cfg.method, cfg.epsilon_factor)
        row.update(
            rho=fmt_prob(rep.rho.rho), N=rep.N, m=rep.m,
            bound_basic=fmt_prob(rep.bound_basic), bound_improved=fmt_prob(rep.bound_improved),
        )
        if rep.busy is not None and rep.busy.exhausted:
            row["errors"] = "horizon exhausted"
    except Exception as exc:  # recorded per row, run continues
        row["errors"] = f"{type(exc).__name__}: {exc}"
    row["runtime_ms"] = f"{(time.perf_counter() - start) * 1e3:.1f}" if cfg.timing else "0"
    return row


def _pool_map(func, items, jobs: int):
    if jobs <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def run_experiment(cfg: ExperimentConfig) -> List[dict]:
    items = [(p, cfg) for p in cfg.points()]
    return _pool_map(_experiment_row, items, cfg.jobs)


def _verify_row(args) -> dict:
    ts, seed, cfg, budget, trials = args
    k = len(ts)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = analyze(ts, k, cfg.method, cfg.epsilon_factor)
    res = pattern_search(ts, k, budget, seed, trials)
    bound = rep.bound_improved
    ok = res.dfp <= bound + 3 * res.ci_halfwidth + FLOAT_SLACK
    ratio = res.dfp / bound if bound > 0 else (0.0 if res.dfp == 0 else float("inf"))
    return {
        "seed": seed, "n": k, "u_sum": f"{sum(t.utilization for t in ts):.6f}",
        "rho": fmt_prob(rep.rho.rho), "bound_improved": fmt_prob(bound), "dfp": fmt_prob(res.dfp),
        "exact": int(res.exact), "ci_halfwidth": fmt_prob(res.ci_halfwidth),
        "ratio": f"{ratio:.6f}", "ok": int(ok), "_ratio": ratio, "_ok": ok,
    }


def write_csv(rows: Sequence[dict], columns: Sequence[str], out) -> None:
    writer = csv.DictWriter(out, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


# ---------------------------------------------------------------------------


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("WCDFP_SEED")
    return int(env) if env else 0


def _open_out(path: Optional[str]):
    return open(path, "w", newline="") if path else sys.stdout


def cmd_analyze(args) -> int:
    try:
        ts = TaskSet.load(args.taskset)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read task set: {exc}", file=sys.stderr)
        return 2
    problems = validate(ts)
    k = args.k if args.k is not None else len(ts)
    if not 1 <= k <= len(ts):
        problems.append(f"k={k} out of range 1..{len(ts)}")
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return 2
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rep = analyze(ts, k, method_name(args.method), args.epsilon_factor)
    except Exception as exc:
        print(f"analysis error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = _open_out(args.out)
    try:
        out.write(rep.to_json(indent=2, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _config_from_args(args) -> ExperimentConfig:
    return ExperimentConfig(
        sets_per_point=args.sets,
        n=tuple(args.n),
        u_sum=tuple(args.usum),
        period_range=(args.tmin, args.tmax),
        ratio=tuple(args.ratio),
        p_a=tuple(args.pa),
        method=method_name(args.method),
        seed=_resolve_seed(args),
        epsilon_factor=args.epsilon_factor,
        time_scale=args.scale,
        timing=not args.no_timing,
        jobs=args.jobs,
    )


def cmd_experiment(args) -> int:
    cfg = _config_from_args(args)
    rows = run_experiment(cfg)
    out = _open_out(args.out)
    try:
        write_csv(rows, EXPERIMENT_COLUMNS, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_verify(args) -> int:
    cfg = _config_from_args(args)
    if args.taskset:
        ts = TaskSet.load(args.taskset)
        problems = validate(ts)
        if problems:
            for p in problems:
                print(f"invalid: {p}", file=sys.stderr)
            return 2
        items = [(ts, cfg.seed, cfg, args.budget, args.trials)]
    else:
        items = [(generate(p), p.seed, cfg, args.budget, args.trials) for p in cfg.points()]
    rows = _pool_map(_verify_row, items, cfg.jobs)
    out = _open_out(args.out)
    try:
        write_csv(rows, VERIFY_COLUMNS, out)
    finally:
        if out is not sys.stdout:
            out.close()
    worst = max(r["_ratio"] for r in rows)
    failures = sum(1 for r in rows if not r["_ok"])
    print(f"verified {len(rows)} task sets; max DFP/bound ratio {worst:.6f}; failures {failures}",
          file=sys.stderr)
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wcdfp", description="Busy-period WCDFP analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--method", choices=["conv", "convolution", "chernoff"], default="conv")
        p.add_argument("--epsilon-factor", type=float, default=EPSILON_FACTOR)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)

    def generation(p, sets, n, usum, tmin, tmax):
        p.add_argument("--sets", type=int, default=sets)
        p.add_argument("--n", type=int, nargs="+", default=[n])
        p.add_argument("--usum", type=float, nargs="+", default=[usum])
        p.add_argument("--tmin", type=int, default=tmin)
        p.add_argument("--tmax", type=int, default=tmax)
        p.add_argument("--ratio", type=float, nargs="+", default=[1.83])
        p.add_argument("--pa", type=float, nargs="+", default=[0.025])
        p.add_argument("--scale", type=int, default=1, help="integer ticks per period unit")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--no-timing", action="store_true", help="write runtime_ms as 0")

    p = sub.add_parser("analyze", help="bound the WCDFP of one task")
    p.add_argument("--taskset", required=True)
    p.add_argument("--k", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("experiment", help="generate and analyze task sets, one CSV row each")
    common(p)
    generation(p, 20, 5, 0.6, 1, 100)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="check bounds against simulated worst observed DFP")
    common(p)
    generation(p, 20, 3, 0.6, 1, 20)
    p.add_argument("--taskset", default=None)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

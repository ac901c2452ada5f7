"""Compare the basic and improved bounds on randomly generated task sets.

Task sets follow the usual synthetic recipe: UUniFast utilizations,
log-uniform periods in [1, 100], two-point execution times with the abnormal
value 1.83 times the normal one and probability 0.025.

Run: python demos/03_bounds_on_generated_sets.py [count]
"""

import sys
import warnings

from wcdfp import GenParams, analyze, generate

count = int(sys.argv[1]) if len(sys.argv) > 1 else 10
warnings.simplefilter("ignore")

print(f"{'seed':>4} {'rho':>10} {'N':>3} {'m':>3} {'N*rho':>10} {'basic':>10} {'improved':>10}")
for seed in range(count):
    ts = generate(GenParams(n=5, u_sum=0.6, seed=seed))
    rep = analyze(ts)
    rho = rep.rho.rho
    print(f"{seed:>4} {rho:10.3e} {rep.N:>3} {rep.m:>3} {min(1, rep.N * rho):10.3e} "
          f"{rep.bound_basic:10.3e} {rep.bound_improved:10.3e}")

"""Search release patterns for the worst observed failure probability and compare with the bound.

Uses a deliberately heavy abnormal probability so failures are frequent
enough to see.

Run: python demos/04_soundness_check.py
"""

import warnings

from wcdfp import GenParams, analyze, generate, pattern_search

warnings.simplefilter("ignore")

for seed in range(5):
    ts = generate(GenParams(n=3, u_sum=0.6, abnormal_prob=0.2, seed=seed))
    k = len(ts)
    rep = analyze(ts, k)
    res = pattern_search(ts, k, budget=100, seed=seed)
    kind = "exact" if res.exact else f"MC +/- {res.ci_halfwidth:.1e}"
    print(f"set {seed}: periods {[t.period for t in ts]}, worst DFP found {res.dfp:.4e} ({kind}), "
          f"bound {rep.bound_improved:.4e}, ratio {res.dfp / rep.bound_improved:.3f}")

"""Step through the busy-period length recursion for a small task set.

At each higher-priority release the current length distribution splits into
a stable part (the busy period already ended) and an unstable part that the
new job extends.

Run: python demos/02_busy_period_recursion.py
"""

from wcdfp import DiscreteDist, Task, TaskSet, bw_distribution, bw_tail
from wcdfp.busy import iter_bw_steps

ts = TaskSet((
    Task(DiscreteDist.from_pairs([(1, 0.8), (3, 0.2)]), deadline=4, period=4),
    Task(DiscreteDist.from_pairs([(2, 0.7), (3, 0.3)]), deadline=6, period=6),
    Task(DiscreteDist.from_pairs([(2, 0.5), (4, 0.5)]), deadline=15, period=15),
))
k = 3

for n, step in enumerate(iter_bw_steps(ts, k)):
    print(f"release of tau_{step.task} at t={step.release}: "
          f"stable mass {step.stable.mass:.4f}, unstable mass {step.unstable.mass:.4f}")
    if step.unstable.mass < 1e-6 or n == 15:
        break

b = bw_distribution(ts, k, epsilon=1e-6)
print(f"\ntruncated at t={b.truncation_point}, residual {b.residual:.3e}")
for t in (5, 10, 15, 20, 30):
    print(f"  P(BW >= {t:2d}) <= {bw_tail(b, t):.6f}")

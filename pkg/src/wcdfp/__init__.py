"""Safe WCDFP bounds for probabilistic fixed-priority preemptive scheduling."""

from .bounds import BoundReport, StartingPointTable, analyze, bound_basic, bound_improved, starting_point_counts
from .busy import BusyPeriodDist, bw_distribution, bw_tail, release_sequence_xistar
from .critical import RhoResult, candidate_points, rho_chernoff, rho_convolution
from .dist import DiscreteDist, coalesce, convolve, exceed_gt, split_at, tail_geq
from .sim import (
    ReleasePattern,
    SimEstimate,
    check_t1_invariants,
    dfp_state_merge,
    estimate_dfp,
    exact_dfp,
    pattern_search,
    simulate_once,
)
from .taskset import GenParams, Task, TaskSet, generate, uunifast, validate

__version__ = "0.1.0"

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcdfp.bounds import B1, B2, analyze, bound_basic, bound_improved, starting_point_counts
from wcdfp.busy import BusyPeriodDist
from wcdfp.critical import RhoResult
from wcdfp.dist import DiscreteDist
from wcdfp.sim import dfp_state_merge, synchronous_pattern
from wcdfp.taskset import GenParams, generate

from conftest import dd, make_taskset


def test_counts_examples(two_task):
    t = starting_point_counts(two_task, 2)
    assert t.counts == (1,) and t.total == 2
    ts = make_taskset((10, 5, [(1, 1.0)]), (10, 7, [(1, 1.0)]), (20, 20, [(1, 1.0)]))
    t = starting_point_counts(ts, 3)
    assert t.counts == (2, 1) and t.total == 4
    assert starting_point_counts(ts, 1).total == 1


def test_two_task_bounds(two_task):
    rep = analyze(two_task, 2)
    assert rep.rho.rho == 0.5
    assert rep.N == 2 and rep.m == 2
    assert [(t.i, t.j, t.chosen) for t in rep.terms] == [(1, 1, B2)]
    assert rep.terms[0].busy_tail == 1.0
    assert rep.bound_basic == 1.0
    assert rep.bound_improved == pytest.approx(0.75, abs=1e-15)
    assert rep.bound_improved >= 0.75


def test_single_task_bounds():
    ts = make_taskset((4, 4, [(2, 0.5), (5, 0.5)]))
    rep = analyze(ts, 1)
    assert rep.m == 1 and rep.N == 1
    assert rep.bound_basic == rep.bound_improved == 0.5


def test_zero_rho():
    ts = make_taskset((10, 10, [(1, 0.5), (2, 0.5)]), (20, 20, [(3, 0.5), (4, 0.5)]))
    rep = analyze(ts, 2)
    assert rep.rho.rho == 0.0
    assert rep.bound_basic == 0.0 and rep.bound_improved == 0.0


def test_all_terms_b2():
    ts = make_taskset((6, 6, [(2, 0.5), (5, 0.5)]), (5, 5, [(3, 1.0)]))
    rho = RhoResult(0.1, 5, "convolution")
    bw = BusyPeriodDist(DiscreteDist.empty(), 1.0, 0)  # every tail is 1
    rep = bound_improved(ts, 2, rho, bw)
    assert rep.m == rep.N == 2
    assert rep.bound_improved == pytest.approx(1 - 0.9**2, abs=1e-15)
    assert rep.bound_basic == pytest.approx(0.2)
    assert bound_basic(ts, 2, rho, bw) == rep


def test_b1_terms_use_busy_tail():
    ts = make_taskset((6, 6, [(2, 0.5), (5, 0.5)]), (5, 5, [(3, 1.0)]))
    rho = RhoResult(0.4, 5, "convolution")
    bw = BusyPeriodDist(dd((4, 0.9)), 0.1, 6)
    rep = bound_improved(ts, 2, rho, bw)
    assert [t.chosen for t in rep.terms] == [B1]
    assert rep.m == 1
    assert rep.bound_improved == pytest.approx(0.1 + 0.4)


def test_rho_one_gives_one():
    ts = make_taskset((3, 3, [(2, 0.5), (3, 0.5)]), (4, 4, [(3, 1.0)]))
    rep = analyze(ts, 2)
    assert rep.rho.rho == 1.0
    assert rep.bound_improved == 1.0 == rep.bound_basic


def test_json_report(two_task):
    data = json.loads(analyze(two_task, 2).to_json())
    assert data["N"] == 2 and data["m"] == 2 and data["n_i"] == [1]
    assert data["busy"]["truncation"] == 18


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.sampled_from([0.45, 0.6, 0.8]), st.integers(0, 2**32))
def test_report_invariants(n, u, seed):
    ts = generate(GenParams(n, u, (1, 100), seed=seed))
    rep = analyze(ts)
    assert 0 <= rep.bound_improved <= rep.bound_basic <= 1
    assert rep.m >= 1
    assert all(t.busy_tail < rep.rho.rho for t in rep.terms if t.chosen == B1)
    assert rep.bound_basic <= rep.N * rep.rho.rho + 1e-12
    assert analyze(ts) == rep
    cher = analyze(ts, method="chernoff")
    assert cher.rho.rho >= rep.rho.rho - 1e-12
    # the bound never falls below the synchronous-release DFP
    sync = synchronous_pattern(ts, len(ts))
    assert dfp_state_merge(ts, sync) <= rep.bound_improved + 1e-12

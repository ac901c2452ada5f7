import json

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from wcdfp.dist import (
    DiscreteDist,
    DistributionError,
    coalesce,
    convolve,
    convolve_power,
    exceed_gt,
    split_at,
    tail_geq,
)

from conftest import dd
from oracles import brute_convolve, pairs


@st.composite
def dists(draw, max_size=8, max_value=30, complete=False):
    values = draw(st.lists(st.integers(0, max_value), min_size=1, max_size=max_size, unique=True))
    weights = draw(st.lists(st.floats(0.01, 1.0), min_size=len(values), max_size=len(values)))
    scale = 1.0 if complete else draw(st.floats(0.1, 1.0))
    total = sum(weights)
    return DiscreteDist.from_pairs([(v, scale * w / total) for v, w in zip(values, weights)])


def test_convolve_identity():
    x = dd((2, 0.5), (5, 0.5))
    assert convolve(DiscreteDist.point(0), x) == x


def test_convolve_shift():
    assert convolve(dd((2, 0.5), (5, 0.5)), dd((3, 1.0))).allclose(dd((5, 0.5), (8, 0.5)))


def test_convolve_partial_worked_example():
    # enumeration of the 4 outcomes: 8+2, 8+3, 9+2, 9+3
    got = convolve(dd((8, 0.2), (9, 0.2)), dd((2, 0.5), (3, 0.5)))
    assert got.values.tolist() == [10, 11, 12]
    assert np.allclose(got.probs, [0.1, 0.2, 0.1], atol=1e-12)


def test_coalesce_worked_example():
    got = coalesce(dd((5, 0.18), (8, 0.02)), dd((5, 0.72), (6, 0.08)))
    assert got.values.tolist() == [5, 6, 8]
    assert np.allclose(got.probs, [0.9, 0.08, 0.02], rtol=0, atol=1e-12)


def test_coalesce_with_empty():
    x = dd((4, 0.3), (7, 0.2))
    assert coalesce(x, DiscreteDist.empty()) == x
    assert coalesce(DiscreteDist.empty(), x) == x


def test_coalesce_recursion_step():
    got = coalesce(dd((4, 0.1), (5, 0.5)), dd((10, 0.1), (11, 0.2), (12, 0.1)))
    assert got.values.tolist() == [4, 5, 10, 11, 12]
    assert np.allclose(got.probs, [0.1, 0.5, 0.1, 0.2, 0.1], atol=1e-12)


def test_coalesce_rejects_excess_mass():
    with pytest.raises(DistributionError):
        coalesce(dd((1, 0.7)), dd((2, 0.5)))


def test_split_worked_example():
    stable, unstable = split_at(dd((4, 0.1), (5, 0.5), (8, 0.2), (9, 0.2)), 7)
    assert stable.allclose(dd((4, 0.1), (5, 0.5)))
    assert unstable.allclose(dd((8, 0.2), (9, 0.2)))


def test_split_edges():
    d = dd((4, 0.1), (5, 0.5), (8, 0.4))
    low, high = split_at(d, 3)
    assert len(low) == 0 and high == d
    low, high = split_at(d, 8)
    assert low == d and len(high) == 0
    low, high = split_at(d, 100)
    assert low == d and len(high) == 0


def test_tail_queries():
    assert tail_geq(dd((2, 0.5), (5, 0.5)), 5, 0) == 0.5
    x = dd((2, 0.25), (5, 0.5))
    assert tail_geq(x, 0, 0) == pytest.approx(x.mass)
    assert tail_geq(dd((4, 0.1), (5, 0.5)), 6, 0.4) == pytest.approx(0.4)
    assert exceed_gt(dd((2, 0.5), (5, 0.5)), 5) == 0.0
    assert exceed_gt(dd((2, 0.5), (5, 0.5)), 4) == 0.5


@pytest.mark.parametrize(
    "pairs_, err",
    [
        ([(3, 0.5), (3.5, 0.5)], "integers"),
        ([(-1, 1.0)], "non-negative"),
        ([(1, 0.8), (2, 0.8)], "exceeds"),
    ],
)
def test_invalid_distributions(pairs_, err):
    with pytest.raises(DistributionError, match=err):
        DiscreteDist.from_pairs(pairs_)


def test_constructor_rejects_unsorted():
    with pytest.raises(DistributionError):
        DiscreteDist(np.array([3, 1]), np.array([0.5, 0.5]))


def test_json_roundtrip():
    d = dd((1, 0.25), (7, 0.75))
    text = d.to_json()
    assert json.loads(text) == [[1, 0.25], [7, 0.75]]
    assert DiscreteDist.from_json(text) == d


def test_merge_on_exact_value_only():
    d = DiscreteDist.from_pairs([(3, 0.1), (3, 0.2), (4, 0.3)])
    assert d.values.tolist() == [3, 4]
    assert d.probs[0] == pytest.approx(0.3)


def test_convolve_power():
    c = dd((1, 0.5), (2, 0.5))
    assert convolve_power(c, 0) == DiscreteDist.point(0)
    got = convolve_power(c, 3)
    assert got.values.tolist() == [3, 4, 5, 6]
    assert np.allclose(got.probs, [1 / 8, 3 / 8, 3 / 8, 1 / 8])


@settings(max_examples=200, deadline=None)
@given(dists(), dists())
def test_convolve_matches_double_loop(a, b):
    got = convolve(a, b)
    ref = brute_convolve(pairs(a), pairs(b))
    assert got.values.tolist() == [v for v, _ in ref]
    assert np.allclose(got.probs, [p for _, p in ref], rtol=0, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(dists(), dists(), dists())
def test_convolve_commutative_associative(a, b, c):
    assert convolve(a, b).allclose(convolve(b, a))
    assert convolve(convolve(a, b), c).allclose(convolve(a, convolve(b, c)))


@settings(max_examples=100, deadline=None)
@given(dists(), dists())
def test_mass_laws(a, b):
    assert convolve(a, b).mass == pytest.approx(a.mass * b.mass, abs=1e-9)
    assume(a.mass < 0.99)
    scaled = DiscreteDist(b.values, b.probs * (1 - a.mass))
    assert coalesce(a, scaled).mass == pytest.approx(a.mass + scaled.mass, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(dists(), st.integers(-2, 35))
def test_split_coalesce_identity(d, t):
    low, high = split_at(d, t)
    assert all(v <= t for v in low.values) and all(v > t for v in high.values)
    back = coalesce(low, high)
    assert np.array_equal(back.values, d.values)
    assert np.allclose(back.probs, d.probs, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(dists())
def test_tail_non_increasing(d):
    tails = [tail_geq(d, t) for t in range(-1, 33)]
    assert all(x >= y for x, y in zip(tails, tails[1:]))

"""Interval and circle-arc set arithmetic: examples plus randomized properties."""

import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from rmpe.intervals import (
    AmbiguityError,
    IntervalSet,
    TorusIntervalSet,
    torus_distance,
    unfold_candidates,
)

# ---------------------------------------------------------------- real line


def test_point_inflation():
    s = IntervalSet(((0.3, 0.3),)).neighborhood(0.1)
    assert s.n_components == 1
    assert s.intervals[0] == (pytest.approx(0.2), pytest.approx(0.4))


def test_neighborhood_merges_on_contact():
    s = IntervalSet(((0.1, 0.2), (0.21, 0.3))).neighborhood(0.01)
    assert s.n_components == 1
    lo, hi = s.intervals[0]
    assert lo == pytest.approx(0.09, abs=1e-15)
    assert hi == pytest.approx(0.31, abs=1e-15)


def test_measure_examples():
    assert IntervalSet(((0.1, 0.2), (0.5, 0.6))).measure() == pytest.approx(0.2)
    assert IntervalSet.empty().measure() == 0.0


def test_scale_translate_examples():
    assert IntervalSet(((0.2, 0.3),)).scale_translate(1.0, 0.5).intervals == ((0.7, 0.8),)
    s = IntervalSet(((0.2, 0.3),)).scale_translate(0.5, 0.0)
    assert s.intervals[0] == (pytest.approx(0.1), pytest.approx(0.15))
    with pytest.raises(ValueError):
        IntervalSet(((0.2, 0.3),)).scale_translate(0.0, 1.0)


def test_scale_translate_negative_factor_flips():
    s = IntervalSet(((0.2, 0.3),)).scale_translate(-2.0, 1.0)
    assert s.intervals == ((pytest.approx(0.4), pytest.approx(0.6)),)


def test_contains_and_intersects():
    assert IntervalSet(((0.0, 1.0),)).contains(IntervalSet(((0.2, 0.3),)))
    # closed intervals touching at an endpoint intersect
    assert IntervalSet(((0.0, 0.1),)).intersects(IntervalSet(((0.1, 0.2),)))
    assert not IntervalSet(((0.0, 0.1),)).intersects(IntervalSet(((0.2, 0.3),)))
    assert IntervalSet(((0.0, 0.1), (0.5, 0.6))).n_components == 2


def test_complement_within():
    s = IntervalSet(((2.0, 2.5), (3.0, 3.5)))
    c = s.complement_within(2.0, 4.0)
    assert c.intervals == ((2.5, 3.0), (3.5, 4.0))


def test_rejects_inverted_interval():
    with pytest.raises(ValueError):
        IntervalSet(((0.5, 0.1),))


# ---------------------------------------------------------------- torus


def test_torus_wraparound_inflation():
    s = TorusIntervalSet(((0.0, 0.02),)).neighborhood(0.05)
    assert s.n_components == 1
    lo, length = s.arcs[0]
    assert lo == pytest.approx(0.95)
    assert length == pytest.approx(0.12)
    assert s.contains_point(0.999) and s.contains_point(0.03)
    assert not s.contains_point(0.5)


def test_full_torus():
    assert TorusIntervalSet.full().measure() == 1.0
    assert TorusIntervalSet(((0.2, 0.5), (0.7, 0.5))).is_full
    big = TorusIntervalSet(((0.3, 0.6),)).neighborhood(0.3)
    assert big.is_full


def test_torus_translate_mod1():
    s = TorusIntervalSet(((0.9, 0.05),)).translate(0.2)
    lo, length = s.arcs[0]
    assert lo == pytest.approx(0.1)
    assert length == pytest.approx(0.05)


def test_torus_seam_touching_arcs_merge():
    s = TorusIntervalSet(((0.95, 0.05), (0.0, 0.05)))
    assert s.n_components == 1
    assert s.measure() == pytest.approx(0.1)


def test_torus_intersects_across_seam():
    a = TorusIntervalSet(((0.9, 0.1),))
    b = TorusIntervalSet(((0.0, 0.1),))
    assert a.intersects(b)  # touch at 0 == 1


def test_torus_contains_wrapping_arc():
    outer = TorusIntervalSet(((0.8, 0.4),))
    inner = TorusIntervalSet(((0.95, 0.1),))
    assert outer.contains(inner)
    assert not inner.contains(outer)


def test_torus_distance():
    assert torus_distance(0.01, 0.99) == pytest.approx(0.02)
    assert torus_distance(0.25, 0.75) == pytest.approx(0.5)


# ---------------------------------------------------------------- unfolding


def test_unfold_real_unique():
    [(piece, q)] = unfold_candidates([(0.02, 0.03)], 2.0, IntervalSet(((0.5, 0.56),)))
    assert q == 1
    assert piece.intervals == ((pytest.approx(0.52), pytest.approx(0.53)),)


def test_unfold_real_ambiguous():
    with pytest.raises(AmbiguityError) as err:
        unfold_candidates(
            [(0.02, 0.03)], 2.0, IntervalSet(((0.0, 0.06), (0.5, 0.56)))
        )
    assert sorted(err.value.candidates) == [0, 1]


def test_unfold_torus_brute_force():
    prior = TorusIntervalSet(((0.66, 0.03),))
    # independent brute force over the three shifts
    width = 0.005
    hits = [
        q
        for q in range(3)
        if prior.intersects(TorusIntervalSet((((0.01 + q / 3.0) % 1.0, width),)))
    ]
    assert hits == [2]
    [(piece, q)] = unfold_candidates([(0.01, 0.015)], 3.0, prior)
    assert q == 2
    lo, length = piece.arcs[0]
    assert lo == pytest.approx(0.01 + 2 / 3)
    assert length == pytest.approx(0.005)


def test_unfold_requires_integer_factor_on_torus():
    with pytest.raises(ValueError):
        unfold_candidates([(0.0, 0.01)], 2.5, TorusIntervalSet(((0.1, 0.2),)))


def test_unfold_rejects_wide_window():
    with pytest.raises(ValueError):
        unfold_candidates([(0.0, 0.6)], 2.0, IntervalSet(((0.0, 0.9),)))


# ---------------------------------------------------------------- properties

finite = st.floats(
    min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False
)
unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False, allow_infinity=False)


@st.composite
def real_sets(draw, max_parts=5, lo=-10.0, hi=10.0):
    n = draw(st.integers(0, max_parts))
    pairs = []
    for _ in range(n):
        a = draw(st.floats(min_value=lo, max_value=hi, allow_nan=False))
        b = draw(st.floats(min_value=0.0, max_value=(hi - lo) / 4, allow_nan=False))
        pairs.append((a, a + b))
    return IntervalSet(tuple(pairs))


@st.composite
def torus_sets(draw, max_parts=4):
    n = draw(st.integers(1, max_parts))
    arcs = []
    for _ in range(n):
        lo = draw(unit)
        length = draw(st.floats(min_value=0.0, max_value=0.3, allow_nan=False))
        arcs.append((lo, length))
    return TorusIntervalSet(tuple(arcs))


@given(real_sets())
def test_canonicalization_idempotent(s):
    assert IntervalSet(s.intervals).intervals == s.intervals


@given(torus_sets())
def test_torus_canonicalization_idempotent(s):
    assert TorusIntervalSet(s.arcs).arcs == s.arcs


@given(real_sets(), st.floats(min_value=0.0, max_value=2.0, allow_nan=False))
def test_neighborhood_measure_growth(s, eta):
    grown = s.neighborhood(eta)
    assert grown.measure() <= s.measure() + 2.0 * eta * s.n_components + 1e-9
    assert grown.contains(s)


@given(torus_sets(), st.floats(min_value=0.0, max_value=0.5, allow_nan=False))
def test_torus_neighborhood_measure_growth(s, eta):
    grown = s.neighborhood(eta)
    assert grown.measure() <= min(1.0, s.measure() + 2.0 * eta * s.n_components) + 1e-9
    assert grown.contains(s, tol=1e-12)


@st.composite
def small_midrange_torus(draw):
    """Sets well inside (0, 1) with small measure, where lift/wrap agree."""
    n = draw(st.integers(1, 3))
    arcs = []
    for _ in range(n):
        lo = draw(st.floats(min_value=0.15, max_value=0.4, allow_nan=False))
        length = draw(st.floats(min_value=0.0, max_value=0.02, allow_nan=False))
        arcs.append((lo, length))
    return TorusIntervalSet(tuple(arcs))


@given(
    small_midrange_torus(),
    st.floats(min_value=0.0, max_value=0.01, allow_nan=False),
    st.floats(min_value=0.05, max_value=0.2, allow_nan=False),
)
def test_torus_ops_match_lifted_real_ops(ts, eta, shift):
    """Away from the seam, circle operations agree with plain real ones."""
    rs = IntervalSet(tuple((lo, lo + length) for lo, length in ts.arcs))
    grown_t = ts.neighborhood(eta).translate(shift)
    grown_r = rs.neighborhood(eta).scale_translate(1.0, shift)
    assert grown_t.n_components == grown_r.n_components
    for (lo_t, len_t), (lo_r, hi_r) in zip(grown_t.arcs, grown_r.intervals):
        assert lo_t == pytest.approx(lo_r, abs=1e-12)
        assert len_t == pytest.approx(hi_r - lo_r, abs=1e-12)


@given(
    st.floats(min_value=0.01, max_value=0.89, allow_nan=False),
    st.floats(min_value=1.0, max_value=50.0, allow_nan=False),
    st.floats(min_value=1e-4, max_value=5e-3, allow_nan=False),
)
def test_unfold_round_trip(lam, factor, half_width):
    """If the prior holds the phase and the window holds its alias, the
    unfolded window holds the phase again."""
    assume(half_width < 0.4 / factor)
    prior = IntervalSet(((lam - 1e-3, lam + 1e-3),))
    alias = (lam * factor) % 1.0
    window = (alias / factor - half_width, alias / factor + half_width)
    try:
        [(piece, _)] = unfold_candidates([window], factor, prior)
    except AmbiguityError:
        assume(False)
    assert piece.contains_point(lam, tol=1e-12)


@given(torus_sets(), torus_sets())
def test_intersection_symmetry_and_bound(a, b):
    ab = a.intersection(b)
    ba = b.intersection(a)
    assert ab.measure() == pytest.approx(ba.measure(), abs=1e-12)
    assert ab.measure() <= min(a.measure(), b.measure()) + 1e-12
    if not ab.is_empty:
        assert a.intersects(b)

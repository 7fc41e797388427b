import numpy as np
import pytest
from hypothesis import given, strategies as st

from zoomtherm.intervals import (Interval, IntervalUnion, hull, is_subset, linked,
                                 overlap_length, same_interval)

unit = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def unions(draw, n=6):
    k = draw(st.integers(0, n))
    lo = np.array([draw(unit) for _ in range(k)])
    ln = np.array([draw(st.floats(0.0, 0.3)) for _ in range(k)])
    return IntervalUnion(lo, lo + ln, (0.0, 1.0))


def test_linked_examples():
    assert linked(Interval(0, 0.5), Interval(0.3, 0.8))
    assert not linked(Interval(0, 0.5), Interval(0.1, 0.2))
    assert not linked(Interval(0, 0.2), Interval(0.4, 0.6))
    assert not linked(Interval(0, 0.2), Interval(0.2, 0.6))


def test_circle_normalisation_and_wrap():
    iv = Interval(0.9, 1.2, 1.0)
    assert iv.wraps and iv.lo == pytest.approx(0.9)
    assert iv.pieces() == [(0.9, 1.0), (0.0, pytest.approx(0.2))]
    assert Interval(-0.1, 0.1, 1.0).lo == pytest.approx(0.9)
    assert iv.contains(0.05) and not iv.contains(0.5)
    assert overlap_length(iv, Interval(0.0, 0.1, 1.0)) == pytest.approx(0.1)


def test_same_interval_mod_period():
    assert same_interval(Interval(0.2, 0.3, 1.0), Interval(1.2, 1.3, 1.0))
    assert not same_interval(Interval(0.2, 0.3), Interval(0.2, 0.31))


def test_subset_hull():
    assert is_subset(Interval(0.2, 0.3), Interval(0.1, 0.4))
    assert not is_subset(Interval(0.2, 0.5), Interval(0.1, 0.4))
    h = hull([Interval(0.2, 0.3), Interval(0.5, 0.6)])
    assert h.as_tuple() == (0.2, 0.6)


def test_reversed_interval_rejected():
    with pytest.raises(ValueError):
        Interval(0.5, 0.4)


@given(st.tuples(unit, unit), st.tuples(unit, unit))
def test_linked_is_symmetric(a, b):
    A, B = Interval(min(a), max(a)), Interval(min(b), max(b))
    assert linked(A, B) == linked(B, A)


@given(unions(), unions())
def test_union_measure_inclusion_exclusion(u, v):
    both = u.union(v).measure + u.intersect(v).measure
    assert both == pytest.approx(u.measure + v.measure, abs=1e-12)


@given(unions())
def test_complement_measure(u):
    assert u.complement().measure == pytest.approx(1.0 - u.measure, abs=1e-12)
    assert u.intersect(u.complement()).measure == pytest.approx(0.0, abs=1e-12)


@given(unions(), unions())
def test_subtract_is_disjoint_from_subtrahend(u, v):
    d = u.subtract(v)
    assert d.intersect(v).measure == pytest.approx(0.0, abs=1e-12)
    assert d.measure <= u.measure + 1e-12


def test_wrapping_union_rejoins():
    u = IntervalUnion.from_intervals([Interval(0.9, 1.1, 1.0)], (0.0, 1.0), 1.0)
    ivs = u.to_intervals()
    assert len(ivs) == 1 and ivs[0].wraps
    assert u.component_containing(0.95).length == pytest.approx(0.2)

from dataclasses import replace

import numpy as np
import pytest

from zoomtherm import acceptance as acc
from zoomtherm.errors import PreconditionError
from zoomtherm.inducing import (InducedScheme, SchemeElement, condition_star_report,
                                first_return_scheme, prune_condition_star, verify_adapted,
                                verify_markov)
from zoomtherm.intervals import Interval
from zoomtherm.nested import Hole
from zoomtherm.zooming import ZoomingContraction, detect_hyperbolic_times

HALF = Interval(0.0, 0.5, 1.0)


def test_full_shift_is_its_own_scheme(doubling):
    s = first_return_scheme(doubling, Interval(0.0, 1.0, 1.0), None, 1)
    assert len(s) == 2 and set(s.taus) == {1}
    rep = verify_markov(s)
    assert rep["passed"]
    assert rep["generating"]["depth2_max"] == pytest.approx(rep["generating"]["depth1_max"] / 2)


def test_half_base_first_returns(doubling, frozen):
    s = first_return_scheme(doubling, HALF, None, 12)
    counts = {}
    for e in s.elements:
        counts[e.tau] = counts.get(e.tau, 0) + 1
        assert e.interval.length == pytest.approx(frozen["first_return_lengths"][str(e.tau)])
    assert counts == {int(t): c for t, c in frozen["first_return_counts"].items()}
    kac = float(np.sum(s.taus * s.lengths)) / HALF.length
    assert kac == pytest.approx(frozen["kac_sum_tau_12"], abs=1e-12)
    assert s.unresolved_mass == pytest.approx(2.0 ** -13, abs=1e-15)
    assert verify_markov(s)["passed"]


def test_quadratic_scheme_markov():
    s = acc.quadratic_scheme()
    rep = verify_markov(s)
    assert rep["passed"] and rep["n_elements"] > 1000
    assert condition_star_report(s)["passed"]


def test_quadratic_inducing_times_are_zooming_times():
    s = acc.quadratic_scheme()
    c = s.contraction
    for e in s.elements[::25]:
        for x in np.linspace(e.interval.lo, e.interval.hi, 7)[1:-1]:
            assert e.tau in detect_hyperbolic_times(s.fmap, x, e.tau, c.sigma, c.epsilon).times


def test_corrupted_element_breaks_disjointness(doubling):
    s = first_return_scheme(doubling, HALF, None, 8)
    k = int(np.flatnonzero(s.taus == 1)[0])
    e = s.elements[k]
    grown = replace(e, interval=Interval(e.interval.lo, e.interval.hi + 0.01 * e.interval.length,
                                         1.0))
    bad = replace(s, elements=s.elements[:k] + (grown,) + s.elements[k + 1:])
    rep = verify_markov(bad)
    assert not rep["disjoint_interiors"]["passed"]
    assert any(k in pair for pair in rep["disjoint_interiors"]["witnesses"])


def _synthetic_scheme(doubling):
    # [0, 1/4) returns at once; [1/4, 9/32) passes strictly inside it at step 2
    def itin(lo, hi, word):
        out = []
        for b in word:
            out.append(Interval(lo, hi, 1.0))
            lo, hi = doubling.branches[b].forward(lo), doubling.branches[b].forward(hi)
        return tuple(out)
    p1 = SchemeElement(Interval(0.0, 0.25, 1.0), 1, (0,), itin(0.0, 0.25, (0,)))
    p2 = SchemeElement(Interval(0.25, 9 / 32, 1.0), 4, (0, 1, 0, 0),
                       itin(0.25, 9 / 32, (0, 1, 0, 0)))
    return InducedScheme(doubling, HALF, (p1, p2), 4, None, mode="synthetic")


def test_prune_removes_strictly_nested(doubling):
    s = _synthetic_scheme(doubling)
    assert verify_markov(s)["full_branch"]["passed"]
    pruned = prune_condition_star(s)
    assert pruned.removed == (1,) and len(pruned) == 1


def test_prune_leaves_first_returns_alone(doubling):
    for s in (first_return_scheme(doubling, Interval(0.0, 1.0, 1.0), None, 1),
              first_return_scheme(doubling, HALF, None, 12)):
        assert prune_condition_star(s) is s
        assert condition_star_report(s)["passed"]


def test_adapted_checks(doubling):
    s = _synthetic_scheme(doubling)
    assert verify_adapted(s, Hole.from_intervals([]))["passed"]
    rep = verify_adapted(s, Hole.from_intervals([Interval(0.5, 0.52, 1.0)]))
    assert not rep["passed"] and (1, 1) in rep["violations"]
    for sch in acc.hole_schemes():
        assert verify_adapted(sch)["n_violations"] == 0


def test_zooming_base_size_precondition(doubling):
    with pytest.raises(PreconditionError):
        first_return_scheme(doubling, Interval(0.1, 0.4, 1.0), ZoomingContraction(0.5, 0.25), 4)

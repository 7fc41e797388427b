import numpy as np
import pytest
from hypothesis import given, strategies as st

from zoomtherm.errors import PreconditionError
from zoomtherm.intervals import Interval, is_subset
from zoomtherm.nested import (Chain, RegularPreImage, build_hole, chain_members, enumerate_chains,
                              enumerate_preimages, nested_shrink, survivor_iterate,
                              validate_chain, verify_nested, Hole)
from zoomtherm.zooming import ZoomingContraction

CON = ZoomingContraction(sigma=0.5, delta=0.25, epsilon=0.5)


def test_preimage_counts_and_lengths(doubling):
    pre = enumerate_preimages(doubling, [Interval(0.3, 0.6, 1.0)], 2)
    by_order = {1: [], 2: []}
    for p in pre:
        by_order[p.order].append(p.interval.length)
    assert len(by_order[1]) == 2 and len(by_order[2]) == 4
    assert by_order[1] == pytest.approx([0.15] * 2)
    assert by_order[2] == pytest.approx([0.075] * 4)
    assert len(enumerate_preimages(doubling, [Interval(0.0, 1.0, 1.0)], 3)) == 14


def test_quadratic_preimages_map_onto_target(quadratic):
    target = Interval(-0.5, 0.5)
    for p in enumerate_preimages(quadratic, [target], 2):
        x = np.array([p.interval.lo, p.interval.hi])
        for _ in range(p.order):
            x = quadratic(x)
        assert sorted(x) == pytest.approx([-0.5, 0.5], abs=1e-9)


def test_chains_revalidate(doubling):
    for base in (Interval(0.45, 0.55, 1.0), Interval(0.3, 0.6, 1.0)):
        pre = enumerate_preimages(doubling, [base], 3)
        chains = enumerate_chains(base, pre, 4)
        assert all(validate_chain(base, c) == [] for c in chains)
    assert chains, "base (0.3, 0.6) has chains"


def test_chain_members_match_enumeration(doubling):
    base = Interval(0.3, 0.6, 1.0)
    pre = enumerate_preimages(doubling, [base], 4)
    listed = {p.key for c in enumerate_chains(base, pre, len(pre)) for p in c.elements}
    reach = {pre[k].key for k in chain_members(base, pre)}
    assert listed == reach


def test_far_and_single_chains():
    base = Interval(0.4, 0.6)
    far = [RegularPreImage(Interval(0.8, 0.9), 1, 0, (1,))]
    assert enumerate_chains(base, far, 3) == []
    edge = [RegularPreImage(Interval(0.55, 0.7), 2, 0, (0, 1))]
    chains = enumerate_chains(base, edge, 3)
    assert len(chains) == 1 and len(chains[0]) == 1


def test_validate_chain_flags_violations():
    base = Interval(0.4, 0.6)
    a = RegularPreImage(Interval(0.55, 0.7), 2, 0, (0, 1))
    b = RegularPreImage(Interval(0.65, 0.8), 1, 0, (1,))
    assert "orders" in validate_chain(base, Chain((a, b)))
    assert "distinct" in validate_chain(base, Chain((a, a)))


def test_single_ball_keeps_inner_ball(doubling):
    nc = nested_shrink(doubling, [(1 / 3, 0.05)], 0.5, 12, CON)
    a = nc.shrunken[0]
    assert is_subset(Interval(1 / 3 - 0.025, 1 / 3 + 0.025, 1.0), a)
    assert nc.certificates[0]["contains_inner_ball"]


def test_untouched_ball_is_unchanged(doubling):
    nc = nested_shrink(doubling, [(0.33, 0.03)], 0.5, 1, CON)
    assert nc.shrunken[0].as_tuple() == pytest.approx((0.30, 0.36))


def test_ball_preconditions(doubling):
    with pytest.raises(PreconditionError):
        nested_shrink(doubling, [(0.3, 0.1)], 0.5, 4, CON)
    with pytest.raises(PreconditionError):
        nested_shrink(doubling, [(0.3, 0.04), (0.32, 0.04)], 0.5, 4, CON)


@pytest.fixture(scope="module")
def two_balls(doubling):
    return nested_shrink(doubling, [(1 / 3, 0.04), (2 / 3, 0.04)], 0.5, 12, CON)


def test_two_ball_collection_is_nested(doubling, two_balls):
    rep = verify_nested(doubling, two_balls)
    assert rep["passed"]
    assert rep["n_linked_distinct_orders"] == 0
    assert rep["n_same_order_overlaps"] == 0
    assert rep["n_preimages"] > 10000


def test_hole_variants(two_balls):
    assert build_hole(two_balls, []).is_empty
    h1 = build_hole(two_balls, [1])
    assert h1.sandwich_ok
    assert h1.region == (two_balls.shrunken[1],)
    both = build_hole(two_balls, [0, 1])
    assert both.region == two_balls.shrunken
    with pytest.raises(PreconditionError):
        build_hole(two_balls, [5])


def test_survivor_masses(doubling, frozen):
    empty = Hole.from_intervals([])
    assert survivor_iterate(doubling, empty, 7).mass == pytest.approx(1.0)
    quarter = Hole.from_intervals([Interval(0.25, 0.5, 1.0)])
    for n in range(0, 8):
        assert survivor_iterate(doubling, quarter, n).mass == pytest.approx(
            frozen["quarter_hole_masses"][n], abs=1e-14)
    half = Hole.from_intervals([Interval(0.0, 0.5, 1.0)])
    assert survivor_iterate(doubling, half, 5).mass == pytest.approx(2.0 ** -6, abs=1e-15)


@given(st.floats(0.0, 0.9), st.floats(0.01, 0.1))
def test_survivor_mass_nonincreasing(doubling, lo, width):
    hole = Hole.from_intervals([Interval(lo, lo + width, 1.0)])
    series = survivor_iterate(doubling, hole, 8, series=True)
    masses = [s.mass for s in series]
    assert all(b <= a + 1e-14 for a, b in zip(masses, masses[1:]))

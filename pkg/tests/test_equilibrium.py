import math

import numpy as np
import pytest

from zoomtherm import acceptance as acc
from zoomtherm import equilibrium as eq
from zoomtherm.dynamics import piecewise_affine
from zoomtherm.errors import PreconditionError
from zoomtherm.inducing import first_return_scheme
from zoomtherm.intervals import Interval
from zoomtherm.nested import Hole
from zoomtherm.potentials import PotentialSpec
from zoomtherm.thermo import gibbs_eigendata, induced_potential

LOG2 = math.log(2)


@pytest.fixture(scope="module")
def half():
    return acc.half_base_scheme()


@pytest.mark.parametrize("t", [-2.0, -1.0, -0.5, 0.5, 1.0])
def test_pressure_line_on_full_shift(frozen, t):
    res = eq.pressure_solve(acc.doubling(), acc.full_shift_scheme(), PotentialSpec.geometric(t),
                            tol=1e-12)
    assert res.p_star == pytest.approx(frozen["pressure_line"][f"{t:g}"], abs=1e-10)


def test_entropy_from_first_return_counts(frozen):
    f = acc.doubling()
    s = first_return_scheme(f, Interval(0.0, 0.5, 1.0), None, 12)
    res = eq.pressure_solve(f, s, PotentialSpec(), tol=1e-13)
    # the oracle root uses the exact counts N(tau) = 1 for every tau
    assert res.p_star == pytest.approx(frozen["first_return_entropy_root"], abs=2e-4)
    res_full = eq.pressure_solve(f, acc.half_base_scheme(), PotentialSpec(), tol=1e-12)
    assert res_full.p_star == pytest.approx(LOG2, abs=1e-8)


def test_explicit_bracket_without_sign_change():
    doubling = acc.doubling()
    with pytest.raises(PreconditionError):
        eq.pressure_solve(doubling, acc.full_shift_scheme(), PotentialSpec(), bracket=(2.0, 3.0))
    with pytest.raises(PreconditionError):
        eq.pressure_solve(doubling, acc.full_shift_scheme(), PotentialSpec(), bracket=(1.0, 0.0))


def test_t0_doubling_and_ternary(doubling, frozen):
    leb = eq.GridMeasure.lebesgue(doubling, 6)
    assert eq.geometric_t0(doubling, [leb]) == pytest.approx(frozen["t0_doubling"], abs=1e-9)
    tern = piecewise_affine([0.0, 1 / 3, 2 / 3, 1.0], name="ternary")
    leb3 = eq.GridMeasure.lebesgue(tern, 6)
    assert eq.geometric_t0(tern, [leb3]) == pytest.approx(frozen["t0_ternary"], abs=1e-9)


def test_t0_rejects_zero_lyapunov(doubling):
    ident = piecewise_affine([0.0, 1.0], name="identity")
    with pytest.raises(PreconditionError):
        eq.geometric_t0(ident, [eq.GridMeasure.lebesgue(ident, 4)], entropy=0.0)
    with pytest.raises(PreconditionError):
        eq.geometric_t0(doubling, [])


def test_abramov_on_half_base(half, frozen):
    res = eq.equilibrium(half.fmap, half, PotentialSpec.geometric(1.0), grid_depth=8)
    assert res.tau_integral == pytest.approx(frozen["kac_series"], abs=1e-10)
    assert res.induced_entropy == pytest.approx(frozen["induced_entropy_series"], abs=1e-9)
    assert res.entropy == pytest.approx(LOG2, abs=1e-9)
    assert res.tau_integral_finite
    # multiplicative identity h_F = h_mu * int tau
    assert res.induced_entropy == pytest.approx(res.entropy * res.tau_integral, rel=1e-12)
    assert abs(res.variational_gap) < 1e-9
    assert float(np.max(np.abs(res.projected.masses - 1 / res.projected.masses.size))) < 1e-9
    assert res.invariance_residual < 1e-9
    assert res.phi_integral_direct == pytest.approx(res.phi_integral, abs=1e-8)


def test_equilibrium_independent_of_base():
    f = acc.doubling()
    phi = PotentialSpec.geometric(-1.0)
    cells = []
    for lo, hi in ((0.0, 0.5), (0.5, 1.0), (0.25, 0.5)):
        s = first_return_scheme(f, Interval(lo, hi, 1.0), None, 40)
        cells.append(eq.equilibrium(f, s, phi, grid_depth=6).projected.masses)
    for c in cells[1:]:
        assert float(np.max(np.abs(c - cells[0]))) < 1e-8


def test_spreading_identity_and_double_lebesgue(half):
    f = acc.doubling()
    full = acc.full_shift_scheme()
    phi = PotentialSpec.geometric(1.0)
    g = gibbs_eigendata(induced_potential(phi, full))
    c = eq.spread_conformal(full, g, phi, depth=6)
    assert c.nu.coarsen(1) == pytest.approx(g.m.m1, abs=1e-12)
    assert c.exactness_time == 0
    _, ch, conf, _ = acc._spread(half, 1.0)
    assert conf["passed"] and ch.overlaps_agree
    assert ch.total_mass == pytest.approx(2.0, abs=1e-9)
    assert ch.nu.masses == pytest.approx(np.full(ch.nu.masses.size, 2 / ch.nu.masses.size),
                                         abs=1e-12)
    assert ch.exactness_time == eq.exactness_time(f, Interval(0.0, 0.5, 1.0)) == 1
    assert ch.total_mass <= ch.finiteness_bound


def test_grid_measure_basics(doubling):
    leb = eq.GridMeasure.lebesgue(doubling, 5)
    assert leb.total == pytest.approx(1.0)
    assert leb.interval_mass(Interval(0.1, 0.35, 1.0)) == pytest.approx(0.25)
    assert leb.integrate(lambda x: x) == pytest.approx(0.5)
    pieces = eq.GridMeasure.from_pieces(doubling, [0.9], [1.1], [1.0], 4)
    assert pieces.total == pytest.approx(1.0)
    assert pieces.interval_mass(Interval(0.0, 0.125, 1.0)) == pytest.approx(0.5)


def test_escape_empty_hole_and_golden(doubling, frozen):
    assert eq.escape_rate(doubling, Hole.from_intervals([]), 10).rate == 0.0
    r = eq.escape_rate(doubling, Hole.from_intervals([Interval(0.75, 1.0, 1.0)]), 10)
    assert list(r.masses[1:]) == pytest.approx(frozen["golden_masses"], rel=1e-12)
    r = eq.escape_rate(doubling, Hole.from_intervals([Interval(0.75, 1.0, 1.0)]), 24)
    assert r.rate == pytest.approx(frozen["golden_escape_rate"], abs=1e-3)
    assert np.all(np.diff(r.per_n[r.window[0]:]) < 0)


def test_escape_half_and_quarter_holes(doubling, frozen):
    r = eq.escape_rate(doubling, Hole.from_intervals([Interval(0.0, 0.5, 1.0)]), 10)
    assert list(r.masses[1:]) == pytest.approx(frozen["half_hole_masses"], rel=1e-12)
    assert r.rate == pytest.approx(LOG2, abs=1e-12)
    r = eq.escape_rate(doubling, Hole.from_intervals([Interval(0.25, 0.5, 1.0)]), 10)
    assert list(r.masses[1:]) == pytest.approx(frozen["quarter_hole_masses"], rel=1e-12)
    with pytest.raises(PreconditionError):
        eq.escape_rate(doubling, Hole.from_intervals([]), 1)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zoomtherm import acceptance as acc
from zoomtherm import equilibrium as eq
from zoomtherm.errors import PreconditionError
from zoomtherm.intervals import Interval
from zoomtherm.inducing import first_return_scheme
from zoomtherm.potentials import PotentialSpec
from zoomtherm.thermo import (InducedPotential, SymbolSpace, fit_geometric_decay,
                              gibbs_eigendata, gurevich_pressure, induced_potential,
                              verify_conformal, verify_gibbs)

LOG2 = math.log(2)


@pytest.fixture(scope="module")
def half(doubling):
    return first_return_scheme(doubling, Interval(0.0, 0.5, 1.0), None, 30)


def test_constant_potential_on_full_shift(doubling):
    s = eq.full_scheme(doubling)
    pot = induced_potential(PotentialSpec.constant(0.7), s, variation_depth=3,
                            variation_symbols=2)
    assert pot.values1 == pytest.approx([0.7, 0.7])
    assert np.all(pot.variations == 0)
    assert SymbolSpace.from_scheme(s).bip


def test_log2_potential_on_half_base(half):
    pot = induced_potential(PotentialSpec.geometric(1.0), half)
    assert pot.values1 == pytest.approx(-pot.taus * LOG2, abs=1e-12)
    g = gibbs_eigendata(pot)
    assert g.lam == pytest.approx(1.0, abs=1e-8)
    assert g.m.m1 == pytest.approx(2.0 ** -pot.taus.astype(float) / g.lam, abs=1e-12)
    conf = verify_conformal(g.m, pot, g.log_lambda)
    assert conf["passed"]


def test_two_symbol_pressure(frozen):
    pot = InducedPotential.from_coefficients([0.0, -1.0])
    est = gurevich_pressure(pot, n_max=12)
    assert est.eigen == pytest.approx(frozen["two_symbol_pressure"], abs=1e-14)
    assert list(est.periodic) == pytest.approx(frozen["two_symbol_ratios"], abs=1e-12)


def test_zero_potential_counts_symbols():
    for k in (2, 3, 7):
        pot = InducedPotential.from_coefficients(np.zeros(k))
        assert gurevich_pressure(pot).value == pytest.approx(math.log(k))
        g = gibbs_eigendata(pot)
        assert g.lam == pytest.approx(k)
        assert g.m.m1 == pytest.approx(np.full(k, 1 / k))
        assert g.h == pytest.approx(np.ones(k))
        assert verify_gibbs(g)["K"] == pytest.approx(1.0, abs=1e-12)
        assert verify_conformal(g.m, pot, g.log_lambda)["passed"]


def test_two_symbol_closed_form_eigendata():
    c = np.array([0.3, -0.8])
    g = gibbs_eigendata(InducedPotential.from_coefficients(c))
    lam = float(np.sum(np.exp(c)))
    assert g.lam == pytest.approx(lam)
    assert g.m.m1 == pytest.approx(np.exp(c) / lam)
    assert g.h == pytest.approx([1.0, 1.0])
    assert verify_gibbs(g, depth=4)["K"] == pytest.approx(1.0, abs=1e-12)
    assert verify_conformal(g.m, g.potential, g.log_lambda)["max_relative_residual"] < 1e-14


def test_divergence_sentinel():
    pot = InducedPotential.from_coefficients(np.zeros(512))
    est = gurevich_pressure(pot)
    assert est.diverged and est.value == math.inf


@given(st.lists(st.floats(-6, 1), min_size=2, max_size=40))
def test_truncation_monotone_depth1(values):
    est = gurevich_pressure(InducedPotential.from_coefficients(values))
    lb = np.array(est.lower_bounds)
    assert np.all(np.diff(lb) >= -1e-12)


@given(st.integers(2, 24), st.integers(0, 2 ** 31))
def test_truncation_monotone_depth2(n, seed):
    rng = np.random.default_rng(seed)
    v1 = -np.arange(n) * 0.3
    v2 = v1[:, None] + rng.normal(0, 0.5, (n, n))
    est = gurevich_pressure(InducedPotential.from_coefficients(v1, v2), depth=2)
    assert np.all(np.diff(est.lower_bounds) >= -1e-12)


def test_estimator_agreement_on_scheme_potential():
    pot = induced_potential(PotentialSpec.geometric(-1.0), acc.quadratic_scheme(), n_sym=64)
    est = gurevich_pressure(pot, n_max=14)
    assert abs(est.periodic[-1] - est.eigen) <= 1e-11


def test_gibbs_identity_depth1():
    pot = acc._synthetic(64, 1)
    g = gibbs_eigendata(pot)
    assert g.mu1 == pytest.approx(g.h * g.m.m1)
    assert float(np.sum(g.mu1)) == pytest.approx(1.0)
    assert g.m.additivity_residual() < 1e-12


def test_quadratic_gibbs_direct_recomputation():
    s = acc.quadratic_scheme()
    pot = induced_potential(PotentialSpec.geometric(-1.0), s, depth=1, n_sym=32)
    res = eq.pressure_solve(s.fmap, s, pot.phi, n_sym=32, pot=pot)
    g = gibbs_eigendata(pot.shifted(res.p_star))
    rep = verify_gibbs(g, depth=5, max_symbols=3)
    assert math.isfinite(rep["K"])
    c = g.potential.values1
    for w in itertools.product(range(3), repeat=3):
        direct = g.h[w[0]] * math.exp(c[w[0]] + c[w[1]]) * g.m.m1[w[2]] / g.lam ** 2
        assert g.mu(w) == pytest.approx(direct, rel=1e-12)


def test_depth2_tightens_conformality():
    s = acc.quadratic_scheme()
    phi = PotentialSpec.geometric(-1.0)
    out = []
    for d in (1, 2):
        pot = induced_potential(phi, s, depth=d, n_sym=16)
        g = gibbs_eigendata(pot, depth=d)
        out.append(verify_conformal(g.m, pot, g.log_lambda, depth=3, max_symbols=3,
                                    exact=True)["max_relative_residual"])
    assert out[1] <= out[0]


def test_quadratic_variations_decay():
    s = acc.quadratic_scheme()
    pot = induced_potential(PotentialSpec.geometric(-2.0), s, variation_depth=4,
                            variation_symbols=3)
    amp, theta = fit_geometric_decay(pot.variations)
    assert 0 < theta < math.sqrt(s.contraction.sigma)
    assert np.all(np.diff(pot.variations) < 0)


def test_bad_inputs(doubling):
    with pytest.raises(PreconditionError):
        induced_potential(PotentialSpec(), eq.full_scheme(doubling), depth=3)
    with pytest.raises(PreconditionError):
        gibbs_eigendata(InducedPotential.from_coefficients([0.0, -np.inf]))

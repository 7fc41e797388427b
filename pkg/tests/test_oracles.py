import math

import pytest

import oracles


def test_frozen_values_match_recomputation(frozen):
    fresh = oracles.compute_all()
    assert fresh.keys() == frozen.keys()
    for key, value in frozen.items():
        assert fresh[key] == pytest.approx(value, rel=1e-12, abs=1e-15), key


def test_golden_radius_is_golden_ratio(frozen):
    assert frozen["golden_radius"] == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-12)
    assert frozen["golden_escape_rate"] == pytest.approx(0.2119353555, abs=1e-9)


def test_first_return_counts_single_cylinder_per_time(frozen):
    assert set(frozen["first_return_counts"].values()) == {1}
    for t, length in frozen["first_return_lengths"].items():
        assert length == 2.0 ** -(int(t) + 1)


def test_series_oracles(frozen):
    assert frozen["kac_series"] == pytest.approx(2.0, abs=1e-12)
    assert frozen["induced_entropy_series"] == pytest.approx(2 * math.log(2), abs=1e-12)
    assert frozen["first_return_entropy_root"] == pytest.approx(math.log(2), abs=1e-12)


def test_two_symbol_ratio_estimator_is_exact_after_first_step(frozen):
    ratios = frozen["two_symbol_ratios"]
    assert all(r == pytest.approx(frozen["two_symbol_pressure"], abs=1e-12) for r in ratios[1:])

"""Acceptance rows shared by ``zoomtherm selftest`` and the test suite.

Every row compares against a closed-form value or an exhaustive property
check and returns a :class:`Row`.  Nothing random or time-dependent
enters the rendered rows, so repeated runs give identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import equilibrium as eq
from .dynamics import builtin_map
from .inducing import (condition_star_report, first_return_scheme, prune_condition_star,
                       verify_adapted)
from .intervals import Interval
from .nested import Hole, build_hole, nested_shrink, verify_nested
from .potentials import PotentialSpec
from .thermo import (InducedPotential, fit_geometric_decay, gibbs_eigendata, induced_potential,
                     verify_conformal, verify_gibbs)
from .zooming import ZoomingContraction

LOG2 = math.log(2.0)
GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class Row:
    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.title}"

    def as_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "detail": plain(self.detail)}


def plain(obj):
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


# shared fixtures; cached so that the suite builds each scheme once

@lru_cache(maxsize=None)
def doubling():
    return builtin_map("doubling")


@lru_cache(maxsize=None)
def full_shift_scheme():
    return eq.full_scheme(doubling())


@lru_cache(maxsize=None)
def half_base_scheme(N: int = 50):
    return first_return_scheme(doubling(), Interval(0.0, 0.5, 1.0), None, N)


@lru_cache(maxsize=None)
def two_ball_collection():
    f = doubling()
    c = ZoomingContraction(sigma=0.5, delta=f.default_delta(), epsilon=0.5)
    return nested_shrink(f, [(1 / 3, 0.04), (2 / 3, 0.04)], 0.5, 12, c)


@lru_cache(maxsize=None)
def hole_schemes():
    nc = two_ball_collection()
    out = []
    for i in range(len(nc.shrunken)):
        others = [k for k in range(len(nc.shrunken)) if k != i]
        hole = build_hole(nc, others)
        out.append(first_return_scheme(doubling(), nc.shrunken[i], nc.contraction, 12, hole=hole))
    return tuple(out)


@lru_cache(maxsize=None)
def quadratic_scheme():
    f = builtin_map("quadratic", {"a": 2.0})
    c = ZoomingContraction(sigma=0.9, delta=1.0, epsilon=0.1)
    nc = nested_shrink(f, [(1 / 3, 0.05)], 0.5, 14, c)
    return first_return_scheme(f, nc.shrunken[0], c, 16)


# rows

def criterion_1() -> Row:
    f = doubling()
    p_full = eq.pressure_solve(f, full_shift_scheme(), PotentialSpec()).p_star
    p_half = eq.pressure_solve(f, half_base_scheme(), PotentialSpec()).p_star
    ok = abs(p_full - LOG2) <= 1e-3 and abs(p_half - LOG2) <= 1e-3
    return Row(1, "entropy of doubling map, two schemes", ok,
               {"full_shift": p_full, "base_half": p_half, "target": LOG2, "tol": 1e-3})


def criterion_2() -> Row:
    f = doubling()
    out, ok = {}, True
    for t in (-2.0, -1.0, -0.5, 0.5):
        p = eq.pressure_solve(f, full_shift_scheme(), PotentialSpec.geometric(t)).p_star
        out[f"t={t:g}"] = p
        ok &= abs(p - (1 - t) * LOG2) <= 1e-3
    return Row(2, "geometric pressure line (1-t) log 2", ok, out)


def criterion_3() -> Row:
    f = doubling()
    t0 = eq.geometric_t0(f, [eq.GridMeasure.lebesgue(f, 10)], scheme=full_shift_scheme())
    return Row(3, "t0 of doubling map", abs(t0 + 1) <= 1e-6, {"t0": t0, "target": -1.0})


def criterion_4() -> Row:
    r = eq.equilibrium(doubling(), half_base_scheme(), PotentialSpec())
    ok = abs(r.tau_integral - 2) <= 1e-3 and abs(r.entropy - LOG2) <= 1e-3
    return Row(4, "Abramov and Kac on base [0, 1/2)", ok,
               {"tau_integral": r.tau_integral, "entropy": r.entropy,
                "induced_entropy": r.induced_entropy})


def criterion_5() -> Row:
    cases = [("full", full_shift_scheme(), t, d) for t in (-2.0, -1.0, 0.0, 0.5) for d in (1, 2)]
    cases += [("half", half_base_scheme(), t, 1) for t in (-2.0, 0.0, 1.0)]
    cases += [("quadratic", quadratic_scheme(), t, 1) for t in (-1.0, 0.0)]
    gaps = {}
    for name, scheme, t, d in cases:
        r = eq.equilibrium(scheme.fmap, scheme, PotentialSpec.geometric(t), depth=d,
                           n_sym=256 if name == "quadratic" else None)
        gaps[f"{name}:t={t:g}:depth={d}"] = r.variational_gap
    worst = max(abs(v) for v in gaps.values())
    return Row(5, "variational identity h + int phi = p_star", worst < 1e-3,
               {"worst_gap": worst, "gaps": gaps})


def _synthetic(n: int, depth: int) -> InducedPotential:
    rng = np.random.default_rng(20240613)
    a = np.arange(n)
    v1 = -0.7 * (a + 1) ** 0.5 - 0.01 * a
    v2 = None
    if depth == 2:
        v2 = v1[:, None] + 0.3 * rng.standard_normal((n, n)) / (1 + a[None, :]) ** 0.5
    taus = 1 + a // 8
    return InducedPotential.from_coefficients(v1, v2, taus)


def criterion_6() -> Row:
    out, ok = {}, True
    scheme = quadratic_scheme()
    phi = PotentialSpec.geometric(-1.0)
    sources = []
    for d in (1, 2):
        sources.append((f"synthetic:depth={d}", _synthetic(512, d), d))
        sources.append((f"quadratic:depth={d}", induced_potential(phi, scheme, d, n_sym=512), d))
    for name, pot, d in sources:
        g = gibbs_eigendata(_at_root(pot, d), depth=d)
        out[name] = {"size": g.truncation_size, "residual_h": g.residual_h,
                     "residual_m": g.residual_m, "lambda": g.lam}
        ok &= g.residual_h < 1e-10 and g.residual_m < 1e-10
    for name, pot in (("synthetic", _synthetic(512, 1)),
                      ("quadratic", induced_potential(phi, scheme, 1, n_sym=512))):
        g = gibbs_eigendata(_at_root(pot, 1), depth=1)
        K = verify_gibbs(g, depth=4)["K"]
        out[f"{name}:K"] = K
        ok &= abs(K - 1) <= 1e-9
    return Row(6, "eigen-residuals at 512 symbols, Gibbs constant", ok, out)


def _at_root(pot: InducedPotential, depth: int) -> InducedPotential:
    """Shift a scheme-backed potential to its pressure root so that lambda is 1."""
    if pot.scheme is None:
        return pot
    s = pot.scheme
    p = eq.pressure_solve(s.fmap, s, pot.phi, n_sym=pot.size, depth=depth, pot=pot).p_star
    return pot.shifted(p)


def criterion_7() -> Row:
    f = doubling()
    golden = eq.escape_rate(f, Hole.from_intervals([Interval(0.75, 1.0, 1.0)]), 24).rate
    half = eq.escape_rate(f, Hole.from_intervals([Interval(0.0, 0.5, 1.0)]), 24).rate
    target = LOG2 - math.log(GOLDEN)
    ok = abs(golden - target) <= 1e-3 and abs(half - LOG2) <= 1e-6
    return Row(7, "escape rates through [3/4,1) and [0,1/2)", ok,
               {"golden": golden, "golden_target": target, "half": half, "half_target": LOG2})


def criterion_8() -> Row:
    nc = two_ball_collection()
    rep = verify_nested(doubling(), nc)
    inner = [bool(c.get("contains_inner_ball", False)) for c in nc.certificates]
    ok = rep["n_linked_distinct_orders"] == 0 and all(inner)
    return Row(8, "nested collection, two balls on doubling", ok,
               {"preimages": rep["n_preimages"], "linked_distinct_orders":
                rep["n_linked_distinct_orders"], "contains_inner_ball": inner,
                "shrunken": [list(a.as_tuple()) for a in nc.shrunken]})


def criterion_9() -> Row:
    out, ok = [], True
    for s in hole_schemes():
        rep = verify_adapted(s)
        out.append({"elements": len(s), "checked": rep["checked"],
                    "violations": rep["n_violations"]})
        ok &= rep["n_violations"] == 0 and rep["checked"] > 0
    return Row(9, "schemes adapted to the hole", ok, {"schemes": out})


def _spread(scheme, t: float):
    pruned = prune_condition_star(scheme)
    phi = PotentialSpec.geometric(t)
    res = eq.pressure_solve(scheme.fmap, pruned, phi, tol=1e-12)
    g = gibbs_eigendata(induced_potential(phi, pruned).shifted(res.p_star))
    conf = verify_conformal(g.m, g.potential, g.log_lambda)
    return pruned, eq.spread_conformal(pruned, g, phi.shifted(res.p_star)), conf, g


def criterion_10() -> Row:
    detail, ok = {}, True
    for name, scheme in [("half", half_base_scheme())] + [
            (f"hole{k}", s) for k, s in enumerate(hole_schemes())]:
        pruned, c, conf, _ = _spread(scheme, 1.0)
        detail[name] = {"identical_pairs": c.identical_pairs,
                        "max_disagreement": c.max_disagreement,
                        "remaining_time_mismatches": c.remaining_time_mismatches,
                        "condition_star_violations": condition_star_report(pruned)["violations"],
                        "conformal": conf["passed"]}
        ok &= c.overlaps_agree and c.max_disagreement <= 1e-9 and conf["passed"]
    # tau = 1: spreading is the identity
    full = full_shift_scheme()
    g = gibbs_eigendata(induced_potential(PotentialSpec.geometric(1.0), full))
    c = eq.spread_conformal(full, g, PotentialSpec.geometric(1.0))
    ident = float(np.max(np.abs(c.nu.coarsen(1) - g.m.m1)))
    leb = float(np.max(np.abs(c.nu.masses - 1.0 / c.nu.masses.size)))
    _, c_half, _, _ = _spread(half_base_scheme(), 1.0)
    leb2 = float(np.max(np.abs(c_half.nu.masses - 2.0 / c_half.nu.masses.size)))
    detail.update({"identity_error": ident, "lebesgue_error": leb, "half_base_2leb_error": leb2})
    ok &= ident <= 1e-9 and leb <= 1e-9 and leb2 <= 1e-9
    return Row(10, "condition (*) and conformal spreading", ok, detail)


def criterion_11() -> Row:
    scheme = quadratic_scheme()
    sigma = scheme.contraction.sigma
    bound = math.sqrt(sigma) + 0.05
    out, ok = {}, True
    for t in (-1.0, 0.5, 1.0):
        pot = induced_potential(PotentialSpec.geometric(t), scheme, 1, variation_depth=4,
                                variation_symbols=3)
        _, theta = fit_geometric_decay(pot.variations)
        out[f"t={t:g}"] = {"variations": list(pot.variations), "theta": theta}
        ok &= theta <= bound
    out["bound"] = bound
    return Row(11, "induced potential variations decay geometrically", ok, out)


CRITERIA: tuple[Callable[[], Row], ...] = (
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
)


def run_rows() -> list[Row]:
    return [fn() for fn in CRITERIA]


def render(rows: list[Row]) -> str:
    return json.dumps([r.as_dict() for r in rows], sort_keys=True, indent=1)


def criterion_12(first: list[Row] | None = None) -> Row:
    """Recompute rows 1 to 11 from cold caches and compare the rendered bytes."""
    first = run_rows() if first is None else first
    for fn in (full_shift_scheme, half_base_scheme, two_ball_collection, hole_schemes,
               quadratic_scheme, doubling):
        fn.cache_clear()
    second = run_rows()
    a, b = render(first), render(second)
    return Row(12, "determinism of repeated runs", a == b, {"bytes": len(a)})


def run_all() -> list[Row]:
    rows = run_rows()
    return rows + [criterion_12(rows)]

"""Pressure, equilibrium states, conformal spreading and escape rates on the base map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import MapModel
from .errors import NumericalError, PreconditionError
from .inducing import InducedScheme, first_return_scheme
from .intervals import Interval, IntervalUnion
from .nested import Hole, preimage_of_union, survivor_iterate
from .potentials import PotentialSpec
from .preimages import overlapping_pairs
from .settings import MAX_ITERS, TOL_EIG, TOL_EQ, TOL_INV, TOL_MEAS
from .thermo import (CylinderMeasure, GibbsData, InducedPotential, gibbs_eigendata,
                     gurevich_pressure, induced_potential)

__all__ = [
    "PotentialSpec", "GridMeasure", "PressureResult", "EquilibriumResult", "ConformalResult",
    "EscapeResult", "full_scheme", "pressure_solve", "geometric_t0", "lyapunov_integral",
    "abramov_project", "spread_conformal", "exactness_time", "escape_rate", "equilibrium",
]


@dataclass(frozen=True)
class GridMeasure:
    """Masses on the ``2**depth`` equal cells of the phase space, uniform inside each cell."""

    lo: float
    hi: float
    masses: np.ndarray
    period: float | None = None

    @property
    def depth(self) -> int:
        return int(round(math.log2(self.masses.size)))

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.masses.size + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[1:] + e[:-1])

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))

    @classmethod
    def lebesgue(cls, fmap: MapModel, depth: int = 10) -> GridMeasure:
        n = 2 ** depth
        return cls(fmap.phase.lo, fmap.phase.hi, np.full(n, 1.0 / n), fmap.phase.period)

    @classmethod
    def from_pieces(cls, fmap: MapModel, lo, hi, mass, depth: int = 10) -> GridMeasure:
        """Deposit each mass uniformly on its interval (lifted circle pieces allowed)."""
        lo, hi, mass = (np.asarray(v, dtype=float) for v in (lo, hi, mass))
        period = fmap.phase.period
        a, b = fmap.phase.lo, fmap.phase.hi
        if period is not None:
            shift = np.floor(lo / period) * period
            lo, hi = lo - shift, hi - shift
            wrap = hi > period
            frac = np.where(wrap, (period - lo) / np.maximum(hi - lo, 1e-300), 1.0)
            lo = np.concatenate([lo, np.zeros(np.count_nonzero(wrap))])
            mass = np.concatenate([mass * frac, (mass * (1 - frac))[wrap]])
            hi = np.concatenate([np.minimum(hi, period), hi[wrap] - period])
        lo, hi = np.clip(lo, a, b), np.clip(hi, a, b)
        keep = (hi > lo) & (mass != 0)
        lo, hi, mass = lo[keep], hi[keep], mass[keep]
        dens = mass / (hi - lo)
        edges = np.linspace(a, b, 2 ** depth + 1)
        cdf = _piecewise_cdf(edges, lo, hi, dens)
        return cls(a, b, np.diff(cdf), period)

    def cdf(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        c = np.concatenate([[0.0], np.cumsum(self.masses)])
        pos = (x - self.lo) / (self.hi - self.lo) * self.masses.size
        k = np.clip(np.floor(pos).astype(int), 0, self.masses.size - 1)
        return c[k] + (pos - k) * self.masses[k]

    def measure_of(self, u: IntervalUnion) -> float:
        return float(np.sum(self.cdf(u.hi) - self.cdf(u.lo)))

    def interval_mass(self, iv: Interval) -> float:
        return float(sum(self.cdf(h) - self.cdf(l) for l, h in iv.pieces()))

    def integrate(self, fn: Callable, sub: int = 8) -> float:
        """Midpoint rule with ``sub`` points per cell."""
        e = self.edges
        w = (e[1] - e[0]) / sub
        x = e[:-1, None] + (np.arange(sub)[None, :] + 0.5) * w
        vals = np.asarray(fn(x.ravel()), dtype=float).reshape(x.shape)
        return float(np.sum(self.masses * vals.mean(axis=1)))

    def coarsen(self, depth: int) -> np.ndarray:
        k = self.masses.size // 2 ** depth
        return self.masses.reshape(-1, k).sum(axis=1)


def _piecewise_cdf(x: np.ndarray, lo: np.ndarray, hi: np.ndarray, dens: np.ndarray) -> np.ndarray:
    # cdf(x) = sum_i dens_i * (clip(x, lo_i, hi_i) - lo_i) as a sum of ramps
    pos = np.concatenate([lo, hi])
    slope = np.concatenate([dens, -dens])
    order = np.argsort(pos, kind="stable")
    pos, slope = pos[order], slope[order]
    s0 = np.concatenate([[0.0], np.cumsum(slope)])
    s1 = np.concatenate([[0.0], np.cumsum(slope * pos)])
    k = np.searchsorted(pos, x, side="right")
    return x * s0[k] - s1[k]


@dataclass(frozen=True)
class PressureResult:
    p_star: float
    bracket: tuple[float, float]
    iterations: int
    truncation_sizes: tuple[int, ...]
    truncation_increment: float
    truncation_converged: bool
    depth: int = 1
    potential: str = ""


def full_scheme(fmap: MapModel) -> InducedScheme:
    """The map itself as a ``tau = 1`` scheme (all branches must be onto)."""
    whole = fmap.phase.whole
    for br in fmap.branches:
        if br.image.length < whole.length - TOL_INV:
            raise PreconditionError(f"branch {br.index} is not onto; no full-branch scheme")
    base = Interval(whole.lo, whole.hi, whole.period)
    return first_return_scheme(fmap, base, None, 1)


def _pressure_at(pot: InducedPotential, p: float, depth: int, n_sym, tol):
    est = gurevich_pressure(pot.shifted(p), n_sym=n_sym, n_max=2, depth=depth, tol=TOL_EIG)
    inc = est.lower_bounds[-1] - est.lower_bounds[-2] if len(est.lower_bounds) > 1 else 0.0
    return est, inc


def pressure_solve(fmap: MapModel, scheme: InducedScheme, phi: PotentialSpec,
                   bracket: tuple[float, float] | None = None, tol: float = 1e-9,
                   n_sym: int | None = None, depth: int = 1, pot: InducedPotential | None = None,
                   max_iters: int = 200) -> PressureResult:
    """Root of ``p -> P_G(Phi - p tau)`` by bisection.

    The objective is strictly decreasing because ``tau >= 1``; a value of
    ``+inf`` (divergence sentinel) counts as positive.  Without an explicit
    bracket one is grown geometrically around 0.
    """
    if scheme.fmap is not fmap and scheme.fmap != fmap:
        raise PreconditionError("scheme was built for a different map")
    pot = induced_potential(phi, scheme, depth=depth, n_sym=n_sym) if pot is None else pot

    def g(p):
        est, inc = _pressure_at(pot, p, depth, n_sym, tol)
        return est.value, est, inc

    if bracket is None:
        scale = 1.0 + float(np.max(np.abs(pot.values1 / pot.taus)))
        lo, hi = -scale, scale
        for _ in range(60):
            if g(lo)[0] > 0 > g(hi)[0]:
                break
            lo, hi = 2 * lo, 2 * hi
        else:
            raise NumericalError("could not bracket the pressure root")
    else:
        lo, hi = map(float, bracket)
        if not lo < hi:
            raise PreconditionError("bracket must satisfy p_lo < p_hi")
        glo, ghi = g(lo)[0], g(hi)[0]
        if math.isinf(glo) and math.isinf(ghi):
            raise NumericalError("pressure estimate is +inf on the whole bracket")
        if not (glo > 0 > ghi):
            raise PreconditionError(
                f"no sign change on bracket: P({lo})={glo:.6g}, P({hi})={ghi:.6g}")
    it = 0
    while hi - lo > tol and it < max_iters:
        mid = 0.5 * (lo + hi)
        if g(mid)[0] > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    p = 0.5 * (lo + hi)
    _, est, inc = g(p)
    return PressureResult(p_star=p, bracket=(lo, hi), iterations=it,
                          truncation_sizes=est.truncation_sizes,
                          truncation_increment=float(inc),
                          truncation_converged=bool(abs(inc) < tol / 4), depth=depth,
                          potential=phi.label)


def lyapunov_integral(fmap: MapModel, measure: GridMeasure) -> float:
    def logj(x):
        j = np.asarray(fmap.jacobian(x), dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(j > 0, np.log(np.where(j > 0, j, 1.0)), 0.0)
    return measure.integrate(logj)


def geometric_t0(fmap: MapModel, candidates: Sequence[GridMeasure],
                 entropy: float | None = None, scheme: InducedScheme | None = None,
                 tol: float = 1e-12) -> float:
    """``max h(f) / (-int log J dmu0)`` over the candidate measures."""
    if not candidates:
        raise PreconditionError("need at least one candidate measure")
    if entropy is None:
        scheme = full_scheme(fmap) if scheme is None else scheme
        entropy = pressure_solve(fmap, scheme, PotentialSpec(), tol=tol).p_star
    if not math.isfinite(entropy):
        raise PreconditionError("topological entropy must be finite")
    best = -math.inf
    for mu in candidates:
        lyap = lyapunov_integral(fmap, mu)
        if not lyap > 0:
            raise PreconditionError(f"candidate has nonpositive Lyapunov integral {lyap}")
        best = max(best, entropy / (-lyap))
    return best


@dataclass(frozen=True)
class EquilibriumResult:
    induced_gibbs: GibbsData = field(repr=False)
    tau_integral: float
    entropy: float
    phi_integral: float
    induced_entropy: float
    induced_phi_integral: float
    p_star: float
    pressure_from_gibbs: float
    projected: GridMeasure = field(repr=False)
    phi_integral_direct: float | None = None
    invariance_residual: float = 0.0
    tau_tail_ratio: float = 0.0
    tau_integral_finite: bool = True

    @property
    def variational_gap(self) -> float:
        return self.entropy + self.phi_integral - self.p_star


def _cylinder_pieces(scheme: InducedScheme, gibbs: GibbsData):
    """All ``f^j([a b])`` with their Gibbs masses, vectorised over ``b``."""
    pot = gibbs.potential
    syms = pot.space.symbols
    fmap = scheme.fmap
    los, his, masses = [], [], []
    e_lo = np.array([scheme.elements[k].interval.lo for k in syms])
    e_hi = np.array([scheme.elements[k].interval.hi for k in syms])
    A = np.exp(gibbs.m.log_matrix)
    for a, k in enumerate(syms):
        x0 = scheme.inverse_branch(k, e_lo)
        x1 = scheme.inverse_branch(k, e_hi)
        w = gibbs.h[a] * A[a] * gibbs.m.m1 / gibbs.lam
        lo, hi = np.minimum(x0, x1), np.maximum(x0, x1)
        for j, b in enumerate(scheme.elements[k].branch_word):
            los.append(lo)
            his.append(hi)
            masses.append(w)
            if j + 1 < scheme.elements[k].tau:
                u, v = fmap.branches[b].forward(lo), fmap.branches[b].forward(hi)
                lo, hi = np.minimum(u, v), np.maximum(u, v)
    return np.concatenate(los), np.concatenate(his), np.concatenate(masses)


def _induced_entropy(gibbs: GibbsData) -> tuple[float, float]:
    """Entropy of the Gibbs measure and the integral of the potential it was built from."""
    mu = gibbs.mu1
    if gibbs.depth == 1:
        pos = mu > 0
        ent = float(-np.sum(mu[pos] * np.log(mu[pos])))
        integ = float(np.sum(mu * gibbs.potential.values1))
        return ent, integ
    P = gibbs.transition()
    with np.errstate(divide="ignore", invalid="ignore"):
        logP = np.where(P > 0, np.log(np.where(P > 0, P, 1.0)), 0.0)
    ent = float(-np.sum(mu[:, None] * P * logP))
    integ = float(np.sum(mu[:, None] * P * gibbs.m.log_matrix))
    return ent, integ


def abramov_project(scheme: InducedScheme, gibbs: GibbsData, phi: PotentialSpec | None = None,
                    depth: int = 10, check_invariance: bool = True) -> EquilibriumResult:
    """Push the induced Gibbs measure down to the base map.

    ``h_mu = h_F / int tau`` and ``int phi dmu = int Phi dmu_F / int tau``;
    the measure itself is ``sum_k sum_{j < tau_k} mu_F(f^{-j} A ∩ P_k)``,
    normalised, with ``mu_F`` taken uniform inside each two-cylinder.
    """
    pot = gibbs.potential
    if pot is None:
        raise PreconditionError("Gibbs data carries no potential")
    mu = gibbs.mu1
    taus = pot.taus.astype(float)
    contrib = mu * taus
    tau_int = float(np.sum(contrib))
    tail = float(np.sum(contrib[3 * contrib.size // 4:])) / tau_int if contrib.size >= 4 else 0.0
    finite = math.isfinite(tau_int) and tail < 0.25
    ent, integ_shifted = _induced_entropy(gibbs)
    p = pot.shift
    integ = integ_shifted + p * tau_int
    lo, hi, w = _cylinder_pieces(scheme, gibbs)
    projected = GridMeasure.from_pieces(scheme.fmap, lo, hi, w / tau_int, depth)
    projected = GridMeasure(projected.lo, projected.hi, projected.masses / projected.total,
                            projected.period)
    direct = None
    if phi is not None:
        direct = projected.integrate(lambda x: phi(scheme.fmap, x))
    resid = _invariance_residual(scheme.fmap, projected) if check_invariance else 0.0
    return EquilibriumResult(induced_gibbs=gibbs, tau_integral=tau_int, entropy=ent / tau_int,
                             phi_integral=integ / tau_int, induced_entropy=ent,
                             induced_phi_integral=integ, p_star=p,
                             pressure_from_gibbs=p + gibbs.log_lambda / tau_int,
                             projected=projected, phi_integral_direct=direct,
                             invariance_residual=resid, tau_tail_ratio=tail,
                             tau_integral_finite=finite)


def _invariance_residual(fmap: MapModel, mu: GridMeasure) -> float:
    coarse = mu.depth - 1
    edges = np.linspace(mu.lo, mu.hi, 2 ** coarse + 1)
    base = (fmap.phase.lo, fmap.phase.hi)
    cells = mu.coarsen(coarse)
    worst = 0.0
    for i in range(cells.size):
        cell = IntervalUnion([edges[i]], [edges[i + 1]], base, fmap.phase.period)
        pre = preimage_of_union(fmap, cell)
        worst = max(worst, abs(mu.measure_of(pre) - cells[i]))
    return worst


def equilibrium(fmap: MapModel, scheme: InducedScheme, phi: PotentialSpec, n_sym=None,
                depth: int = 1, grid_depth: int = 10, tol: float = 1e-10) -> EquilibriumResult:
    """Pressure root, induced Gibbs state at that root, and its projection."""
    pot = induced_potential(phi, scheme, depth=depth, n_sym=n_sym)
    res = pressure_solve(fmap, scheme, phi, tol=tol, n_sym=n_sym, depth=depth, pot=pot)
    gibbs = gibbs_eigendata(pot.shifted(res.p_star), depth=depth)
    return abramov_project(scheme, gibbs, phi, depth=grid_depth)


@dataclass(frozen=True)
class ConformalResult:
    pieces: tuple[tuple[float, float, int, int, float], ...] = field(repr=False)
    nu: GridMeasure = field(repr=False)
    total_mass: float
    finiteness_bound: float
    exactness_time: int
    identical_pairs: int
    max_disagreement: float
    remaining_time_mismatches: int
    nonidentical_overlaps: int
    conformality_residual: float
    overlaps_agree: bool


def _forward_image(fmap: MapModel, u: IntervalUnion) -> IntervalUnion:
    los, his = [], []
    for br in fmap.branches:
        dom = br.domain
        piece = u.intersect(IntervalUnion([dom.lo], [dom.hi], u.base, u.period))
        if len(piece) == 0:
            continue
        a, b = br.forward(piece.lo), br.forward(piece.hi)
        los.append(np.minimum(a, b))
        his.append(np.maximum(a, b))
    if not los:
        return IntervalUnion.empty(u.base, u.period)
    lo, hi = np.concatenate(los), np.concatenate(his)
    if u.period is not None:
        ivs = [Interval(l, h, u.period) for l, h in zip(lo, hi)]
        return IntervalUnion.from_intervals(ivs, u.base, u.period)
    return IntervalUnion(lo, hi, u.base)


def exactness_time(fmap: MapModel, U: Interval, max_steps: int = 64,
                   tol: float = TOL_INV) -> int:
    """Smallest ``m`` with ``f^m(U)`` covering the phase space up to ``tol``."""
    base = (fmap.phase.lo, fmap.phase.hi)
    u = IntervalUnion.from_intervals([U], base, fmap.phase.period)
    for m in range(max_steps + 1):
        if u.measure >= fmap.phase.length - tol:
            return m
        u = _forward_image(fmap, u)
    raise NumericalError(f"base does not cover the space within {max_steps} iterates")


def spread_conformal(scheme: InducedScheme, m: CylinderMeasure | GibbsData, phi: PotentialSpec,
                     depth: int = 10, exactness: int | None = None, tol: float = TOL_MEAS,
                     symbols: Sequence[int] | None = None) -> ConformalResult:
    """Spread a conformal measure of the induced system along the towers.

    The piece ``f^j(P_i)`` gets ``exp(-S_j phi(x_i)) m(P_i)`` with ``x_i``
    the element centre.  Identical pieces reached from different
    ``(i, j)`` must carry the same mass and the same remaining time to
    the base.
    """
    if isinstance(m, GibbsData):
        symbols = m.potential.space.symbols if symbols is None else symbols
        m = m.m
    if symbols is None:
        symbols = scheme.ranked()[:m.size]
    fmap = scheme.fmap
    period = fmap.phase.period
    lo, hi, mass, rem, owner, step = [], [], [], [], [], []
    for a, k in enumerate(symbols):
        e = scheme.elements[k]
        pts = np.array([float(v) for v in scheme.orbit(k, np.array(e.center))])
        vals = phi(fmap, pts)
        sj = np.concatenate([[0.0], np.cumsum(vals)[:-1]])
        itin = e.itinerary or _itinerary(scheme, k)
        for j, piece in enumerate(itin):
            lo.append(piece.lo)
            hi.append(piece.hi)
            mass.append(math.exp(-sj[j]) * float(m.m1[a]))
            rem.append(e.tau - j)
            owner.append(a)
            step.append(j)
    lo, hi, mass = np.array(lo), np.array(hi), np.array(mass)
    rem = np.array(rem, dtype=int)
    # relative matching: deep tower pieces are far shorter than any absolute tolerance
    i, j, common = overlapping_pairs(lo, hi, period, 0.0)
    length = hi - lo
    scale = 1e-6 * np.maximum(length[i], length[j])
    ident = (np.abs(length[i] - length[j]) <= scale) & (length[i] - common <= scale)
    ii, jj = i[ident], j[ident]
    disagreement = float(np.max(np.abs(mass[ii] - mass[jj]))) if ii.size else 0.0
    mismatched = int(np.count_nonzero(rem[ii] != rem[jj]))
    dup = np.zeros(lo.size, dtype=bool)
    dup[jj] = True
    nu = GridMeasure.from_pieces(fmap, lo[~dup], hi[~dup], mass[~dup], depth)
    total = float(np.sum(mass[~dup]))
    # finiteness estimate, time m from topological exactness of the base
    m_ex = exactness_time(fmap, scheme.base) if exactness is None else int(exactness)
    grid = np.linspace(fmap.phase.lo, fmap.phase.hi, 4097)
    sup_m = float(np.max(-phi(fmap, grid)))
    ugrid = np.linspace(scheme.base.lo, scheme.base.hi, 1025)
    sup_u = float(np.max(-phi(fmap, ugrid)))
    nu_u = float(np.sum(m.m1))
    taus = np.array([scheme.elements[k].tau for k in symbols])
    middle = sum(sum(math.exp(kk * sup_m) for kk in range(t)) * float(m.m1[a])
                 for a, t in enumerate(taus) if t <= m_ex)
    bound = nu_u + middle + math.exp(m_ex * sup_u) * nu_u
    resid = _grid_conformality(fmap, nu, phi, lo[~dup], hi[~dup], rem[~dup])
    return ConformalResult(
        pieces=tuple(zip(lo.tolist(), hi.tolist(), rem.tolist(), step, mass.tolist())),
        nu=nu, total_mass=total, finiteness_bound=bound, exactness_time=m_ex,
        identical_pairs=int(ii.size), max_disagreement=disagreement,
        remaining_time_mismatches=mismatched,
        nonidentical_overlaps=int(np.count_nonzero(~ident)), conformality_residual=resid,
        overlaps_agree=disagreement <= tol and mismatched == 0)


def _itinerary(scheme: InducedScheme, k: int) -> list[Interval]:
    e = scheme.elements[k]
    lo, hi = e.interval.lo, e.interval.hi
    out = []
    for b in e.branch_word:
        out.append(Interval(lo, hi, scheme.fmap.phase.period))
        u, v = scheme.fmap.branches[b].forward(lo), scheme.fmap.branches[b].forward(hi)
        lo, hi = float(min(u, v)), float(max(u, v))
    return out


def _grid_conformality(fmap: MapModel, nu: GridMeasure, phi: PotentialSpec, lo, hi, rem) -> float:
    """Worst ``|nu(f A) - exp(-phi(c_A)) nu(A)|`` over eligible grid cells.

    A cell is eligible when it sits in one branch domain and every spread
    piece meeting it contains it and is not the last step of its tower,
    so that ``f(A)`` is covered by the images of the same pieces.
    """
    e = nu.edges
    n = nu.masses.size
    width = e[1] - e[0]
    period = fmap.phase.period
    if period is not None:
        shift = np.floor(lo / period) * period
        lo, hi = lo - shift, hi - shift
        wrap = hi > period
        lo = np.concatenate([lo, np.zeros(np.count_nonzero(wrap))])
        rem = np.concatenate([rem, rem[wrap]])
        hi = np.concatenate([np.minimum(hi, period), hi[wrap] - period])
    pos_lo = (lo - nu.lo) / width
    pos_hi = (hi - nu.lo) / width
    meet_a = np.clip(np.floor(pos_lo + 1e-9).astype(int), 0, n)
    meet_b = np.clip(np.ceil(pos_hi - 1e-9).astype(int), 0, n)
    cont_a = np.clip(np.ceil(pos_lo - 1e-9).astype(int), 0, n)
    cont_b = np.clip(np.floor(pos_hi + 1e-9).astype(int), 0, n)
    meet = np.zeros(n + 1)
    np.add.at(meet, meet_a, 1)
    np.add.at(meet, meet_b, -1)
    good = (rem > 1) & (cont_b > cont_a)
    cont = np.zeros(n + 1)
    np.add.at(cont, cont_a[good], 1)
    np.add.at(cont, cont_b[good], -1)
    meet, cont = np.cumsum(meet)[:-1], np.cumsum(cont)[:-1]
    eligible = (meet > 0) & (meet == cont)
    worst = 0.0
    for br in fmap.branches:
        inside = np.flatnonzero(eligible & (e[:-1] >= br.domain.lo - TOL_INV)
                                & (e[1:] <= br.domain.hi + TOL_INV))
        if inside.size == 0:
            continue
        a, b = br.forward(e[inside]), br.forward(e[inside + 1])
        img = nu.cdf(np.maximum(a, b)) - nu.cdf(np.minimum(a, b))
        c = 0.5 * (e[inside] + e[inside + 1])
        expected = np.exp(-phi(fmap, c)) * nu.masses[inside]
        worst = max(worst, float(np.max(np.abs(img - expected))))
    return worst


@dataclass(frozen=True)
class EscapeResult:
    rate: float
    masses: tuple[float, ...]
    per_n: tuple[float, ...]
    window: tuple[int, int]


def escape_rate(fmap: MapModel, hole: Hole, n_max: int = 20) -> EscapeResult:
    """``-lim (1/n) log Leb(points whose first n iterates avoid the hole)``.

    The rate is the least-squares slope of ``-log mass_n`` over
    ``n_max/2 <= n <= n_max``; masses are exact interval arithmetic.
    """
    if n_max < 2:
        raise PreconditionError("escape rate needs n_max >= 2")
    series = survivor_iterate(fmap, hole, n_max - 1, series=True)
    masses = [1.0] + [s.mass for s in series]
    per_n = [-math.log(mv) / n if mv > 0 else math.inf for n, mv in enumerate(masses) if n > 0]
    start = n_max // 2
    window = (start, n_max)
    if masses[-1] <= 0:
        return EscapeResult(math.inf, tuple(masses), tuple(per_n), window)
    n = np.arange(start, n_max + 1)
    y = -np.log(np.array(masses[start:]))
    slope = float(np.polyfit(n, y, 1)[0]) if np.ptp(y) > 0 else 0.0
    return EscapeResult(max(slope, 0.0) if abs(slope) < 1e-15 else slope, tuple(masses),
                        tuple(per_n), window)

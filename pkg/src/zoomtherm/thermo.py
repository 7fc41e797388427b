"""Thermodynamics of the full shift coded by an induced scheme.

Potentials are locally constant at depth 1 (one value per symbol) or
depth 2 (one value per pair).  In both cases the transfer operator acts on
functions of the first symbol through the matrix ``A[a, b] = exp(c(a, b))``
(``c(a, b) = c(a)`` at depth 1): ``L = A^T`` on densities and ``L* = A`` on
measures.  Everything is computed with a max-shift so that large negative
potentials do not underflow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import NumericalError, PreconditionError
from .inducing import InducedScheme
from .potentials import PotentialSpec
from .settings import DIVERGENCE_GAP, MAX_ITERS, TOL_EIG, TOL_MEAS


@dataclass(frozen=True)
class SymbolSpace:
    """Truncated alphabet; ``symbols[i]`` is the scheme element behind symbol ``i``."""

    symbols: tuple[int, ...]
    taus: np.ndarray

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def bip(self) -> bool:
        # full shift: every symbol follows every symbol
        return True

    @classmethod
    def from_scheme(cls, scheme: InducedScheme, n_sym: int | None = None) -> SymbolSpace:
        order = scheme.ranked()
        if n_sym is not None:
            order = order[:n_sym]
        return cls(tuple(order), scheme.taus[order] if order else np.zeros(0, dtype=int))


@dataclass(frozen=True)
class InducedPotential:
    """Induced potential sampled at cylinder centres.

    ``values1[a]`` is the Birkhoff sum over one return at the centre of
    ``[a]``; ``values2[a, b]`` the same at the centre of ``[a b]``.
    ``shift`` records a subtracted ``p * tau`` already applied to both.
    """

    space: SymbolSpace
    values1: np.ndarray
    values2: np.ndarray | None = None
    shift: float = 0.0
    variations: np.ndarray = field(default_factory=lambda: np.zeros(0))
    flagged: int = 0
    scheme: InducedScheme | None = field(default=None, repr=False, compare=False)
    phi: PotentialSpec | None = None

    @property
    def taus(self) -> np.ndarray:
        return self.space.taus

    @property
    def size(self) -> int:
        return self.space.size

    @property
    def max_depth(self) -> int:
        return 1 if self.values2 is None else 2

    @classmethod
    def from_coefficients(cls, values1, values2=None, taus=None) -> InducedPotential:
        v1 = np.asarray(values1, dtype=float)
        k = v1.size
        t = np.ones(k, dtype=int) if taus is None else np.asarray(taus, dtype=int)
        v2 = None if values2 is None else np.asarray(values2, dtype=float).reshape(k, k)
        return cls(SymbolSpace(tuple(range(k)), t), v1, v2)

    def truncate(self, k: int) -> InducedPotential:
        k = min(k, self.size)
        space = SymbolSpace(self.space.symbols[:k], self.taus[:k])
        v2 = None if self.values2 is None else self.values2[:k, :k]
        return replace(self, space=space, values1=self.values1[:k], values2=v2)

    def shifted(self, p: float) -> InducedPotential:
        """``Phi - p tau``."""
        v2 = None if self.values2 is None else self.values2 - p * self.taus[:, None]
        return replace(self, values1=self.values1 - p * self.taus, values2=v2,
                       shift=self.shift + p)

    def log_matrix(self, depth: int = 1) -> np.ndarray:
        if depth == 1:
            return np.repeat(self.values1[:, None], self.size, axis=1)
        if self.values2 is None:
            raise PreconditionError("depth-2 coefficients were not computed")
        return self.values2

    def word_sum(self, word: Sequence[int], depth: int = 1) -> float:
        """Locally constant approximation of ``Phi_n`` on the cylinder ``word``."""
        if depth == 1 or len(word) == 1:
            return float(sum(self.values1[a] for a in word))
        v2 = self.log_matrix(2)
        inner = sum(v2[a, b] for a, b in zip(word, word[1:]))
        return float(inner + self.values1[word[-1]])

    def return_sum_at_center(self, word: Sequence[int]) -> float:
        """Single-return sum ``Phi(x_C)`` at the geometric centre of the cylinder."""
        if self.scheme is None or self.phi is None:
            if self.values2 is not None and len(word) > 1:
                return float(self.values2[word[0], word[1]])
            return float(self.values1[word[0]])
        scheme = self.scheme
        k = self.space.symbols[word[0]]
        x = np.array([scheme.cylinder([self.space.symbols[a] for a in word]).mid])
        vals, _ = _element_sums(scheme, self.phi, k, x)
        return float(vals[0]) - self.shift * self.taus[word[0]]

    def birkhoff_at_center(self, word: Sequence[int]) -> float:
        """``Phi_n`` at the geometric centre of the cylinder (needs the scheme)."""
        if self.scheme is None or self.phi is None:
            return self.word_sum(word, self.max_depth)
        scheme = self.scheme
        ids = [self.space.symbols[a] for a in word]
        x = scheme.cylinder(ids).mid
        total = 0.0
        for a, k in zip(word, ids):
            pts = np.array([float(v) for v in scheme.orbit(k, x)])
            vals, _ = self.phi.evaluate(scheme.fmap, pts)
            total += float(np.sum(vals)) - self.shift * self.taus[a]
            x = float(scheme.fmap(pts[-1]))
            x = float(scheme._lift(np.array(x), scheme.base))
        return total


def _element_sums(scheme: InducedScheme, phi: PotentialSpec, k: int, x: np.ndarray):
    fmap = scheme.fmap
    total = np.zeros_like(x)
    flagged = 0
    pts = x
    for j in range(scheme.elements[k].tau):
        vals, flag = phi.evaluate(fmap, pts)
        total = total + vals
        flagged += int(np.count_nonzero(flag))
        if j + 1 < scheme.elements[k].tau:
            pts = np.asarray(fmap(pts), dtype=float)
    return total, flagged


def variation_profile(scheme: InducedScheme, phi: PotentialSpec, symbols: Sequence[int],
                      depth: int, samples: int = 17) -> np.ndarray:
    """Empirical ``V_n``: largest oscillation of ``Phi`` on ``n``-cylinders, ``n <= depth``."""
    out = []
    for n in range(1, depth + 1):
        worst = 0.0
        for word in itertools.product(symbols, repeat=n):
            iv = scheme.cylinder(word)
            x = np.linspace(iv.lo, iv.hi, samples + 2)[1:-1]
            vals, _ = _element_sums(scheme, phi, word[0], x)
            worst = max(worst, float(np.max(vals) - np.min(vals)))
        out.append(worst)
    return np.array(out)


def fit_geometric_decay(v: np.ndarray) -> tuple[float, float]:
    """Least-squares ``(A, theta)`` with ``V_n ≈ A theta^n`` over the positive entries."""
    n = np.arange(1, v.size + 1)
    keep = v > 0
    if np.count_nonzero(keep) < 2:
        return (float(v[0]) if v.size else 0.0, 0.0)
    slope, icpt = np.polyfit(n[keep], np.log(v[keep]), 1)
    return float(math.exp(icpt)), float(math.exp(slope))


def induced_potential(phi: PotentialSpec, scheme: InducedScheme, depth: int = 1,
                      n_sym: int | None = None, variation_depth: int = 0,
                      variation_symbols: int = 4) -> InducedPotential:
    """Sample ``Phi = sum_{j < tau} phi o f^j`` on the scheme's cylinders.

    Parameters
    ----------
    depth : {1, 2}
        Coefficient depth.
    n_sym : int, optional
        Keep the ``n_sym`` longest elements.
    variation_depth : int
        If positive, also estimate ``V_1..V_depth`` on words over the
        ``variation_symbols`` longest elements.
    """
    if depth not in (1, 2):
        raise PreconditionError("coefficient depth must be 1 or 2")
    space = SymbolSpace.from_scheme(scheme, n_sym)
    if space.size == 0:
        raise PreconditionError("scheme has no elements")
    v1 = np.empty(space.size)
    flagged = 0
    for a, k in enumerate(space.symbols):
        val, fl = _element_sums(scheme, phi, k, np.array([scheme.elements[k].center]))
        v1[a] = val[0]
        flagged += fl
    v2 = None
    if depth == 2:
        centers = np.array([scheme.elements[k].center for k in space.symbols])
        v2 = np.empty((space.size, space.size))
        for a, k in enumerate(space.symbols):
            x = scheme.inverse_branch(k, centers)
            val, fl = _element_sums(scheme, phi, k, x)
            v2[a] = val
            flagged += fl
    var = np.zeros(0)
    if variation_depth > 0:
        top = list(space.symbols[:variation_symbols])
        var = variation_profile(scheme, phi, top, variation_depth)
    return InducedPotential(space=space, values1=v1, values2=v2, variations=var,
                            flagged=flagged, scheme=scheme, phi=phi)


def _shifted_exp(logm: np.ndarray) -> tuple[np.ndarray, float]:
    c = float(np.max(logm))
    return np.exp(logm - c), c


def _log_periodic_sums(logm: np.ndarray, a: int, n_max: int) -> np.ndarray:
    """``log (A^n)_{aa}`` for ``n = 1..n_max``."""
    B, c = _shifted_exp(logm)
    v = np.zeros(B.shape[0])
    v[a] = 1.0
    scale = 0.0
    out = np.empty(n_max)
    for n in range(1, n_max + 1):
        v = B @ v
        s = float(np.max(v))
        if s <= 0:
            out[n - 1:] = -np.inf
            break
        v /= s
        scale += math.log(s)
        out[n - 1] = math.log(v[a]) + scale + n * c if v[a] > 0 else -np.inf
    return out


def _logsumexp(x: np.ndarray) -> float:
    c = float(np.max(x))
    return c + math.log(float(np.sum(np.exp(x - c))))


def log_leading_eigenvalue(pot: InducedPotential, depth: int = 1, tol: float = TOL_EIG,
                           max_iters: int = MAX_ITERS) -> float:
    if depth == 1:
        # rank one: lambda = sum_a exp(c_a)
        return _logsumexp(pot.values1)
    return math.log(gibbs_eigendata(pot, depth=2, tol_eig=tol, max_iters=max_iters).lam)


@dataclass(frozen=True)
class PressureEstimate:
    value: float
    periodic: tuple[float, ...]
    eigen: float
    lower_bounds: tuple[float, ...]
    truncation_sizes: tuple[int, ...]
    diverged: bool = False
    depth: int = 1

    @property
    def finite(self) -> bool:
        return not self.diverged and math.isfinite(self.value)


def truncation_sizes(total: int, n_sym: int | None = None) -> list[int]:
    top = total if n_sym is None else min(n_sym, total)
    sizes, k = [], 1
    while k < top:
        sizes.append(k)
        k *= 2
    sizes.append(top)
    return sizes


def gurevich_pressure(pot: InducedPotential, n_sym: int | None = None, n_max: int = 12,
                      depth: int = 1, gap: float = DIVERGENCE_GAP,
                      tol: float = TOL_EIG) -> PressureEstimate:
    """Gurevich pressure of the truncated potential with two estimators.

    ``periodic[n-1] = log Z_n - log Z_{n-1}`` with ``Z_n`` the weighted sum
    over period-``n`` points through the first symbol (``Z_0 = 1``), and
    ``eigen`` is the log of the leading eigenvalue.  ``lower_bounds`` holds
    the eigen estimate on the doubling sequence of truncations; it is
    nondecreasing.  If the last two truncation steps are both genuine
    doublings and each raises it by more than ``gap``, the estimate is
    reported as ``+inf``.
    """
    if pot.size == 0:
        raise PreconditionError("empty alphabet")
    sizes = truncation_sizes(pot.size, n_sym)
    bounds = [log_leading_eigenvalue(pot.truncate(k), depth, tol) for k in sizes]
    top = pot.truncate(sizes[-1])
    if not np.all(np.isfinite(top.values1)):
        raise PreconditionError("potential values must be finite on retained cylinders")
    logz = _log_periodic_sums(top.log_matrix(depth), 0, n_max)
    periodic = np.diff(np.concatenate([[0.0], logz]))
    diverged = False
    # a final partial step onto a finite alphabet is not a doubling
    full = [i for i in range(1, len(sizes)) if sizes[i] == 2 * sizes[i - 1]]
    if len(full) >= 2 and full[-1] == len(sizes) - 1 and full[-2] == full[-1] - 1:
        d1 = bounds[-2] - bounds[-3]
        d2 = bounds[-1] - bounds[-2]
        diverged = d1 > gap and d2 > gap
    value = math.inf if diverged else bounds[-1]
    return PressureEstimate(value=value, periodic=tuple(float(v) for v in periodic),
                            eigen=bounds[-1], lower_bounds=tuple(bounds),
                            truncation_sizes=tuple(sizes), diverged=diverged, depth=depth)


@dataclass(frozen=True)
class CylinderMeasure:
    """Conformal cylinder weights generated by ``m(a w) = exp(c(a, w_0)) m(w) / lambda``."""

    log_matrix: np.ndarray
    lam: float
    m1: np.ndarray
    depth: int = 4
    coef_depth: int = 1

    @property
    def size(self) -> int:
        return self.m1.size

    def weight(self, word: Sequence[int]) -> float:
        if not word:
            return float(np.sum(self.m1))
        w = float(self.m1[word[-1]])
        for a, b in zip(word[-2::-1], word[:0:-1]):
            w *= math.exp(float(self.log_matrix[a, b])) / self.lam
        return w

    def words(self, n: int, symbols: Sequence[int] | None = None):
        alphabet = range(self.size) if symbols is None else symbols
        return itertools.product(alphabet, repeat=n)

    def additivity_residual(self, depth: int | None = None, symbols=None) -> float:
        """Worst ``|m(w) - sum_a m(w a)|`` over words of length below ``depth``.

        Uses the full alphabet for the children, so it is exact for the
        truncated system.
        """
        depth = self.depth if depth is None else depth
        syms = list(range(min(self.size, 4))) if symbols is None else list(symbols)
        worst = abs(self.weight(()) - 1.0)
        for n in range(1, depth):
            for w in self.words(n, syms):
                kids = sum(self.weight(w + (a,)) for a in range(self.size))
                worst = max(worst, abs(self.weight(w) - kids))
        return worst


@dataclass(frozen=True)
class GibbsData:
    lam: float
    log_lambda: float
    h: np.ndarray
    m: CylinderMeasure
    truncation_size: int
    depth: int
    residual_h: float
    residual_m: float
    iterations: int
    potential: InducedPotential = field(repr=False, compare=False, default=None)

    @property
    def mu1(self) -> np.ndarray:
        """Gibbs measure of the one-cylinders, ``h(a) m(a)``."""
        return self.h * self.m.m1

    def transition(self) -> np.ndarray:
        """Markov transition of the Gibbs measure, ``A[a,b] m(b) / (lambda m(a))``."""
        A = np.exp(self.m.log_matrix)
        return A * self.m.m1[None, :] / (self.lam * self.m.m1[:, None])

    def mu(self, word: Sequence[int]) -> float:
        return float(self.h[word[0]]) * self.m.weight(word)


def _power(B: np.ndarray, tol: float, max_iters: int, transpose: bool = False):
    M = B.T if transpose else B
    v = np.full(B.shape[0], 1.0 / B.shape[0])
    lam = 0.0
    for it in range(1, max_iters + 1):
        w = M @ v
        lam = float(np.sum(w))
        if not lam > 0:
            raise NumericalError("transfer matrix annihilated the iterate")
        w /= lam
        if float(np.sum(np.abs(w - v))) < 0.1 * tol:
            return w, lam, it
        v = w
    raise NumericalError(f"power iteration did not converge in {max_iters} steps")


def gibbs_eigendata(pot: InducedPotential, n_sym: int | None = None, depth: int = 1,
                    tol_eig: float = TOL_EIG, max_iters: int = MAX_ITERS,
                    measure_depth: int = 4) -> GibbsData:
    """Leading eigendata of the truncated transfer matrix.

    ``m`` solves ``A m = lambda m`` and is a probability; ``h`` solves
    ``A^T h = lambda h`` with ``sum h m = 1``.  Residuals are measured in
    the unshifted scale: ``||A^T h - lambda h||_inf`` and
    ``||A m - lambda m||_1``.
    """
    if n_sym is not None:
        pot = pot.truncate(n_sym)
    logm = pot.log_matrix(depth)
    if not np.all(np.isfinite(logm)):
        raise PreconditionError("truncated pressure must be finite")
    B, c = _shifted_exp(logm)
    m, lam_m, it_m = _power(B, tol_eig, max_iters)
    h, lam_h, it_h = _power(B, tol_eig, max_iters, transpose=True)
    # Rayleigh-type refinement of the common eigenvalue
    lam_s = float(np.sum(B @ m)) / float(np.sum(m))
    # polish both vectors with one extra normalised step each
    m = B @ m
    m /= np.sum(m)
    h = B.T @ h
    h /= float(np.dot(h, m))
    lam = lam_s * math.exp(c)
    A = np.exp(logm)
    res_h = float(np.max(np.abs(A.T @ h - lam * h)))
    res_m = float(np.sum(np.abs(A @ m - lam * m)))
    cyl = CylinderMeasure(log_matrix=logm, lam=lam, m1=m, depth=measure_depth, coef_depth=depth)
    return GibbsData(lam=lam, log_lambda=math.log(lam), h=h, m=cyl,
                     truncation_size=pot.size, depth=depth, residual_h=res_h, residual_m=res_m,
                     iterations=max(it_m, it_h), potential=pot)


def _symbols(size: int, limit: int) -> list[int]:
    return list(range(min(size, limit)))


def verify_gibbs(data: GibbsData, pot: InducedPotential | None = None, depth: int = 4,
                 max_symbols: int = 4, exact: bool = False) -> dict:
    """Gibbs ratios ``mu(C) / exp(Phi_n(x_C) - n log lambda)`` on cylinders up to ``depth``.

    With ``exact`` the Birkhoff sums are re-evaluated at the geometric
    cylinder centres (scheme-backed potentials only); otherwise the
    locally constant values are used.
    """
    pot = data.potential if pot is None else pot
    syms = _symbols(pot.size, max_symbols)
    lo, hi = math.inf, -math.inf
    for n in range(1, depth + 1):
        for w in itertools.product(syms, repeat=n):
            s = pot.birkhoff_at_center(w) if exact else pot.word_sum(w, data.depth)
            ratio = data.mu(w) / math.exp(s - n * data.log_lambda)
            lo, hi = min(lo, ratio), max(hi, ratio)
    K = max(hi, 1.0 / lo)
    return {"K": K, "min_ratio": lo, "max_ratio": hi, "depth": depth,
            "symbols": len(syms), "exact_centres": exact}


def verify_conformal(m: CylinderMeasure, pot: InducedPotential, log_lambda: float,
                     depth: int = 4, tol: float = TOL_MEAS, max_symbols: int = 4,
                     exact: bool = False) -> dict:
    """Check ``m(sigma C) = lambda exp(-Phi(x_C)) m(C)`` on cylinders ``C = [a w]``.

    ``Phi(x_C)`` is the single-return induced potential at the cylinder's
    centre: the locally constant value by default or, with ``exact``, the
    Birkhoff sum at the geometric centre.  The reported residual is
    relative to ``m(sigma C)``.
    """
    syms = _symbols(m.size, max_symbols)
    lam = math.exp(log_lambda)
    worst = 0.0
    count = 0
    for n in range(2, depth + 1):
        for w in itertools.product(syms, repeat=n):
            phi = pot.return_sum_at_center(w) if exact else float(m.log_matrix[w[0], w[1]])
            lhs = m.weight(w[1:])
            rhs = lam * math.exp(-phi) * m.weight(w)
            worst = max(worst, abs(lhs - rhs) / lhs)
            count += 1
    additivity = m.additivity_residual(depth, syms)
    return {"max_relative_residual": worst, "passed": worst <= tol and additivity <= tol,
            "additivity_residual": additivity, "cylinders": count, "exact_centres": exact}


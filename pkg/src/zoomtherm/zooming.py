"""Hyperbolic and zooming times along finite orbits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import MapModel, evaluate_orbit
from .errors import PreconditionError
from .intervals import Interval
from .settings import SAMPLES_PER_INTERVAL, TOL_INV

# slack on the product test so that equality (doubling with sigma = 1/2) survives rounding
_LOG_SLACK = 1e-12


@dataclass(frozen=True)
class ZoomingContraction:
    """Zooming contraction ``alpha_n`` plus zooming-ball radius ``delta``.

    With ``sigma`` set, ``alpha_n(r) = sigma**(n/2) * r`` and zooming times
    are detected with the hyperbolic-time test at rate ``sigma`` and
    recurrence radius ``epsilon``.  Alternatively ``table`` gives linear
    multipliers ``alpha_n(r) = table[n-1] * r``, extended geometrically past
    its end.
    """

    sigma: float | None = 0.5
    delta: float = 0.25
    epsilon: float = 0.1
    table: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.table is None:
            if self.sigma is None or not 0.0 < self.sigma < 1.0:
                raise PreconditionError(f"sigma must lie in (0, 1), got {self.sigma}")
        else:
            if not self.table or any(not 0.0 < c < 1.0 for c in self.table):
                raise PreconditionError("table multipliers must lie in (0, 1)")
            object.__setattr__(self, "table", tuple(float(c) for c in self.table))
        if self.delta <= 0 or self.epsilon <= 0:
            raise PreconditionError("delta and epsilon must be positive")

    @property
    def kind(self) -> str:
        return "exponential" if self.table is None else "table"

    def multiplier(self, n: int) -> float:
        if n < 1:
            raise ValueError("alpha_n is defined for n >= 1")
        if self.table is None:
            return self.sigma ** (n / 2.0)
        if n <= len(self.table):
            return self.table[n - 1]
        last = self.table[-1]
        rate = last ** (1.0 / len(self.table))
        return last * rate ** (n - len(self.table))

    def alpha(self, n: int, r):
        return self.multiplier(n) * np.asarray(r, dtype=float)

    def log_threshold(self, k: int) -> float:
        """Log of the admissible backward product over the last ``k`` steps."""
        if self.table is None:
            return k * math.log(self.sigma)
        return math.log(self.multiplier(k))

    def tail_sum(self, N: int, r: float) -> float:
        """``sum_{n > N} alpha_n(r)``."""
        if self.table is None:
            s = math.sqrt(self.sigma)
            return r * s ** (N + 1) / (1.0 - s)
        total = sum(self.multiplier(n) for n in range(N + 1, len(self.table) + 1))
        start = max(N + 1, len(self.table) + 1)
        head = self.multiplier(start)
        rate = self.table[-1] ** (1.0 / len(self.table))
        return r * (total + head / (1.0 - rate))

    def check_axioms(self, n_max: int = 20, radii=None) -> dict:
        """Grid check of the four zooming-contraction axioms."""
        radii = np.geomspace(1e-6, 0.999, 25) if radii is None else np.asarray(radii)
        below = all(np.all(self.alpha(n, radii) < radii) for n in range(1, n_max + 1))
        increasing = all(np.all(np.diff(self.alpha(n, radii)) > 0) for n in range(1, n_max + 1))
        compose = True
        for m in range(1, n_max + 1):
            for n in range(1, n_max + 1):
                lhs = self.alpha(m, self.alpha(n, radii))
                rhs = self.alpha(m + n, radii)
                compose &= bool(np.all(lhs <= rhs * (1 + 1e-12)))
        summable = math.isfinite(self.tail_sum(0, 1.0))
        return {"below_identity": below, "increasing": increasing,
                "composition": compose, "summable": summable}


@dataclass(frozen=True)
class HyperbolicTimeRecord:
    base_point: float
    times: tuple[int, ...]
    sigma: float
    epsilon: float
    b_exponent: float | None
    n_max: int
    hit_critical: bool = False
    orbit: np.ndarray = field(default=None, repr=False, compare=False)


def b_exponent(beta: float) -> float | None:
    """``(1/3) min(1, 1/beta)``; ``None`` when the distance test is vacuous."""
    if beta <= 0:
        return None
    return min(1.0, 1.0 / beta) / 3.0


def truncated_distance(d, epsilon: float):
    d = np.asarray(d, dtype=float)
    return np.where(d < epsilon, d, 1.0)


def detect_hyperbolic_times(fmap: MapModel, x0: float, n_max: int, sigma: float,
                            epsilon: float) -> HyperbolicTimeRecord:
    """All ``n <= n_max`` that are ``(sigma, epsilon)``-hyperbolic times of ``x0``.

    ``n`` qualifies when, for every ``1 <= k <= n``, the product of
    ``|f'|^{-1}`` over the last ``k`` orbit points is at most ``sigma**k``
    and the point ``f^{n-k}(x0)`` is at truncated distance at least
    ``sigma**(b*k)`` from the critical set.
    """
    if not 0.0 < sigma < 1.0:
        raise PreconditionError("sigma must lie in (0, 1)")
    if epsilon <= 0:
        raise PreconditionError("epsilon must be positive")
    orbit = evaluate_orbit(fmap, x0, n_max)
    logd = orbit.log_derivatives[:n_max]
    hit = bool(np.any(np.isneginf(logd)))
    cum = np.concatenate([[0.0], np.cumsum(np.where(np.isneginf(logd), -np.inf, logd))])
    b = b_exponent(fmap.beta) if fmap.critical_set else None
    dist = truncated_distance(orbit.critical_distances[:n_max], epsilon)
    log_sigma = math.log(sigma)
    times = []
    for n in range(1, n_max + 1):
        k = np.arange(1, n + 1)
        with np.errstate(invalid="ignore"):
            tail = cum[n] - cum[n - k]
        ok = np.all(tail >= -(k * log_sigma) - _LOG_SLACK)
        if ok and b is not None:
            ok = bool(np.all(dist[n - k] >= sigma ** (b * k)))
        if ok:
            times.append(n)
    return HyperbolicTimeRecord(base_point=float(x0), times=tuple(times), sigma=sigma,
                                epsilon=epsilon, b_exponent=b, n_max=n_max, hit_critical=hit,
                                orbit=orbit.points)


def hyperbolic_frequency(record: HyperbolicTimeRecord, n: int) -> float:
    if n <= 0:
        raise PreconditionError("frequency needs n >= 1")
    if n > record.n_max:
        raise PreconditionError(f"record only covers n <= {record.n_max}")
    return sum(1 for t in record.times if t <= n) / n


@dataclass(frozen=True)
class ZoomingPreBall:
    center: float
    order: int
    interval: Interval
    target: Interval
    chain: tuple[Interval, ...]  # f^j(V) for j = 0..order


def zooming_preball(fmap: MapModel, x: float, n: int, delta: float) -> ZoomingPreBall:
    """Pull ``B_delta(f^n x)`` back along the orbit of ``x``."""
    if n < 0:
        raise PreconditionError("order must be nonnegative")
    orbit = evaluate_orbit(fmap, x, n)
    target = fmap.phase.ball(float(orbit.points[n]), delta)
    pieces = [target]
    current = target
    for j in range(n - 1, -1, -1):
        current = fmap.local_pullback(current, float(orbit.points[j]))
        pieces.append(current)
    pieces.reverse()
    if not pieces[0].contains(x, tol=TOL_INV):
        raise PreconditionError("pre-ball does not contain its centre; delta too large")
    return ZoomingPreBall(center=float(x), order=n, interval=pieces[0], target=target,
                          chain=tuple(pieces))


def _interior_grid(iv: Interval, count: int) -> np.ndarray:
    return np.linspace(iv.lo, iv.hi, count + 2)[1:-1]


def _push(fmap: MapModel, ball: ZoomingPreBall, x: np.ndarray) -> list[np.ndarray]:
    pts = [x]
    for _ in range(ball.order):
        pts.append(np.asarray(fmap(pts[-1]), dtype=float))
    return pts


def contraction_check(fmap: MapModel, ball: ZoomingPreBall, contraction: ZoomingContraction,
                      n_samples: int = SAMPLES_PER_INTERVAL) -> dict:
    """Worst ratio ``d(f^j y, f^j z) / alpha_{n-j}(d(f^n y, f^n z))`` over sample pairs."""
    x = _interior_grid(ball.interval, n_samples)
    pts = _push(fmap, ball, x)
    n = ball.order
    iu, ju = np.triu_indices(x.size, 1)
    final = fmap.phase.dist(pts[n][iu], pts[n][ju])
    worst = 0.0
    worst_diam = 0.0
    for j in range(n):
        d = fmap.phase.dist(pts[j][iu], pts[j][ju])
        bound = contraction.alpha(n - j, final)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(bound > 0, d / bound, 0.0)
        worst = max(worst, float(np.max(ratio)) if ratio.size else 0.0)
        diam_bound = float(contraction.alpha(n - j, 2 * ball.target.radius))
        worst_diam = max(worst_diam, ball.chain[j].length / diam_bound)
    return {"worst_ratio": worst, "holds": worst <= 1.0 + 1e-9,
            "worst_diameter_ratio": worst_diam}


@dataclass(frozen=True)
class DistortionReport:
    max_ratio: float
    rho: float
    passed: bool
    n_pairs: int


def log_jacobian_along(fmap: MapModel, points: list[np.ndarray], n: int) -> np.ndarray:
    total = np.zeros_like(points[0])
    for j in range(n):
        jac = np.asarray(fmap.jacobian(points[j]), dtype=float)
        if np.any(jac <= 0):
            raise PreconditionError("Jacobian vanishes inside the pre-ball")
        total = total + np.log(jac)
    return total


def distortion_check(fmap: MapModel, ball: ZoomingPreBall, rho: float,
                     n_samples: int = SAMPLES_PER_INTERVAL) -> DistortionReport:
    x = _interior_grid(ball.interval, n_samples)
    pts = _push(fmap, ball, x)
    logj = log_jacobian_along(fmap, pts, ball.order)
    iu, ju = np.triu_indices(x.size, 1)
    num = np.abs(logj[iu] - logj[ju])
    den = fmap.phase.dist(pts[ball.order][iu], pts[ball.order][ju])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / den, 0.0)
    worst = float(np.max(ratio)) if ratio.size else 0.0
    return DistortionReport(max_ratio=worst, rho=rho, passed=worst <= rho, n_pairs=int(iu.size))

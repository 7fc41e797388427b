"""Concrete one-dimensional maps with exact branch structure.

A :class:`MapModel` is a piecewise-monotone self-map of a circle or of a
compact interval.  Each :class:`Branch` carries vectorised forward, inverse
and derivative callables; circle branches accept lifted coordinates so that
intervals crossing ``0`` pull back without special cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NumericalError, PreconditionError
from .intervals import Interval, is_subset
from .settings import H_FD, TOL_FD, TOL_INV, TOL_ORBIT

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PhaseSpace:
    kind: str  # "circle" or "interval"
    lo: float
    hi: float

    def __post_init__(self):
        if self.kind not in ("circle", "interval"):
            raise ConfigError(f"unknown phase space kind {self.kind!r}")
        if not self.hi > self.lo:
            raise ConfigError("phase space must have positive length")
        if self.kind == "circle" and self.lo != 0.0:
            raise ConfigError("circles are represented as [0, period)")

    @property
    def period(self) -> float | None:
        return self.hi - self.lo if self.kind == "circle" else None

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def whole(self) -> Interval:
        return Interval(self.lo, self.hi, self.period, closed_lo=True,
                        closed_hi=self.kind == "interval")

    def interval(self, lo: float, hi: float, **flags) -> Interval:
        return Interval(lo, hi, self.period, **flags)

    def wrap(self, x):
        if self.kind == "circle":
            return np.mod(x, self.period)
        return x

    def contains(self, x: float, tol: float = 0.0) -> bool:
        if self.kind == "circle":
            return math.isfinite(x)
        return self.lo - tol <= x <= self.hi + tol

    def dist(self, x, y):
        d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        if self.kind == "circle":
            d = np.mod(d, self.period)
            d = np.minimum(d, self.period - d)
        return d

    def ball(self, center: float, radius: float) -> Interval:
        """Open ball, clipped to the interval for interval phase spaces."""
        if self.kind == "circle":
            radius = min(radius, 0.5 * self.period)
            return Interval(center - radius, center + radius, self.period)
        return Interval(max(self.lo, center - radius), min(self.hi, center + radius))


@dataclass(frozen=True)
class Branch:
    index: int
    domain: Interval
    image: Interval
    forward: Fn
    inverse: Fn
    derivative: Fn
    increasing: bool

    def pull_back(self, target: Interval, tol: float = TOL_INV) -> Interval | None:
        """Sub-interval of the domain mapped homeomorphically onto ``target``.

        ``None`` when the branch image does not contain the closure of the
        target.
        """
        if self.image.period is None:
            if target.lo < self.image.lo - tol or target.hi > self.image.hi + tol:
                return None
        elif not is_subset(target, self.image, tol):
            return None
        a, b = float(self.inverse(target.lo)), float(self.inverse(target.hi))
        lo, hi = (a, b) if a <= b else (b, a)
        return Interval(lo, hi, target.period)


@dataclass(frozen=True)
class ReferenceJacobian:
    """Jacobian of the reference measure; Lebesgue gives ``|f'|``."""

    jacobian: Fn
    distortion_constant: float
    kind: str = "lebesgue"
    # user-asserted: J <= 1 outside the expanding set
    convention_asserted: bool = True


@dataclass(frozen=True)
class MapModel:
    name: str
    phase: PhaseSpace
    branches: tuple[Branch, ...]
    critical_set: tuple[float, ...] = ()
    nondegeneracy: tuple[float, float] = (1.0, 0.0)  # (B, beta); metadata only
    params: tuple[tuple[str, float], ...] = ()
    conformal: bool = False
    reference: ReferenceJacobian | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.reference is None:
            object.__setattr__(self, "reference", ReferenceJacobian(
                jacobian=lambda x: np.abs(self.derivative(x)), distortion_constant=1.0))

    @property
    def beta(self) -> float:
        return self.nondegeneracy[1]

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    @property
    def _domain_starts(self) -> np.ndarray:
        return np.array([b.domain.lo for b in self.branches])

    def branch_index(self, x):
        x = np.asarray(self.phase.wrap(np.asarray(x, dtype=float)))
        idx = np.searchsorted(self._domain_starts, x, side="right") - 1
        return np.clip(idx, 0, len(self.branches) - 1)

    def _by_branch(self, x, attr: str):
        x = np.asarray(x, dtype=float)
        xw = self.phase.wrap(x)
        idx = self.branch_index(xw)
        out = np.empty_like(xw)
        for k, br in enumerate(self.branches):
            mask = idx == k
            if np.any(mask):
                out[mask] = getattr(br, attr)(xw[mask])
        return out

    def __call__(self, x):
        y = self._by_branch(x, "forward")
        y = self.phase.wrap(y)
        return y if np.ndim(y) else float(y)

    def derivative(self, x):
        d = self._by_branch(x, "derivative")
        return d if np.ndim(d) else float(d)

    def jacobian(self, x):
        return self.reference.jacobian(x)

    def critical_distance(self, x):
        x = np.asarray(x, dtype=float)
        if not self.critical_set:
            return np.full(x.shape, np.inf) if x.ndim else math.inf
        d = np.min([self.phase.dist(x, c) for c in self.critical_set], axis=0)
        return d if np.ndim(d) else float(d)

    def local_pullback(self, target: Interval, x_ref: float, branch: int | None = None,
                       tol: float = TOL_INV) -> Interval:
        """Component of ``f^{-1}(target)`` containing ``x_ref``.

        Raises :class:`PreconditionError` if that component is not mapped
        homeomorphically onto ``target`` (it would cross a branch boundary).
        """
        k = int(self.branch_index(x_ref)) if branch is None else branch
        if self.phase.kind == "circle":
            candidates = [br.pull_back(target, tol) for br in self.branches]
            for iv in candidates:
                if iv is not None and iv.contains(x_ref, tol=tol):
                    return iv
            raise PreconditionError(f"no pull-back of {target} contains {x_ref}")
        iv = self.branches[k].pull_back(target, tol)
        if iv is None:
            raise PreconditionError(
                f"pull-back of {target} along branch {k} crosses a branch boundary;"
                " use a smaller radius")
        return iv

    def default_delta(self) -> float:
        """Half the smallest branch-image radius."""
        return 0.5 * min(b.image.radius for b in self.branches)


@dataclass(frozen=True)
class OrbitSegment:
    points: np.ndarray
    log_derivatives: np.ndarray
    critical_distances: np.ndarray
    branches: np.ndarray

    def __len__(self) -> int:
        return self.points.size


def _circle_affine_branches(degree: int) -> tuple[Branch, ...]:
    whole = Interval(0.0, 1.0, 1.0)
    out = []
    for k in range(degree):
        out.append(Branch(
            index=k,
            domain=Interval(k / degree, (k + 1) / degree, 1.0, closed_lo=True),
            image=whole,
            forward=lambda x, k=k: degree * np.asarray(x) - k,
            inverse=lambda y, k=k: (np.asarray(y) + k) / degree,
            derivative=lambda x: np.full(np.shape(x), float(degree)),
            increasing=True,
        ))
    return tuple(out)


def piecewise_affine(breakpoints: Sequence[float], images: Sequence[tuple[float, float]] | None = None,
                     name: str = "piecewise_affine") -> MapModel:
    """Interval map affine on each ``[b_i, b_{i+1}]``.

    ``images[i] = (y0, y1)`` gives the values at the left and right ends of
    branch ``i`` (orientation follows their order).  By default every branch
    is increasing and onto the whole interval.
    """
    bp = [float(b) for b in breakpoints]
    if len(bp) < 2 or any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
        raise ConfigError("breakpoints must be strictly increasing")
    lo, hi = bp[0], bp[-1]
    if images is None:
        images = [(lo, hi)] * (len(bp) - 1)
    if len(images) != len(bp) - 1:
        raise ConfigError("need one image per branch")
    branches = []
    for k, ((x0, x1), (y0, y1)) in enumerate(zip(zip(bp, bp[1:]), images)):
        if y0 == y1:
            raise ConfigError("affine branches must be strictly monotone")
        if min(y0, y1) < lo or max(y0, y1) > hi:
            raise ConfigError("branch image leaves the phase space")
        slope = (y1 - y0) / (x1 - x0)
        branches.append(Branch(
            index=k,
            domain=Interval(x0, x1, closed_lo=True, closed_hi=k == len(bp) - 2),
            image=Interval(min(y0, y1), max(y0, y1), closed_lo=True, closed_hi=True),
            forward=lambda x, x0=x0, y0=y0, s=slope: y0 + s * (np.asarray(x) - x0),
            inverse=lambda y, x0=x0, y0=y0, s=slope: x0 + (np.asarray(y) - y0) / s,
            derivative=lambda x, s=slope: np.full(np.shape(x), s),
            increasing=slope > 0,
        ))
    return MapModel(name=name, phase=PhaseSpace("interval", lo, hi), branches=tuple(branches),
                    nondegeneracy=(max(abs(b.derivative(0.0)) for b in branches), 0.0))


def _quadratic(a: float) -> MapModel:
    # invariant interval [-q, q], q the modulus of the negative fixed point
    q = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * a))
    image = Interval(-q, a, closed_lo=True, closed_hi=True)
    left = Branch(
        index=0,
        domain=Interval(-q, 0.0, closed_lo=True),
        image=image,
        forward=lambda x: a - np.asarray(x) ** 2,
        inverse=lambda y: -np.sqrt(np.maximum(a - np.asarray(y), 0.0)),
        derivative=lambda x: -2.0 * np.asarray(x),
        increasing=True,
    )
    right = Branch(
        index=1,
        domain=Interval(0.0, q, closed_lo=True, closed_hi=True),
        image=image,
        forward=lambda x: a - np.asarray(x) ** 2,
        inverse=lambda y: np.sqrt(np.maximum(a - np.asarray(y), 0.0)),
        derivative=lambda x: -2.0 * np.asarray(x),
        increasing=False,
    )
    return MapModel(name="quadratic", phase=PhaseSpace("interval", -q, q), branches=(left, right),
                    critical_set=(0.0,), nondegeneracy=(2.0 * q * q, 1.0), params=(("a", a),),
                    reference=None)


BUILTIN_MAPS = ("doubling", "tent", "quadratic", "shift2")


def builtin_map(name: str, params: dict | None = None) -> MapModel:
    """Construct one of the built-in families.

    Parameters
    ----------
    name : {"doubling", "tent", "quadratic", "shift2"}
    params : dict, optional
        ``quadratic`` takes ``a`` in ``(1, 2]`` (default 2); the others take
        no parameters.
    """
    params = dict(params or {})
    if name in ("doubling", "shift2"):
        if params:
            raise ConfigError(f"{name} takes no parameters, got {sorted(params)}")
        conformal = name == "shift2"
        return MapModel(name=name, phase=PhaseSpace("circle", 0.0, 1.0),
                        branches=_circle_affine_branches(2), nondegeneracy=(2.0, 0.0),
                        conformal=conformal,
                        reference=ReferenceJacobian(lambda x: np.full(np.shape(x), 2.0), 1e-12))
    if name == "tent":
        if params:
            raise ConfigError(f"tent takes no parameters, got {sorted(params)}")
        m = piecewise_affine([0.0, 0.5, 1.0], images=[(0.0, 1.0), (1.0, 0.0)], name="tent")
        return m
    if name == "quadratic":
        unknown = set(params) - {"a"}
        if unknown:
            raise ConfigError(f"quadratic: unknown parameters {sorted(unknown)}")
        a = float(params.get("a", 2.0))
        if not 1.0 < a <= 2.0:
            raise ConfigError(f"quadratic parameter a={a} outside (1, 2]")
        return _quadratic(a)
    raise ConfigError(f"unknown map {name!r}; choose one of {', '.join(BUILTIN_MAPS)}")


def evaluate_orbit(fmap: MapModel, x0: float, n: int) -> OrbitSegment:
    if n < 0:
        raise PreconditionError("orbit length must be nonnegative")
    if not fmap.phase.contains(x0, TOL_ORBIT):
        raise PreconditionError(f"x0={x0} outside the phase space")
    pts = np.empty(n + 1)
    pts[0] = float(fmap.phase.wrap(x0)) if fmap.phase.kind == "circle" else x0
    for i in range(n):
        pts[i + 1] = fmap(pts[i])
        if not fmap.phase.contains(pts[i + 1], TOL_ORBIT):
            raise NumericalError(f"orbit left the phase space at step {i + 1}")
    deriv = np.abs(fmap.derivative(pts))
    with np.errstate(divide="ignore"):
        logd = np.where(deriv > 0, np.log(np.where(deriv > 0, deriv, 1.0)), -np.inf)
    crit = np.asarray(fmap.critical_distance(pts), dtype=float).reshape(pts.shape)
    return OrbitSegment(points=pts, log_derivatives=logd, critical_distances=crit,
                        branches=np.asarray(fmap.branch_index(pts)).reshape(pts.shape))


def branch_preimages(fmap: MapModel, target: Interval) -> list[tuple[Interval, int]]:
    """Order-1 regular pre-images of ``target``, one per fully covering branch."""
    out = []
    for br in fmap.branches:
        iv = br.pull_back(target)
        if iv is not None:
            out.append((iv, br.index))
    return out


def validate_map(fmap: MapModel, n_grid: int = 257, tol_inv: float = TOL_INV,
                 tol_fd: float = TOL_FD, h_fd: float = H_FD) -> dict:
    """Grid check of the MapModel invariants.

    Returns the worst round-trip error, worst relative finite-difference
    mismatch (away from critical points), and per-branch monotonicity.
    """
    worst_inv = 0.0
    worst_fd = 0.0
    monotone = []
    for br in fmap.branches:
        lo, hi = br.domain.lo, br.domain.hi
        x = np.linspace(lo, hi, n_grid)[1:-1]
        y = br.forward(x)
        worst_inv = max(worst_inv, float(np.max(np.abs(br.inverse(y) - x))))
        dy = np.diff(y)
        monotone.append(bool(np.all(dy > 0) if br.increasing else np.all(dy < 0)))
        far = np.ones_like(x, dtype=bool)
        for c in fmap.critical_set:
            far &= np.abs(x - c) >= 10 * h_fd
        far &= (x - lo > 10 * h_fd) & (hi - x > 10 * h_fd)
        xs = x[far]
        fd = (br.forward(xs + h_fd) - br.forward(xs - h_fd)) / (2 * h_fd)
        d = br.derivative(xs)
        rel = np.abs(d - fd) / np.maximum(1.0, np.abs(d))
        if rel.size:
            worst_fd = max(worst_fd, float(np.max(rel)))
    return {
        "round_trip": worst_inv,
        "round_trip_ok": worst_inv < tol_inv,
        "finite_difference": worst_fd,
        "finite_difference_ok": worst_fd < tol_fd,
        "monotone": monotone,
    }


def shift_metric(x: Sequence[int], y: Sequence[int]) -> float:
    """``sum |x_n - y_n| / 2^n`` on (truncated) one-sided binary sequences."""
    return float(sum(abs(a - b) / 2.0 ** (n + 1) for n, (a, b) in enumerate(zip(x, y))))


def binary_digits(x: float, n: int) -> list[int]:
    """First ``n`` binary digits of ``x`` in ``[0, 1)``; the conjugacy to ``shift2``."""
    out = []
    x = x % 1.0
    for _ in range(n):
        x *= 2.0
        d = int(x >= 1.0)
        out.append(d)
        x -= d
    return out

"""Intervals on a line segment or on a circle, and finite unions of them.

Circle intervals are stored in lifted coordinates: ``lo`` is normalised into
``[0, period)`` and ``hi`` may exceed ``period`` (at most one wrap).  All set
comparisons are made on interiors, with a length tolerance, so intervals that
only share an endpoint are treated as disjoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .settings import TOL_INV


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    period: float | None = None
    closed_lo: bool = False
    closed_hi: bool = False

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"non-finite interval endpoints ({lo}, {hi})")
        if hi < lo:
            raise ValueError(f"interval with hi < lo: ({lo}, {hi})")
        if self.period is not None:
            p = float(self.period)
            if hi - lo > p:
                hi = lo + p
            shift = math.floor(lo / p) * p
            lo, hi = lo - shift, hi - shift
            if lo >= p:
                lo, hi = lo - p, hi - p
            object.__setattr__(self, "period", p)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def radius(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @property
    def wraps(self) -> bool:
        return self.period is not None and self.hi > self.period

    def pieces(self) -> list[tuple[float, float]]:
        """Non-wrapping pieces in base coordinates."""
        if self.period is None or self.hi <= self.period:
            return [(self.lo, self.hi)]
        if self.length >= self.period:
            return [(0.0, self.period)]
        return [(self.lo, self.period), (0.0, self.hi - self.period)]

    def lift_near(self, x: float) -> float:
        """Representative of ``x`` (mod period) closest to this interval's midpoint."""
        if self.period is None:
            return x
        p = self.period
        return x + round((self.mid - x) / p) * p

    def contains(self, x: float, tol: float = 0.0) -> bool:
        x = self.lift_near(x)
        if tol > 0:
            return self.lo - tol < x < self.hi + tol
        left = x >= self.lo if self.closed_lo else x > self.lo
        right = x <= self.hi if self.closed_hi else x < self.hi
        return bool(left and right)

    def closure(self) -> Interval:
        return replace(self, closed_lo=True, closed_hi=True)

    def shrink(self, factor: float) -> Interval:
        """Concentric interval with radius scaled by ``factor``."""
        r = self.radius * factor
        return replace(self, lo=self.mid - r, hi=self.mid + r)

    def as_tuple(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def __repr__(self) -> str:
        left = "[" if self.closed_lo else "("
        right = "]" if self.closed_hi else ")"
        tag = "" if self.period is None else f" mod {self.period:g}"
        return f"{left}{self.lo:.12g}, {self.hi:.12g}{right}{tag}"


def overlap_length(a: Interval, b: Interval) -> float:
    total = 0.0
    for alo, ahi in a.pieces():
        for blo, bhi in b.pieces():
            total += max(0.0, min(ahi, bhi) - max(alo, blo))
    return total


def is_subset(a: Interval, b: Interval, tol: float = TOL_INV) -> bool:
    """True when ``a`` minus ``b`` has length at most ``tol``."""
    return a.length - overlap_length(a, b) <= tol


def same_interval(a: Interval, b: Interval, tol: float = TOL_INV) -> bool:
    if a.period != b.period:
        return False
    if abs(a.length - b.length) > tol:
        return False
    d = a.lo - b.lo
    if a.period is not None:
        d -= round(d / a.period) * a.period
    return abs(d) <= tol


def linked(a: Interval, b: Interval, tol: float = TOL_INV) -> bool:
    """Proper overlap: shared interior and a residual on both sides.

    Disjoint or boundary-touching intervals are never linked, and neither
    are nested ones.
    """
    common = overlap_length(a, b)
    if common <= tol:
        return False
    return a.length - common > tol and b.length - common > tol


class IntervalUnion:
    """Finite union of disjoint open intervals inside ``[base_lo, base_hi]``.

    Stored as sorted endpoint arrays; all operations are vectorised.  For a
    circle ``base_lo = 0`` and ``base_hi = period`` and pieces that touch both
    ends are re-joined by :meth:`to_intervals`.
    """

    __slots__ = ("lo", "hi", "base", "period")

    def __init__(self, lo, hi, base: tuple[float, float], period: float | None = None,
                 tol: float = 0.0, presorted: bool = False):
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        lo = np.clip(lo, base[0], base[1])
        hi = np.clip(hi, base[0], base[1])
        keep = hi - lo > tol
        lo, hi = lo[keep], hi[keep]
        if not presorted:
            lo, hi = _merge(lo, hi, tol)
        self.lo, self.hi = lo, hi
        self.base = (float(base[0]), float(base[1]))
        self.period = period

    @classmethod
    def empty(cls, base, period=None) -> IntervalUnion:
        return cls([], [], base, period)

    @classmethod
    def full(cls, base, period=None) -> IntervalUnion:
        return cls([base[0]], [base[1]], base, period)

    @classmethod
    def from_intervals(cls, intervals: Iterable[Interval], base, period=None,
                       tol: float = 0.0) -> IntervalUnion:
        los, his = [], []
        for iv in intervals:
            for plo, phi in iv.pieces():
                los.append(plo)
                his.append(phi)
        return cls(los, his, base, period, tol=tol)

    def __len__(self) -> int:
        return int(self.lo.size)

    @property
    def measure(self) -> float:
        return float(np.sum(self.hi - self.lo))

    def _like(self, lo, hi, tol=0.0) -> IntervalUnion:
        return IntervalUnion(lo, hi, self.base, self.period, tol=tol)

    def union(self, other: IntervalUnion, tol: float = 0.0) -> IntervalUnion:
        return self._like(np.concatenate([self.lo, other.lo]),
                          np.concatenate([self.hi, other.hi]), tol)

    def complement(self) -> IntervalUnion:
        b0, b1 = self.base
        lo = np.concatenate([[b0], self.hi])
        hi = np.concatenate([self.lo, [b1]])
        return self._like(lo, hi)

    def intersect(self, other: IntervalUnion, tol: float = 0.0) -> IntervalUnion:
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        los, his = [], []
        for slo, shi in zip(small.lo, small.hi):
            i0 = np.searchsorted(big.hi, slo, side="right")
            i1 = np.searchsorted(big.lo, shi, side="left")
            if i1 <= i0:
                continue
            los.append(np.maximum(big.lo[i0:i1], slo))
            his.append(np.minimum(big.hi[i0:i1], shi))
        if not los:
            return IntervalUnion.empty(self.base, self.period)
        return self._like(np.concatenate(los), np.concatenate(his), tol)

    def subtract(self, other: IntervalUnion, tol: float = 0.0) -> IntervalUnion:
        return self.intersect(other.complement(), tol)

    def to_intervals(self) -> list[Interval]:
        pieces = list(zip(self.lo.tolist(), self.hi.tolist()))
        if (self.period is not None and len(pieces) > 1
                and pieces[0][0] <= self.base[0] and pieces[-1][1] >= self.base[1]):
            first = pieces.pop(0)
            last = pieces.pop()
            pieces.append((last[0], first[1] + self.period))
            pieces.sort()
        return [Interval(lo, hi, self.period) for lo, hi in pieces]

    def component_containing(self, x: float) -> Interval | None:
        for iv in self.to_intervals():
            if iv.contains(x):
                return iv
        return None

    def __repr__(self) -> str:
        return f"IntervalUnion({len(self)} pieces, measure={self.measure:.6g})"


def _merge(lo: np.ndarray, hi: np.ndarray, tol: float = 0.0):
    if lo.size == 0:
        return lo, hi
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    run = np.maximum.accumulate(hi)
    starts = np.ones(lo.size, dtype=bool)
    starts[1:] = lo[1:] > run[:-1] + tol
    idx = np.flatnonzero(starts)
    new_lo = lo[idx]
    ends = np.append(idx[1:], lo.size) - 1
    new_hi = run[ends]
    return new_lo, new_hi


def hull(intervals: Sequence[Interval]) -> Interval:
    """Smallest non-wrapping interval containing every argument (line case)."""
    return Interval(min(iv.lo for iv in intervals), max(iv.hi for iv in intervals),
                    intervals[0].period)

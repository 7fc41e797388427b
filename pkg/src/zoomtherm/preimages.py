"""Level-by-level backward tree of regular pre-images.

Level ``n`` holds every pre-image of order ``n`` of the root intervals, as
endpoint arrays plus a parent pointer into level ``n - 1``.  Following parent
pointers gives the forward itinerary ``f^j(P)``; the branch used at each step
gives the branch word.

Two modes are supported:

* plain: every branch whose image covers the node is followed;
* zooming: each node also carries the pull-back of the zooming ball
  ``B_delta`` around the root midpoint and the pulled-back midpoint; a node
  survives only if the ball pull-back stays inside one branch and the
  backward derivative product at the midpoint meets the contraction
  threshold at every depth (the slow-recurrence test is applied too when the
  map has critical points).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import MapModel
from .errors import BlowUpError, PreconditionError
from .intervals import Interval
from .settings import MAX_PREIMAGES, TOL_INV
from .zooming import ZoomingContraction, b_exponent, truncated_distance

_LOG_SLACK = 1e-12

StopRule = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass
class Level:
    lo: np.ndarray
    hi: np.ndarray
    parent: np.ndarray
    branch: np.ndarray
    target: np.ndarray
    point: np.ndarray
    ball_lo: np.ndarray | None = None
    ball_hi: np.ndarray | None = None
    logsum: np.ndarray | None = None
    stopped: np.ndarray | None = None

    @property
    def size(self) -> int:
        return int(self.lo.size)

    def take(self, mask: np.ndarray) -> Level:
        def sub(a):
            return None if a is None else a[mask]
        return Level(self.lo[mask], self.hi[mask], self.parent[mask], self.branch[mask],
                     self.target[mask], self.point[mask], sub(self.ball_lo), sub(self.ball_hi),
                     sub(self.logsum), sub(self.stopped))


@dataclass
class PreimageTree:
    fmap: MapModel
    roots: tuple[Interval, ...]
    levels: list[Level]
    contraction: ZoomingContraction | None = None
    pruned: dict = field(default_factory=dict)

    @property
    def period(self) -> float | None:
        return self.fmap.phase.period

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def count(self) -> int:
        return sum(lv.size for lv in self.levels[1:])

    def interval(self, order: int, idx: int) -> Interval:
        lv = self.levels[order]
        return Interval(float(lv.lo[idx]), float(lv.hi[idx]), self.period)

    def word(self, order: int, idx: int) -> tuple[int, ...]:
        """Branches used by ``f, f^2, ...`` starting from the node, in forward order."""
        out = []
        for n in range(order, 0, -1):
            lv = self.levels[n]
            out.append(int(lv.branch[idx]))
            idx = int(lv.parent[idx])
        return tuple(out)

    def itinerary(self, order: int, idx: int) -> tuple[Interval, ...]:
        """``f^j(P)`` for ``0 <= j < order``."""
        out = []
        for n in range(order, 0, -1):
            out.append(self.interval(n, idx))
            idx = int(self.levels[n].parent[idx])
        return tuple(out)

    def ancestors(self, order: int, idx: np.ndarray, steps: int) -> np.ndarray:
        """Vectorised index of ``f^steps`` of the nodes ``idx`` at level ``order``."""
        idx = np.asarray(idx)
        for n in range(order, order - steps, -1):
            idx = self.levels[n].parent[idx]
        return idx


def _circle_subset(lo, hi, ulo, uhi, period, tol):
    shift = np.floor((lo - ulo) / period) * period
    lo2, hi2 = lo - shift, hi - shift
    return (lo2 >= ulo - tol) & (hi2 <= uhi + tol)


def subset_mask(lo, hi, container: Interval, period, tol: float = TOL_INV) -> np.ndarray:
    """Vectorised ``(lo, hi) ⊆ container`` up to ``tol``."""
    if period is None:
        return (lo >= container.lo - tol) & (hi <= container.hi + tol)
    if container.length >= period:
        return np.ones(lo.shape, dtype=bool)
    return _circle_subset(lo, hi, container.lo, container.hi, period, tol)


def grow_tree(fmap: MapModel, roots: Sequence[Interval], N: int,
              contraction: ZoomingContraction | None = None,
              stop: StopRule | None = None, max_nodes: int = MAX_PREIMAGES,
              tol: float = TOL_INV) -> PreimageTree:
    """Build all pre-images of ``roots`` of order ``1..N``.

    Parameters
    ----------
    contraction : ZoomingContraction, optional
        Restrict to zooming pre-images (see module docstring).
    stop : callable, optional
        ``stop(lo, hi, target) -> mask``; flagged nodes are kept but their
        subtrees are not explored.
    max_nodes : int
        Guard; :class:`BlowUpError` once the total exceeds it.
    """
    if N < 0:
        raise PreconditionError("cutoff order must be nonnegative")
    period = fmap.phase.period
    lo = np.array([r.lo for r in roots], dtype=float)
    hi = np.array([r.hi for r in roots], dtype=float)
    n_roots = len(roots)
    root = Level(lo, hi, np.full(n_roots, -1), np.full(n_roots, -1), np.arange(n_roots),
                 0.5 * (lo + hi), stopped=np.zeros(n_roots, dtype=bool))
    b = None
    if contraction is not None:
        delta = contraction.delta
        root.ball_lo = root.point - delta
        root.ball_hi = root.point + delta
        if period is None:
            root.ball_lo = np.maximum(root.ball_lo, fmap.phase.lo)
            root.ball_hi = np.minimum(root.ball_hi, fmap.phase.hi)
        elif 2 * delta >= period:
            raise PreconditionError("zooming radius must be below half the circle length")
        root.logsum = np.zeros(n_roots)
        if np.any(hi - lo > root.ball_hi - root.ball_lo + tol):
            raise PreconditionError("root intervals must fit inside the zooming ball")
        if fmap.critical_set and contraction.kind == "exponential":
            b = b_exponent(fmap.beta)
    levels = [root]
    pruned = {"branch_boundary": 0, "hyperbolic": 0}
    total = 0
    for depth in range(1, N + 1):
        parent_lv = levels[-1]
        live = np.flatnonzero(~parent_lv.stopped) if parent_lv.stopped is not None \
            else np.arange(parent_lv.size)
        if live.size == 0:
            break
        pieces = []
        for br in fmap.branches:
            plo, phi = parent_lv.lo[live], parent_lv.hi[live]
            if period is None:
                ok = (plo >= br.image.lo - tol) & (phi <= br.image.hi + tol)
            else:
                ok = np.ones(live.size, dtype=bool)
            idx = live[ok]
            if idx.size == 0:
                continue
            a = br.inverse(parent_lv.lo[idx])
            c = br.inverse(parent_lv.hi[idx])
            new = Level(np.minimum(a, c), np.maximum(a, c), idx,
                        np.full(idx.size, br.index), parent_lv.target[idx],
                        br.inverse(parent_lv.point[idx]))
            if contraction is not None:
                blo, bhi = parent_lv.ball_lo[idx], parent_lv.ball_hi[idx]
                if period is None:
                    inside = (blo >= br.image.lo - tol) & (bhi <= br.image.hi + tol)
                else:
                    inside = np.ones(idx.size, dtype=bool)
                pruned["branch_boundary"] += int(np.count_nonzero(~inside))
                ba = br.inverse(np.clip(blo, br.image.lo, br.image.hi) if period is None else blo)
                bc = br.inverse(np.clip(bhi, br.image.lo, br.image.hi) if period is None else bhi)
                new.ball_lo, new.ball_hi = np.minimum(ba, bc), np.maximum(ba, bc)
                deriv = np.abs(br.derivative(new.point))
                with np.errstate(divide="ignore"):
                    logd = np.where(deriv > 0, np.log(np.where(deriv > 0, deriv, 1.0)), -np.inf)
                new.logsum = parent_lv.logsum[idx] + logd
                hyper = new.logsum >= -contraction.log_threshold(depth) - _LOG_SLACK
                if b is not None:
                    dist = truncated_distance(fmap.critical_distance(new.point),
                                              contraction.epsilon)
                    hyper &= dist >= contraction.sigma ** (b * depth)
                pruned["hyperbolic"] += int(np.count_nonzero(inside & ~hyper))
                new = new.take(inside & hyper)
            pieces.append(new)
        if not pieces:
            break
        merged = Level(*(np.concatenate([getattr(p, name) for p in pieces])
                         for name in ("lo", "hi", "parent", "branch", "target", "point")))
        if contraction is not None:
            merged.ball_lo = np.concatenate([p.ball_lo for p in pieces])
            merged.ball_hi = np.concatenate([p.ball_hi for p in pieces])
            merged.logsum = np.concatenate([p.logsum for p in pieces])
        if period is not None:
            shift = np.floor(merged.lo / period) * period
            merged.lo, merged.hi, merged.point = merged.lo - shift, merged.hi - shift, \
                merged.point - shift
            if contraction is not None:
                merged.ball_lo, merged.ball_hi = merged.ball_lo - shift, merged.ball_hi - shift
        # deterministic ordering: by target then left endpoint
        order = np.lexsort((merged.lo, merged.target))
        merged = merged.take(order)
        merged.stopped = (stop(merged.lo, merged.hi, merged.target) if stop is not None
                          else np.zeros(merged.size, dtype=bool))
        total += merged.size
        if total > max_nodes:
            raise BlowUpError(f"pre-image count exceeded {max_nodes} at order {depth}")
        if merged.size == 0:
            break
        levels.append(merged)
    return PreimageTree(fmap=fmap, roots=tuple(roots), levels=levels, contraction=contraction,
                        pruned=pruned)


def pieces_arrays(lo: np.ndarray, hi: np.ndarray, period: float | None):
    """Split lifted circle intervals into base-coordinate pieces; returns (lo, hi, owner)."""
    owner = np.arange(lo.size)
    if period is None:
        return lo, hi, owner
    wrap = hi > period
    plo = np.concatenate([lo, np.zeros(np.count_nonzero(wrap))])
    phi = np.concatenate([np.minimum(hi, period), hi[wrap] - period])
    return plo, phi, np.concatenate([owner, owner[wrap]])


def overlapping_pairs(lo: np.ndarray, hi: np.ndarray, period: float | None,
                      tol: float = TOL_INV):
    """All index pairs ``i < j`` whose interiors overlap by more than ``tol``.

    Returns ``(i, j, overlap_length)`` arrays.
    """
    plo, phi, owner = pieces_arrays(np.asarray(lo, float), np.asarray(hi, float), period)
    order = np.argsort(plo, kind="stable")
    plo, phi, owner = plo[order], phi[order], owner[order]
    ends = np.searchsorted(plo, phi, side="left")
    counts = np.maximum(ends - np.arange(plo.size) - 1, 0)
    first = np.repeat(np.arange(plo.size), counts)
    if first.size == 0:
        empty = np.zeros(0, dtype=int)
        return empty, empty, np.zeros(0)
    offsets = np.arange(first.size) - np.repeat(np.cumsum(counts) - counts, counts)
    second = first + 1 + offsets
    common = np.minimum(phi[first], phi[second]) - np.maximum(plo[first], plo[second])
    a, b = owner[first], owner[second]
    keep = (common > 0) & (a != b)
    a, b, common = a[keep], b[keep], common[keep]
    i, j = np.minimum(a, b), np.maximum(a, b)
    key = i.astype(np.int64) * (lo.size + 1) + j
    uniq, inv = np.unique(key, return_inverse=True)
    total = np.zeros(uniq.size)
    np.add.at(total, inv, common)
    i_u, j_u = uniq // (lo.size + 1), uniq % (lo.size + 1)
    keep = total > tol
    return i_u[keep].astype(int), j_u[keep].astype(int), total[keep]


def linked_pairs(lo, hi, period, tol: float = TOL_INV):
    """Pairs of properly overlapping intervals (interior overlap, both differences nonempty)."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    i, j, common = overlapping_pairs(lo, hi, period, tol)
    length = hi - lo
    mask = (length[i] - common > tol) & (length[j] - common > tol)
    return i[mask], j[mask]

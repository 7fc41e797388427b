"""Regular pre-images, chains, nested collections, holes and survivor sets."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import MapModel
from .errors import BlowUpError, PreconditionError
from .intervals import Interval, IntervalUnion, is_subset, linked, overlap_length
from .preimages import PreimageTree, grow_tree, linked_pairs, overlapping_pairs
from .settings import MAX_CHAINS, MAX_PREIMAGES, TOL_INV
from .zooming import ZoomingContraction

__all__ = [
    "RegularPreImage", "Chain", "NestedCollection", "Hole", "SurvivorSet", "linked",
    "enumerate_preimages", "enumerate_chains", "validate_chain", "nested_shrink",
    "verify_nested", "build_hole", "survivor_iterate", "preimage_of_union",
]


@dataclass(frozen=True)
class RegularPreImage:
    interval: Interval
    order: int
    target_id: int
    branch_word: tuple[int, ...]

    @property
    def key(self) -> tuple:
        return (self.order, self.target_id, self.branch_word)


@dataclass(frozen=True)
class Chain:
    elements: tuple[RegularPreImage, ...]

    def __len__(self) -> int:
        return len(self.elements)


def _tree_to_list(tree: PreimageTree) -> list[RegularPreImage]:
    out = []
    for n in range(1, tree.depth + 1):
        lv = tree.levels[n]
        for i in range(lv.size):
            out.append(RegularPreImage(tree.interval(n, i), n, int(lv.target[i]),
                                       tree.word(n, i)))
    return out


def enumerate_preimages(fmap: MapModel, collection: Sequence[Interval], N: int,
                        zooming_only: bool = False,
                        contraction: ZoomingContraction | None = None,
                        max_preimages: int = MAX_PREIMAGES) -> list[RegularPreImage]:
    """Regular pre-images of order ``1..N`` of each collection member.

    With ``zooming_only`` only pull-backs inside zooming pre-balls are kept,
    which needs ``contraction``.
    """
    if N < 1:
        raise PreconditionError("cutoff order must be at least 1")
    if zooming_only and contraction is None:
        raise PreconditionError("zooming_only needs a contraction")
    tree = grow_tree(fmap, collection, N, contraction=contraction if zooming_only else None,
                     max_nodes=max_preimages)
    return _tree_to_list(tree)


def validate_chain(base: Interval, chain: Chain, tol: float = TOL_INV) -> list[str]:
    """Independent check of the four chain axioms; returns the failed ones."""
    els = chain.elements
    failures = []
    if not els:
        return ["empty"]
    orders = [p.order for p in els]
    if orders[0] <= 0 or any(b < a for a, b in zip(orders, orders[1:])):
        failures.append("orders")
    if not linked(base, els[0].interval, tol):
        failures.append("first_linked_with_base")
    if any(not linked(a.interval, b.interval, tol) for a, b in zip(els, els[1:])):
        failures.append("consecutive_linked")
    if len({p.key for p in els}) != len(els):
        failures.append("distinct")
    return failures


def _adjacency(preimages: Sequence[RegularPreImage], period, tol):
    lo = np.array([p.interval.lo for p in preimages])
    hi = np.array([p.interval.hi for p in preimages])
    i, j = linked_pairs(lo, hi, period, tol)
    orders = np.array([p.order for p in preimages])
    nbrs: list[list[int]] = [[] for _ in preimages]
    for a, b in zip(i.tolist(), j.tolist()):
        if orders[b] >= orders[a]:
            nbrs[a].append(b)
        if orders[a] >= orders[b]:
            nbrs[b].append(a)
    for lst in nbrs:
        lst.sort()
    return nbrs


def _starts(base: Interval, preimages: Sequence[RegularPreImage], tol) -> list[int]:
    return [k for k, p in enumerate(preimages) if p.order > 0 and linked(base, p.interval, tol)]


def enumerate_chains(base: Interval, preimages: Sequence[RegularPreImage], max_len: int,
                     max_chains: int = MAX_CHAINS, tol: float = TOL_INV) -> list[Chain]:
    """All chains of length ``<= max_len`` beginning in ``base`` (depth-first)."""
    if not preimages:
        return []
    nbrs = _adjacency(preimages, preimages[0].interval.period, tol)
    out: list[Chain] = []

    def extend(path: list[int]):
        out.append(Chain(tuple(preimages[k] for k in path)))
        if len(out) > max_chains:
            raise BlowUpError(f"chain count exceeded {max_chains}")
        if len(path) == max_len:
            return
        on_path = set(path)
        for nxt in nbrs[path[-1]]:
            if nxt not in on_path:
                path.append(nxt)
                extend(path)
                path.pop()

    for s in _starts(base, preimages, tol):
        extend([s])
    return out


def chain_members(base: Interval, preimages: Sequence[RegularPreImage],
                  tol: float = TOL_INV) -> list[int]:
    """Indices of pre-images that occur in some chain beginning in ``base``.

    Equivalent to the union over :func:`enumerate_chains` with unbounded
    length, computed by reachability instead of listing the chains.
    """
    if not preimages:
        return []
    nbrs = _adjacency(preimages, base.period, tol)
    seen = set(_starts(base, preimages, tol))
    queue = deque(sorted(seen))
    while queue:
        k = queue.popleft()
        for nxt in nbrs[k]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return sorted(seen)


@dataclass(frozen=True)
class NestedCollection:
    balls: tuple[tuple[float, float], ...]
    shrunken: tuple[Interval | None, ...]
    cutoff_order: int
    epsilon: float
    contraction: ZoomingContraction
    certificates: tuple[dict, ...]
    tail_bound: float
    period: float | None = None
    phase: tuple[float, float] = (0.0, 1.0)

    @property
    def members(self) -> list[tuple[int, Interval]]:
        return [(k, a) for k, a in enumerate(self.shrunken) if a is not None]


def _check_balls(fmap: MapModel, balls, contraction: ZoomingContraction, tol):
    for p, r in balls:
        if r <= 0:
            raise PreconditionError("ball radii must be positive")
        if not r < contraction.delta / 4:
            raise PreconditionError(
                f"radius {r} must be below delta/4 = {contraction.delta / 4}")
    for i, (pi, ri) in enumerate(balls):
        for j, (pj, rj) in enumerate(balls):
            if i != j:
                a = fmap.phase.ball(pi, ri)
                b = fmap.phase.ball(pj, rj / 2)
                if overlap_length(a, b) > tol:
                    raise PreconditionError(f"balls {i} and {j} violate the separation condition")


def nested_shrink(fmap: MapModel, balls: Sequence[tuple[float, float]], epsilon: float, N: int,
                  contraction: ZoomingContraction, max_preimages: int = MAX_PREIMAGES,
                  tol: float = TOL_INV) -> NestedCollection:
    """Shave each ball by the chains of zooming pre-images up to order ``N``.

    Each ball ``A_i`` loses the closure of every pre-image lying on a chain
    that begins in ``A_i``; the component of the rest containing ``p_i`` is
    ``A_i'``.  Certificates record whether ``B_{(1-eps) r_i}(p_i)`` survived
    and ``tail_bound`` bounds the total diameter of chain elements beyond the
    cutoff.
    """
    if not 0 < epsilon < 1:
        raise PreconditionError("epsilon must lie in (0, 1)")
    if N < 1:
        raise PreconditionError("cutoff order must be at least 1")
    balls = tuple((float(p), float(r)) for p, r in balls)
    _check_balls(fmap, balls, contraction, tol)
    period = fmap.phase.period
    base = (fmap.phase.lo, fmap.phase.hi)
    A = [fmap.phase.ball(p, r) for p, r in balls]
    pre = enumerate_preimages(fmap, A, N, zooming_only=True, contraction=contraction,
                              max_preimages=max_preimages)
    shrunken, certs = [], []
    for i, ((p, r), a) in enumerate(zip(balls, A)):
        members = chain_members(a, pre, tol)
        removed = IntervalUnion.from_intervals([pre[k].interval for k in members], base, period)
        rest = IntervalUnion.from_intervals([a], base, period).subtract(removed)
        comp = rest.component_containing(p)
        inner = fmap.phase.ball(p, (1 - epsilon) * r)
        half = fmap.phase.ball(p, r / 2)
        cert = {"index": i, "center": p, "radius": r, "chain_elements": len(members),
                "max_chain_order": max((pre[k].order for k in members), default=0)}
        if comp is None:
            cert.update(excluded=True, reason="centre removed by chains")
            shrunken.append(None)
        else:
            cert.update(excluded=False,
                        contains_inner_ball=is_subset(inner, comp, tol),
                        contains_half_ball=is_subset(half, comp, tol),
                        inside_ball=is_subset(comp, a, tol),
                        interval=comp.as_tuple())
            shrunken.append(comp)
        certs.append(cert)
    m0 = 2 * max(r for _, r in balls)
    return NestedCollection(balls=balls, shrunken=tuple(shrunken), cutoff_order=N,
                            epsilon=epsilon, contraction=contraction,
                            certificates=tuple(certs),
                            tail_bound=contraction.tail_sum(N, m0), period=period,
                            phase=base)


def verify_nested(fmap: MapModel, collection: NestedCollection, N: int | None = None,
                  max_preimages: int = MAX_PREIMAGES, tol: float = TOL_INV) -> dict:
    """Pairwise scan of the members and their zooming pre-images up to order ``N``.

    Reports linked pairs of distinct orders (should be none) and overlapping
    distinct pre-images of the same member and order (should be none).
    """
    N = collection.cutoff_order if N is None else N
    members = collection.members
    roots = [a for _, a in members]
    if not roots:
        return {"n_preimages": 0, "n_linked_distinct_orders": 0, "linked_distinct_orders": [],
                "n_same_order_overlaps": 0, "same_order_overlaps": [],
                "members_linked_with_preimages": 0, "passed": True}
    tree = grow_tree(fmap, roots, N, contraction=collection.contraction,
                     max_nodes=max_preimages)
    lo = np.concatenate([lv.lo for lv in tree.levels])
    hi = np.concatenate([lv.hi for lv in tree.levels])
    order = np.concatenate([np.full(lv.size, n) for n, lv in enumerate(tree.levels)])
    target = np.concatenate([lv.target for lv in tree.levels])
    i, j = linked_pairs(lo, hi, tree.period, tol)
    distinct = order[i] != order[j]
    li, lj = i[distinct], j[distinct]
    oi, oj, _ = overlapping_pairs(lo, hi, tree.period, tol)
    same = (order[oi] == order[oj]) & (target[oi] == target[oj])
    witnesses = [((float(lo[a]), float(hi[a]), int(order[a])),
                  (float(lo[b]), float(hi[b]), int(order[b]))) for a, b in zip(li[:10], lj[:10])]
    overlaps = [((float(lo[a]), float(hi[a]), int(order[a])),
                 (float(lo[b]), float(hi[b]), int(order[b])))
                for a, b in zip(oi[same][:10], oj[same][:10])]
    with_member = int(np.count_nonzero(distinct & ((order[i] == 0) | (order[j] == 0))))
    return {"n_preimages": int(lo.size - len(roots)),
            "n_linked_distinct_orders": int(li.size),
            "linked_distinct_orders": witnesses,
            "n_same_order_overlaps": int(np.count_nonzero(same)),
            "same_order_overlaps": overlaps,
            "members_linked_with_preimages": with_member,
            "passed": li.size == 0 and not np.any(same)}


@dataclass(frozen=True)
class Hole:
    components: tuple[int, ...]
    region: tuple[Interval, ...]
    sandwich_ok: bool | None = None
    inner: tuple[Interval, ...] = field(default=(), repr=False)
    outer: tuple[Interval, ...] = field(default=(), repr=False)

    @property
    def is_empty(self) -> bool:
        return not self.region

    @classmethod
    def from_intervals(cls, intervals: Sequence[Interval]) -> Hole:
        return cls(components=(), region=tuple(intervals))

    def union(self, base, period) -> IntervalUnion:
        return IntervalUnion.from_intervals(self.region, base, period)

    def meets(self, iv: Interval, tol: float = TOL_INV) -> bool:
        return any(overlap_length(iv, h) > tol for h in self.region)

    def contains_interval(self, iv: Interval, tol: float = TOL_INV) -> bool:
        return iv.length - sum(overlap_length(iv, h) for h in self.region) <= tol


def build_hole(collection: NestedCollection, chosen: Sequence[int],
               tol: float = TOL_INV) -> Hole:
    chosen = tuple(sorted(set(int(k) for k in chosen)))
    n = len(collection.shrunken)
    if any(k < 0 or k >= n for k in chosen):
        raise PreconditionError(f"hole indices must be in 0..{n - 1}")
    if any(collection.shrunken[k] is None for k in chosen):
        raise PreconditionError("cannot use an excluded ball as a hole component")
    region = tuple(collection.shrunken[k] for k in chosen)
    period = collection.period
    inner = tuple(Interval(p - r / 2, p + r / 2, period)
                  for p, r in (collection.balls[k] for k in chosen))
    outer = tuple(Interval(p - r, p + r, period) for p, r in collection.balls)
    base = collection.phase
    u_region = IntervalUnion.from_intervals(region, base, period)
    u_inner = IntervalUnion.from_intervals(inner, base, period)
    u_outer = IntervalUnion.from_intervals(outer, base, period)
    ok = (u_inner.subtract(u_region).measure <= tol
          and u_region.subtract(u_outer).measure <= tol)
    return Hole(components=chosen, region=region, sandwich_ok=ok, inner=inner, outer=outer)


def preimage_of_union(fmap: MapModel, S: IntervalUnion) -> IntervalUnion:
    """``f^{-1}(S)`` computed branch by branch."""
    los, his = [], []
    for br in fmap.branches:
        if fmap.phase.kind == "interval":
            piece = S.intersect(IntervalUnion([br.image.lo], [br.image.hi], S.base))
        else:
            piece = S
        if len(piece) == 0:
            continue
        a, b = br.inverse(piece.lo), br.inverse(piece.hi)
        los.append(np.minimum(a, b))
        his.append(np.maximum(a, b))
    if not los:
        return IntervalUnion.empty(S.base, S.period)
    return IntervalUnion(np.concatenate(los), np.concatenate(his), S.base, S.period)


@dataclass(frozen=True)
class SurvivorSet:
    n: int
    pieces: IntervalUnion
    mass: float

    @property
    def intervals(self) -> list[Interval]:
        return self.pieces.to_intervals()


def survivor_iterate(fmap: MapModel, hole: Hole, n: int, max_pieces: int = MAX_PREIMAGES,
                     series: bool = False):
    """Points whose first ``n + 1`` iterates avoid the closed hole.

    Returns a :class:`SurvivorSet` with mass normalised by the phase-space
    length; with ``series=True`` returns the list for ``0..n``.
    """
    if n < 0:
        raise PreconditionError("n must be nonnegative")
    base = (fmap.phase.lo, fmap.phase.hi)
    outside = hole.union(base, fmap.phase.period).complement()
    current = outside
    out = [SurvivorSet(0, current, current.measure / fmap.phase.length)]
    for k in range(1, n + 1):
        current = outside.intersect(preimage_of_union(fmap, current))
        if len(current) > max_pieces:
            raise BlowUpError(f"survivor set exceeded {max_pieces} pieces at step {k}")
        out.append(SurvivorSet(k, current, current.measure / fmap.phase.length))
    return out if series else out[-1]

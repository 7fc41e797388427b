"""First-return induced full Markov schemes on a base interval."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dynamics import MapModel
from .errors import PreconditionError
from .intervals import Interval, same_interval
from .nested import Hole
from .preimages import grow_tree, overlapping_pairs, subset_mask
from .settings import MAX_PREIMAGES, SAMPLES_PER_INTERVAL, TOL_INV
from .zooming import ZoomingContraction


@dataclass(frozen=True)
class SchemeElement:
    interval: Interval
    tau: int
    branch_word: tuple[int, ...]
    itinerary: tuple[Interval, ...] | None = field(default=None, repr=False)

    @property
    def center(self) -> float:
        return self.interval.mid


@dataclass(frozen=True)
class InducedScheme:
    fmap: MapModel
    base: Interval
    elements: tuple[SchemeElement, ...]
    cutoff_order: int
    contraction: ZoomingContraction | None = None
    hole: Hole | None = None
    unresolved_mass: float = 0.0
    conflicts: tuple = ()
    removed: tuple[int, ...] = ()
    mode: str = "zooming"

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def taus(self) -> np.ndarray:
        return np.array([e.tau for e in self.elements], dtype=int)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.interval.length for e in self.elements])

    def ranked(self) -> list[int]:
        """Element indices by decreasing length, then increasing tau and position."""
        return sorted(range(len(self.elements)),
                      key=lambda k: (-self.elements[k].interval.length, self.elements[k].tau,
                                     self.elements[k].interval.lo))

    def _lift(self, x: np.ndarray, ref: Interval) -> np.ndarray:
        p = self.fmap.phase.period
        if p is None:
            return x
        return x + np.round((ref.mid - x) / p) * p

    def inverse_branch(self, k: int, y) -> np.ndarray:
        """``F^{-1}`` restricted to element ``k``, applied to base points ``y``."""
        e = self.elements[k]
        x = np.asarray(y, dtype=float)
        for b in reversed(e.branch_word):
            x = self.fmap.branches[b].inverse(x)
        return self._lift(x, e.interval)

    def cylinder(self, word: Sequence[int]) -> Interval:
        """Interval of points whose ``F``-itinerary begins with ``word``."""
        lo, hi = self.base.lo, self.base.hi
        for k in reversed(word):
            a, b = self.inverse_branch(k, np.array([lo, hi]))
            lo, hi = float(min(a, b)), float(max(a, b))
        return Interval(lo, hi, self.fmap.phase.period)

    def orbit(self, k: int, x) -> list[np.ndarray]:
        """``f^j(x)`` for ``0 <= j < tau_k``, ``x`` inside element ``k``."""
        pts = [np.asarray(x, dtype=float)]
        for _ in range(self.elements[k].tau - 1):
            pts.append(np.asarray(self.fmap(pts[-1]), dtype=float))
        return pts


def _check_base(fmap: MapModel, base: Interval, contraction, tol):
    if base.period != fmap.phase.period:
        raise PreconditionError("base interval does not live on the map's phase space")
    if fmap.phase.kind == "interval" and (base.lo < fmap.phase.lo - tol
                                          or base.hi > fmap.phase.hi + tol):
        raise PreconditionError("base interval leaves the phase space")
    if contraction is not None and not base.length < contraction.delta / 2:
        raise PreconditionError(
            f"base diameter {base.length} must be below delta/2 = {contraction.delta / 2}")


def first_return_scheme(fmap: MapModel, base: Interval,
                        contraction: ZoomingContraction | None, N: int,
                        hole: Hole | None = None, max_preimages: int = MAX_PREIMAGES,
                        tol: float = TOL_INV) -> InducedScheme:
    """First return of (zooming) pre-images of ``base`` to ``base``.

    Each point of ``base`` is assigned the smallest order ``n <= N`` of a
    pre-image of ``base`` that contains it and lies inside ``base``; the
    maximal such pre-images form the partition.  With ``contraction=None``
    every regular pre-image is admitted and exploration stops at the first
    return, which is the classical first-return map; no size condition on
    ``base`` applies in that mode.
    """
    if N < 1:
        raise PreconditionError("cutoff order must be at least 1")
    _check_base(fmap, base, contraction, tol)
    period = fmap.phase.period

    def inside(lo, hi, target):
        return subset_mask(lo, hi, base, period, tol)

    stop = inside if contraction is None else None
    tree = grow_tree(fmap, [base], N, contraction=contraction, stop=stop,
                     max_nodes=max_preimages, tol=tol)
    cands = []
    for n in range(1, tree.depth + 1):
        lv = tree.levels[n]
        mask = lv.stopped if contraction is None else inside(lv.lo, lv.hi, None)
        for i in np.flatnonzero(mask):
            lo, hi = float(lv.lo[i]), float(lv.hi[i])
            if period is not None:
                shift = np.floor((lo - base.lo + tol) / period) * period
                lo, hi = lo - shift, hi - shift
            cands.append((n, lo, hi, int(i)))
    cands.sort()
    acc_lo: list[float] = []
    acc_hi: list[float] = []
    chosen, conflicts = [], []
    for n, lo, hi, i in cands:
        pos = bisect.bisect_right(acc_lo, lo)
        clash = covered = False
        for q in (pos - 1, pos):
            if 0 <= q < len(acc_lo):
                common = min(hi, acc_hi[q]) - max(lo, acc_lo[q])
                if common > tol:
                    if hi - lo - common <= tol:
                        covered = True
                    else:
                        clash = True
        # a candidate may also swallow several accepted neighbours
        q = pos + 1
        while q < len(acc_lo) and acc_lo[q] < hi - tol:
            clash = True
            q += 1
        if clash:
            conflicts.append((n, lo, hi))
            continue
        if covered:
            continue
        acc_lo.insert(pos, lo)
        acc_hi.insert(pos, hi)
        chosen.append((lo, n, hi, i))
    chosen.sort()
    elements = []
    for lo, n, hi, i in chosen:
        elements.append(SchemeElement(interval=Interval(lo, hi, period), tau=n,
                                      branch_word=tree.word(n, i),
                                      itinerary=tree.itinerary(n, i)))
    covered_mass = sum(e.interval.length for e in elements)
    return InducedScheme(fmap=fmap, base=base, elements=tuple(elements), cutoff_order=N,
                         contraction=contraction, hole=hole,
                         unresolved_mass=max(0.0, base.length - covered_mass),
                         conflicts=tuple(conflicts),
                         mode="zooming" if contraction is not None else "first_return")


def _push_word(fmap: MapModel, word: Sequence[int], x: np.ndarray) -> np.ndarray:
    """Forward composition along ``word`` without wrapping (lifted coordinates)."""
    x = np.asarray(x, dtype=float)
    for b in word:
        x = fmap.branches[b].forward(x)
    return x


def _matches(fmap: MapModel, lo: float, hi: float, target: Interval, tol: float) -> bool:
    a, b = min(lo, hi), max(lo, hi)
    return same_interval(Interval(a, b, fmap.phase.period), target, tol)


def verify_markov(scheme: InducedScheme, tol: float = TOL_INV,
                  n_samples: int = SAMPLES_PER_INTERVAL, top: int = 16) -> dict:
    """Markov-partition axioms in their full-branch form, with witnesses."""
    fmap, base = scheme.fmap, scheme.base
    els = scheme.elements
    lo = np.array([e.interval.lo for e in els])
    hi = np.array([e.interval.hi for e in els])
    i, j, _ = overlapping_pairs(lo, hi, fmap.phase.period, tol)
    disjoint = {"passed": i.size == 0,
                "witnesses": [(int(a), int(b)) for a, b in zip(i[:10], j[:10])]}
    bad_full, bad_mono = [], []
    for k, e in enumerate(els):
        ends = _push_word(fmap, e.branch_word, np.array([e.interval.lo, e.interval.hi]))
        if not _matches(fmap, float(ends[0]), float(ends[1]), base, max(tol, 1e-9)):
            bad_full.append(k)
        x = np.linspace(e.interval.lo, e.interval.hi, n_samples + 2)[1:-1]
        y = _push_word(fmap, e.branch_word, x)
        dy = np.diff(y)
        if not (np.all(dy > 0) or np.all(dy < 0)):
            bad_mono.append(k)
    inside = [k for k, e in enumerate(els)
              if not subset_mask(np.array([e.interval.lo]), np.array([e.interval.hi]), base,
                                 fmap.phase.period, tol)[0]]
    # generating: depth-2 cylinders strictly smaller than depth-1 ones
    ranked = scheme.ranked()[:top]
    d1 = max((els[k].interval.length for k in ranked), default=0.0)
    d2 = max((scheme.cylinder((a, b)).length for a in ranked for b in ranked), default=0.0)
    by_tau: dict[int, float] = {}
    for e in els:
        by_tau[e.tau] = max(by_tau.get(e.tau, 0.0), e.interval.length)
    times = sorted(by_tau)
    report = {
        "disjoint_interiors": disjoint,
        "full_branch": {"passed": not bad_full, "witnesses": bad_full[:10]},
        "homeomorphic": {"passed": not bad_mono, "witnesses": bad_mono[:10]},
        "markov_images": {"passed": not inside, "witnesses": inside[:10]},
        "generating": {"passed": d2 < d1 or not els, "depth1_max": d1, "depth2_max": d2,
                       "max_diameter_by_tau": {t: by_tau[t] for t in times}},
        "construction_conflicts": len(scheme.conflicts),
        "n_elements": len(els),
    }
    report["passed"] = all(v["passed"] for v in report.values() if isinstance(v, dict)) \
        and not scheme.conflicts and bool(els)
    return report


def verify_adapted(scheme: InducedScheme, hole: Hole | None = None,
                   tol: float = TOL_INV) -> dict:
    """Check ``f^k(P) ∩ H ≠ ∅ ⇒ f^k(P) ⊆ H`` along stored itineraries."""
    hole = scheme.hole if hole is None else hole
    if hole is None or hole.is_empty:
        return {"passed": True, "violations": [], "checked": 0}
    violations, checked = [], 0
    for k, e in enumerate(scheme.elements):
        if e.itinerary is None:
            raise PreconditionError(f"element {k} has no stored itinerary")
        for step, piece in enumerate(e.itinerary):
            checked += 1
            if hole.meets(piece, tol) and not hole.contains_interval(piece, tol):
                violations.append((k, step))
    return {"passed": not violations, "violations": violations[:50],
            "n_violations": len(violations), "checked": checked}


def _pieces(scheme: InducedScheme):
    lo, hi, owner, step = [], [], [], []
    for k, e in enumerate(scheme.elements):
        if e.itinerary is None:
            raise PreconditionError(f"element {k} has no stored itinerary")
        for s, piece in enumerate(e.itinerary):
            lo.append(piece.lo)
            hi.append(piece.hi)
            owner.append(k)
            step.append(s)
    return np.array(lo), np.array(hi), np.array(owner, dtype=int), np.array(step, dtype=int)


def condition_star_report(scheme: InducedScheme, tol: float = TOL_INV) -> dict:
    """Exhaustive check over overlapping itinerary pieces.

    Whenever ``f^k(P_i)`` and ``f^k'(P_j)`` overlap, the remaining times
    ``tau_i - k`` and ``tau_j - k'`` must agree, so that a common ``n`` makes
    both ``k + n`` and ``k' + n`` inducing times.
    """
    lo, hi, owner, step = _pieces(scheme)
    taus = scheme.taus
    i, j, _ = overlapping_pairs(lo, hi, scheme.fmap.phase.period, tol)
    rem_i = taus[owner[i]] - step[i]
    rem_j = taus[owner[j]] - step[j]
    bad = rem_i != rem_j
    witnesses = [((int(owner[a]), int(step[a])), (int(owner[b]), int(step[b])))
                 for a, b in zip(i[bad][:20], j[bad][:20])]
    return {"passed": not np.any(bad), "overlapping_pairs": int(i.size),
            "violations": int(np.count_nonzero(bad)), "witnesses": witnesses}


def strictly_nested_elements(scheme: InducedScheme, tol: float = TOL_INV) -> list[int]:
    """Elements ``P_j`` with some ``f^m(P_j)`` (``0 < m < tau_j``) strictly inside an element."""
    lo, hi, owner, step = _pieces(scheme)
    later = step > 0
    n_el = len(scheme.elements)
    e_lo = np.array([e.interval.lo for e in scheme.elements])
    e_hi = np.array([e.interval.hi for e in scheme.elements])
    all_lo = np.concatenate([e_lo, lo[later]])
    all_hi = np.concatenate([e_hi, hi[later]])
    src = owner[later]
    i, j, common = overlapping_pairs(all_lo, all_hi, scheme.fmap.phase.period, tol)
    # i < j, so an element-piece pair has i < n_el <= j
    mixed = (i < n_el) & (j >= n_el)
    i, j, common = i[mixed], j[mixed], common[mixed]
    length_piece = all_hi[j] - all_lo[j]
    length_elem = all_hi[i] - all_lo[i]
    inside = length_piece - common <= tol
    strict = inside & (length_elem - length_piece > tol)
    return sorted(set(int(k) for k in src[j[strict] - n_el]))


def prune_condition_star(scheme: InducedScheme, tol: float = TOL_INV) -> InducedScheme:
    """Drop elements with an iterate strictly inside another element.

    Removing an element from the alphabet also removes, in the symbolic
    model, every ``F``-preimage of it; those are cylinders below the element
    level, so the returned scheme simply no longer carries the symbol.
    """
    removed = strictly_nested_elements(scheme, tol)
    if not removed:
        return scheme
    keep = [e for k, e in enumerate(scheme.elements) if k not in set(removed)]
    if not keep:
        raise PreconditionError("Condition (*) pruning removed every element")
    lost = sum(scheme.elements[k].interval.length for k in removed)
    return replace(scheme, elements=tuple(keep), removed=tuple(removed),
                   unresolved_mass=scheme.unresolved_mass + lost)

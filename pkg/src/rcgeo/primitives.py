"""Query-efficient point-retrieval primitives over a range-counting oracle.

All routines touch the point set only through ``counter.count`` and bill
every query to the supplied ledger.
"""

from __future__ import annotations

import numpy as np

from .domain import DomainSpec, QuadCell, Rect, Shift
from .oracle import QueryLedger


def kth_lex(counter, k: int, ledger: QueryLedger, rect: Rect | None = None,
            phase: str = "kth_lex") -> np.ndarray:
    """Location of the k-th point (1-based) of the multiset inside ``rect``
    in lexicographic coordinate order, ties broken by multiplicity.

    Uses one binary search per axis: at most d*(log2(delta)+1)+1 queries.
    """
    domain = counter.domain
    if rect is None:
        rect = domain.full_rect()
    total = counter.count(rect, ledger, phase)
    if not 1 <= k <= total:
        raise ValueError(f"rank {k} out of range (rect holds {total})")
    cur = rect
    for axis in range(domain.d):
        lo, hi = cur.lo[axis], cur.hi[axis]
        while lo < hi:
            mid = (lo + hi) // 2
            if counter.count(cur.with_hi(axis, mid), ledger, phase) >= k:
                hi = mid
            else:
                lo = mid + 1
        if lo > cur.lo[axis]:
            k -= counter.count(cur.with_hi(axis, lo - 1), ledger, phase)
        cur = cur.pinned(axis, lo)
    return np.asarray(cur.lo, dtype=np.int64)


def kth_zorder(counter, cell: QuadCell, k: int, shift: Shift,
               ledger: QueryLedger, phase: str = "kth_zorder") -> np.ndarray:
    """Location of the k-th point of ``cell`` in z-order (the recursive
    child order of the shifted quadtree).  At most 2^d queries per level."""
    domain = counter.domain
    rect = cell.rect(domain, shift)
    if cell.level >= domain.root_level and not rect.empty:
        cur_count = counter.n
    else:
        cur_count = counter.count(rect, ledger, phase)
    if not 1 <= k <= cur_count:
        raise ValueError(f"rank {k} out of range (cell holds {cur_count})")
    cur = cell
    while cur.level > 0:
        remaining = cur_count
        kids = cur.children()
        for j, child in enumerate(kids):
            r = child.rect(domain, shift)
            if r.empty:
                continue
            if j == len(kids) - 1:
                c = remaining  # derivable: siblings already accounted for
            else:
                c = counter.count(r, ledger, phase)
            if k <= c:
                cur, cur_count = child, c
                break
            k -= c
            remaining -= c
        else:  # pragma: no cover - guarded by count invariants
            raise RuntimeError("rank descent failed")
    # a level-0 shifted cell covers a single location
    return np.asarray(cur.rect(domain, shift).lo, dtype=np.int64)


def sample_uniform(counter, rng: np.random.Generator, ledger: QueryLedger,
                   phase: str = "sample") -> np.ndarray:
    """Uniform draw from the multiset: uniform rank + kth_lex."""
    k = int(rng.integers(1, counter.n + 1))
    return kth_lex(counter, k, ledger, phase=phase)


def bounding_square(counter, ledger: QueryLedger,
                    phase: str = "bounding") -> tuple[np.ndarray, int]:
    """Smallest lower corner and side of an axis-aligned square covering all
    points, by binary search per side: O(d log delta) queries."""
    domain = counter.domain
    n = counter.n
    if n == 0:
        raise ValueError("empty point set has no bounding square")
    full = domain.full_rect()
    lo = np.zeros(domain.d, dtype=np.int64)
    hi = np.zeros(domain.d, dtype=np.int64)
    for axis in range(domain.d):
        a, b = 0, domain.delta - 1
        while a < b:  # min coordinate: smallest X with count(slab <= X) >= 1
            mid = (a + b) // 2
            if counter.count(full.with_hi(axis, mid), ledger, phase) >= 1:
                b = mid
            else:
                a = mid + 1
        lo[axis] = a
        a, b = 0, domain.delta - 1
        while a < b:  # max coordinate: smallest X with count(slab <= X) == n
            mid = (a + b) // 2
            if counter.count(full.with_hi(axis, mid), ledger, phase) >= n:
                b = mid
            else:
                a = mid + 1
        hi[axis] = a
    side = int((hi - lo).max()) + 1
    return lo, side

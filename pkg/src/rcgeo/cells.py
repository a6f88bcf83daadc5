"""Sampling and counting non-empty grid cells with sublinear queries.

A grid of side r (power of two, unshifted) is imposed on the domain.  If at
most ceil(sqrt(n)) cells are occupied we enumerate them outright; otherwise
ceil(sqrt(n) * log2(n)) uniform point samples are reweighted by the inverse
occupancy of their cells, which makes the chosen cell approximately uniform
over occupied cells and the total weight an unbiased occupied-cell count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import DomainSpec, QuadCell, Shift, cell_of, ilog2
from .oracle import Estimate, QueryLedger
from .primitives import kth_lex


def enumerate_nonempty(counter, level: int, cap: int, ledger: QueryLedger,
                       phase: str = "enumerate"):
    """Occupied cells of the side-2^level unshifted grid, or None once more
    than ``cap`` have been confirmed (early abort)."""
    domain = counter.domain
    shift = Shift.zero(domain.d)
    root = QuadCell(domain.log_delta, (0,) * domain.d)
    if level > root.level:
        raise ValueError("grid side exceeds domain")
    out = []
    stack = [(root, counter.n)]
    while stack:
        cell, cnt = stack.pop()
        if cnt == 0:
            continue
        if cell.level == level:
            out.append(cell)
            if len(out) > cap:
                return None
            continue
        remaining = cnt
        kids = cell.children()
        for j, child in enumerate(kids):
            rect = child.rect(domain, shift)
            if rect.empty:
                continue
            if j == len(kids) - 1:
                c = remaining
            else:
                c = counter.count(rect, ledger, phase)
                remaining -= c
            if c:
                stack.append((child, c))
    out.sort(key=lambda c: c.index)
    return out


@dataclass
class CellSample:
    cell: QuadCell
    m_estimate: float      # exact count (enumerated) or the reweighted total
    sample_size: int       # 0 when enumerated
    branch: str            # "enumerated" | "weighted"


class RankTable:
    """Lazy rank -> (location, cell occupancy) memo for one counter+grid.

    The oracle is deterministic, so each rank is paid for once; repeated
    draws of the same rank reuse the stored answer.
    """

    def __init__(self, counter, level: int):
        self.counter = counter
        self.level = level
        self._shift = Shift.zero(counter.domain.d)
        self._points: dict[int, np.ndarray] = {}
        self._occ: dict[tuple, int] = {}
        self._occ_by_rank = np.full(counter.n + 1, np.nan)
        self._enum: dict[int, list | None] = {}

    def enumerate_cached(self, cap: int, ledger: QueryLedger, phase: str):
        """Memoized enumerate_nonempty for this counter+grid (determinism of
        the oracle makes the outcome a pure function of the cap)."""
        if cap not in self._enum:
            self._enum[cap] = enumerate_nonempty(self.counter, self.level,
                                                 cap, ledger, phase=phase)
        return self._enum[cap]

    def lookup(self, rank: int, ledger: QueryLedger, phase: str):
        p = self._points.get(rank)
        if p is None:
            p = kth_lex(self.counter, rank, ledger, phase=phase)
            self._points[rank] = p
        cell = cell_of(p, self.level, self._shift)
        occ = self._occ.get(cell.index)
        if occ is None:
            occ = self.counter.count(cell.rect(self.counter.domain, self._shift),
                                     ledger, phase)
            self._occ[cell.index] = occ
        self._occ_by_rank[rank] = occ
        return cell, occ

    def occupancies(self, ranks: np.ndarray, ledger: QueryLedger,
                    phase: str) -> np.ndarray:
        """Cell occupancy per rank, resolving unseen ranks once and serving
        the rest from the memo in one vectorized read."""
        known = self._occ_by_rank[ranks]
        for rank in np.unique(ranks[np.isnan(known)]):
            self.lookup(int(rank), ledger, phase)
        return self._occ_by_rank[ranks]


def cell_sampling(counter, r: int, rng: np.random.Generator,
                  ledger: QueryLedger, rank_table: RankTable | None = None,
                  phase: str = "cell_sampling",
                  enumerate_cap: int | None = None) -> CellSample:
    """Draw an occupied cell of the side-r grid, approximately uniformly.

    ``enumerate_cap`` overrides the default ceil(sqrt(n)) threshold below
    which occupied cells are enumerated outright (0 forces the weighted
    branch, e.g. when a caller already knows the grid is crowded).
    """
    level = ilog2(r)
    n = counter.n
    if n == 0:
        raise ValueError("empty point set")
    cap = math.ceil(math.sqrt(n)) if enumerate_cap is None else enumerate_cap
    if rank_table is None or rank_table.level != level:
        rank_table = RankTable(counter, level)
    cells = rank_table.enumerate_cached(cap, ledger, phase) \
        if cap > 0 else None
    if cells is not None:
        pick = cells[int(rng.integers(0, len(cells)))]
        return CellSample(pick, float(len(cells)), 0, "enumerated")
    x = math.ceil(math.sqrt(n) * math.log2(n))
    ranks = rng.integers(1, n + 1, size=x)
    occ = rank_table.occupancies(ranks, ledger, phase)
    weights = n / (x * occ)
    m_prime = float(weights.sum())
    j = int(rng.choice(x, p=weights / m_prime))
    pick, _ = rank_table.lookup(int(ranks[j]), ledger, phase)
    return CellSample(pick, m_prime, x, "weighted")


def estimate_nonempty_count(counter, r: int, rng: np.random.Generator,
                            ledger: QueryLedger,
                            rank_table: RankTable | None = None,
                            phase: str = "cell_count") -> Estimate:
    """Occupied-cell count of the side-r grid: exact when few, else the
    reweighted-sample total."""
    snap = ledger.snapshot()
    s = cell_sampling(counter, r, rng, ledger, rank_table=rank_table, phase=phase)
    return Estimate(s.m_estimate, ledger.since(snap),
                    params={"r": r, "branch": s.branch, "sample_size": s.sample_size})

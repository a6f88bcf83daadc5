"""Euclidean MST weight: exact baselines and a sublinear-query estimator.

The estimator never sees points.  It rescales the bounding square into an
effective grid of side O(n/eps), builds well-separated pair structure
implicitly, and for a geometric ladder of length scales estimates the
number of connected components of the bounded-length spanner subgraph by
sampling occupied cells and running truncated BFS whose adjacency test is
the witness rule: two same-size cells are linked iff some pair of their
not-too-small subcells is well separated within distance r, or meets the
near-touching condition at the minimum subcell size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cells import RankTable, cell_sampling, enumerate_nonempty
from .domain import (DomainSpec, QuadCell, Rect, Shift, cell_distance,
                     cell_radius, ilog2, next_pow2)
from .oracle import CachedCounter, Estimate, QueryLedger, ScaledCounter
from .primitives import bounding_square, kth_lex

EXACT_MST_DENSE_CAP = 4096


@dataclass
class MstConfig:
    seed_const: float = 8.0        # seeds per level = ceil(seed_const / eps^2)
    level_reps: int | None = None  # per-level amplification (median); default 1
    bfs_cap: int | None = None     # truncation threshold; default ceil(sqrt(n))
    witness_const: float = 10.0    # subcell floor: 2^i* <= eps*r/witness_const


# ---------------------------------------------------------------------------
# exact baselines


def exact_mst(coords: np.ndarray) -> float:
    """Exact Euclidean MST weight.

    Dense Kruskal up to EXACT_MST_DENSE_CAP points; for larger 2D inputs the
    MST is computed on the Delaunay graph (which always contains it).
    """
    pts = np.asarray(coords, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    n = len(pts)
    if n <= 1:
        return 0.0
    if pts.shape[1] == 1:
        xs = np.sort(pts[:, 0])
        return float(np.diff(xs).sum())
    if n > EXACT_MST_DENSE_CAP:
        if pts.shape[1] != 2:
            raise ValueError(f"exact_mst capped at {EXACT_MST_DENSE_CAP} points "
                             "for d != 2")
        from scipy.spatial import Delaunay
        tri = Delaunay(pts)
        edges = set()
        for simplex in tri.simplices:
            for a in range(3):
                u, v = int(simplex[a]), int(simplex[(a + 1) % 3])
                edges.add((u, v) if u < v else (v, u))
        us, vs = np.array(sorted(edges)).T
        ws = np.linalg.norm(pts[us] - pts[vs], axis=1)
    else:
        us, vs = np.triu_indices(n, k=1)
        ws = np.linalg.norm(pts[us] - pts[vs], axis=1)
    order = np.argsort(ws, kind="stable")
    return _kernels.kruskal_total(n, us[order], vs[order], ws[order])


# ---------------------------------------------------------------------------
# explicit (point-level) WSPD and spanner, used as derivation baselines


def _wspd_recurse(cells, pts_in, eps, out, domain):
    """Split-tree recursion on explicit point index sets."""
    stack = [cells]
    while stack:
        ca, cb = stack.pop()
        ia, ib = pts_in(ca), pts_in(cb)
        if len(ia) == 0 or len(ib) == 0:
            continue
        if ca == cb:
            # diagonal: recurse on unordered child combinations so every
            # unordered point pair is covered exactly once
            if ca.level == 0:
                continue
            kids = ca.children()
            for i in range(len(kids)):
                for j in range(i, len(kids)):
                    stack.append((kids[i], kids[j]))
            continue
        # a leaf holds one location, so its effective radius is zero and
        # distinct leaf pairs are always separated (no descent below level 0)
        ra = 0.0 if ca.level == 0 else cell_radius(ca)
        rb = 0.0 if cb.level == 0 else cell_radius(cb)
        if rb < ra:
            ca, cb = cb, ca
            ra, rb = rb, ra
        d = cell_distance(ca, cb)
        if rb <= eps * d:
            out.append((ca, cb))
            continue
        for child in cb.children():
            stack.append((ca, child))


def wspd_explicit(coords: np.ndarray, domain: DomainSpec, eps: float):
    """All well-separated cell pairs for an explicit point set (unshifted
    quadtree over the domain)."""
    pts = np.asarray(coords, dtype=np.int64).reshape(len(coords), -1)
    occupied_cache: dict = {}

    def pts_in(cell: QuadCell):
        key = (cell.level, cell.index)
        hit = occupied_cache.get(key)
        if hit is None:
            idx = (pts >> cell.level)
            mask = np.all(idx == np.asarray(cell.index), axis=1)
            hit = np.flatnonzero(mask)
            occupied_cache[key] = hit
        return hit

    root = QuadCell(domain.log_delta, (0,) * domain.d)
    out: list = []
    _wspd_recurse((root, root), pts_in, eps, out, domain)
    return out


def build_spanner(coords: np.ndarray, domain: DomainSpec, eps: float):
    """Spanner edges (u, v, length) from the explicit decomposition: one
    edge per pair, between lexicographically-least representatives, with
    length the center distance of the pair."""
    pts = np.asarray(coords, dtype=np.int64).reshape(len(coords), -1)
    pairs = wspd_explicit(pts, domain, eps)
    order = np.lexsort(tuple(pts[:, k] for k in range(pts.shape[1] - 1, -1, -1)))
    rep_cache: dict = {}

    def rep(cell: QuadCell) -> int:
        key = (cell.level, cell.index)
        hit = rep_cache.get(key)
        if hit is None:
            idx = (pts[order] >> cell.level)
            mask = np.all(idx == np.asarray(cell.index), axis=1)
            hit = int(order[np.flatnonzero(mask)[0]])
            rep_cache[key] = hit
        return hit

    edges = []
    for ca, cb in pairs:
        edges.append((rep(ca), rep(cb), cell_distance(ca, cb)))
    return edges


def spanner_mst_exact(coords: np.ndarray, domain: DomainSpec, eps: float) -> float:
    """MST weight of the explicit spanner (edge weights = pair distances)."""
    pts = np.asarray(coords, dtype=np.float64).reshape(len(coords), -1)
    n = len(pts)
    if n <= 1:
        return 0.0
    edges = build_spanner(coords, domain, eps)
    us = np.array([e[0] for e in edges])
    vs = np.array([e[1] for e in edges])
    ws = np.array([e[2] for e in edges])
    order = np.argsort(ws, kind="stable")
    return _kernels.kruskal_total(n, us[order], vs[order], ws[order])


def components_exact(coords: np.ndarray, domain: DomainSpec, eps: float,
                     i: int, edges=None) -> int:
    """Components of the spanner restricted to edges of length <= (1+eps)^i,
    vertices = the points."""
    n = len(coords)
    if edges is None:
        edges = build_spanner(coords, domain, eps)
    thresh = (1 + eps) ** i
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    comps = n
    # co-located points are at distance 0 and always share a component
    seen_loc: dict = {}
    for j, p in enumerate(np.asarray(coords, dtype=np.int64).reshape(n, -1)):
        key = tuple(int(v) for v in p)
        first = seen_loc.setdefault(key, j)
        if first != j:
            ru, rv = find(first), find(j)
            if ru != rv:
                parent[ru] = rv
                comps -= 1
    for u, v, w in edges:
        if w <= thresh:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                comps -= 1
    return comps


# ---------------------------------------------------------------------------
# oracle-side structure


@dataclass
class SpannerConfig:
    """Output of domain preprocessing: the effective rescaled window."""

    eps: float
    lo: tuple
    width: int
    delta_eff: int
    counter: ScaledCounter
    queries_used: int


def preprocess_domain(counter, eps: float, ledger: QueryLedger) -> SpannerConfig:
    """Bounding square + rescale so the effective grid has side
    delta' = smallest power of two >= 2n/eps (never finer than needed:
    if the square already fits, coordinates are only translated)."""
    snap = ledger.snapshot()
    lo, side = bounding_square(counter, ledger, phase="preprocess")
    delta_eff = next_pow2(max(2, math.ceil(2 * counter.n / eps)))
    width = max(side, delta_eff)  # width == delta_eff means identity scaling
    scaled = ScaledCounter(counter, lo, width, delta_eff)
    return SpannerConfig(eps, tuple(int(a) for a in lo), width, delta_eff,
                         scaled, ledger.since(snap))


def wspd(counter, ca: QuadCell, cb: QuadCell, eps: float,
         ledger: QueryLedger, phase: str = "wspd"):
    """Well-separated pair decomposition of (ca, cb) contents using only
    emptiness queries (desk scale: recursion over all non-empty cells)."""
    domain = counter.domain
    shift = Shift.zero(domain.d)
    out = []
    stack = [(ca, cb)]
    nonempty_cache: dict = {}

    def occupied(c: QuadCell) -> bool:
        key = (c.level, c.index)
        hit = nonempty_cache.get(key)
        if hit is None:
            r = c.rect(domain, shift)
            hit = (not r.empty) and counter.count(r, ledger, phase) > 0
            nonempty_cache[key] = hit
        return hit

    while stack:
        a, b = stack.pop()
        if not occupied(a) or not occupied(b):
            continue
        if a == b:
            if a.level == 0:
                continue
            kids = a.children()
            for i in range(len(kids)):
                for j in range(i, len(kids)):
                    stack.append((kids[i], kids[j]))
            continue
        ra = 0.0 if a.level == 0 else cell_radius(a)
        rb = 0.0 if b.level == 0 else cell_radius(b)
        if rb < ra:
            a, b = b, a
            ra, rb = rb, ra
        d = cell_distance(a, b)
        if rb <= eps * d:
            out.append((a, b))
            continue
        for child in b.children():
            stack.append((a, child))
    return out


def representative(counter, cell: QuadCell, ledger: QueryLedger,
                   phase: str = "rep") -> np.ndarray:
    """Lexicographically first point inside the cell."""
    rect = cell.rect(counter.domain, Shift.zero(counter.domain.d))
    return kth_lex(counter, 1, ledger, rect=rect, phase=phase)


def _cells_linked(counter, ca: QuadCell, cb: QuadCell, max_len: float,
                  eps: float, min_side_log: int, ledger: QueryLedger,
                  phase: str, occupied=None) -> bool:
    """Witness rule: does the spanner contain an edge of length <= max_len
    between the contents of ca and cb?

    Runs the pair recursion but never descends below side 2^min_side_log.
    A well-separated pair witnesses iff its distance is <= max_len; a pair
    stuck at the floor witnesses iff d + r(a) + r(b) <= max_len.
    """
    domain = counter.domain
    if occupied is None:
        shift = Shift.zero(domain.d)

        def occupied(c: QuadCell) -> bool:
            r = c.rect(domain, shift)
            return (not r.empty) and counter.count(r, ledger, phase) > 0

    stack = [(ca, cb)]
    while stack:
        a, b = stack.pop()
        if not occupied(a) or not occupied(b):
            continue
        ra, rb = cell_radius(a), cell_radius(b)
        if rb < ra:
            a, b = b, a
            ra, rb = rb, ra
        d = cell_distance(a, b)
        if a != b and rb <= eps * d:
            if d <= max_len:
                return True
            continue
        if b.level <= min_side_log:
            # cannot refine further: near-touching test
            if a != b and d + ra + rb <= max_len:
                return True
            continue
        for child in b.children():
            stack.append((a, child))
    return False


def _witness_floor(eps: float, r: float, witness_const: float) -> int:
    """Largest i with 2^i <= eps*r/witness_const (clamped at 0)."""
    v = eps * r / witness_const
    if v < 1:
        return 0
    return int(math.floor(math.log2(v)))


def neighbor_cells(counter, cell: QuadCell, r: float, eps: float,
                   ledger: QueryLedger, cfg: MstConfig | None = None,
                   phase: str = "neighbors"):
    """Same-level cells within center distance 3r whose contents are joined
    to ``cell``'s by a spanner edge of length <= r."""
    cfg = cfg or MstConfig()
    return _neighbor_search(counter, cell, r, eps, ledger, cfg, phase)


def _neighbor_search(counter, cell: QuadCell, max_len: float, eps: float,
                     ledger: QueryLedger, cfg: MstConfig, phase: str,
                     occupied=None, candidates=None):
    domain = counter.domain
    shift = Shift.zero(domain.d)
    side = cell.side
    floor_log = min(_witness_floor(eps, max_len, cfg.witness_const), cell.level)
    if candidates is None:
        reach = int(math.floor((max_len + 2 * cell_radius(cell)) / side)) + 1
        lo = tuple(max(0, k - reach) for k in cell.index)
        hi = tuple(min((domain.delta >> cell.level) - 1, k + reach)
                   for k in cell.index)
        candidates = []
        for idx in np.ndindex(*[h - l + 1 for l, h in zip(lo, hi)]):
            cand = QuadCell(cell.level, tuple(l + o for l, o in zip(lo, idx)))
            if cand.index == cell.index:
                continue
            if cell_distance(cell, cand) > 3 * max_len:
                continue
            rect = cand.rect(domain, shift)
            if rect.empty or counter.count(rect, ledger, phase) == 0:
                continue
            candidates.append(cand)
    out = []
    for cand in candidates:
        if _cells_linked(counter, cell, cand, max_len, eps, floor_log,
                         ledger, phase, occupied=occupied):
            out.append(cand)
    return out


# ---------------------------------------------------------------------------
# component counting and the weight estimate


@dataclass
class ComponentEstimate:
    value: float
    n_hat: float
    seeds: int
    branch: str
    queries_used: int


class _MstRun:
    """Shared per-run state: memoized cell counts, adjacency and components
    (the oracle is deterministic, so memo hits are free)."""

    def __init__(self, counter, eps: float, ledger: QueryLedger,
                 cfg: MstConfig):
        self.counter = CachedCounter(counter)
        self.eps = eps
        self.ledger = ledger
        self.cfg = cfg
        self.domain = counter.domain
        self.shift = Shift.zero(self.domain.d)
        self.t = cfg.bfs_cap or max(1, math.ceil(math.sqrt(counter.n)))
        self._adj: dict = {}
        self._comp: dict = {}
        self._rank_tables: dict = {}
        self._occ_levels: dict = {}

    def occupied_level(self, level: int):
        """(index array, index set) of the occupied cells at one grid level,
        enumerated once per run (repeat counts hit the query cache)."""
        hit = self._occ_levels.get(level)
        if hit is None:
            cells = enumerate_nonempty(self.counter, level, self.counter.n,
                                       self.ledger, phase="mst_cells")
            arr = np.array([c.index for c in cells], dtype=np.int64)
            arr = arr.reshape(len(cells), self.domain.d)
            hit = (arr, frozenset(c.index for c in cells))
            self._occ_levels[level] = hit
        return hit

    def occupied(self, cell: QuadCell) -> bool:
        return cell.index in self.occupied_level(cell.level)[1]

    def neighbors(self, i: int, max_len: float, cell: QuadCell):
        key = (i, cell.level, cell.index)
        hit = self._adj.get(key)
        if hit is None:
            arr, _ = self.occupied_level(cell.level)
            side = cell.side
            delta_idx = arr - np.asarray(cell.index, dtype=np.int64)
            reach = int(math.floor(
                (max_len + 2 * cell_radius(cell)) / side)) + 1
            dist = np.sqrt(np.sum((delta_idx * float(side)) ** 2, axis=1))
            mask = (np.all(np.abs(delta_idx) <= reach, axis=1)
                    & (dist <= 3 * max_len) & (dist > 0))
            cands = [QuadCell(cell.level, tuple(int(v) for v in row))
                     for row in arr[mask]]
            hit = _neighbor_search(self.counter, cell, max_len, self.eps,
                                   self.ledger, self.cfg, "mst_neighbors",
                                   occupied=self.occupied, candidates=cands)
            self._adj[key] = hit
        return hit

    def component(self, i: int, max_len: float, start: QuadCell):
        """(vertex count, edge count, overflowed) of start's component in
        the contracted level-i graph, truncated at self.t vertices."""
        key = (i, start.level, start.index)
        hit = self._comp.get(key)
        if hit is not None:
            return hit
        seen = {start.index: start}
        frontier = [start]
        overflow = False
        degsum = 0
        while frontier and not overflow:
            nxt = []
            for cell in frontier:
                nbrs = self.neighbors(i, max_len, cell)
                degsum += len(nbrs)
                for nb in nbrs:
                    if nb.index not in seen:
                        if len(seen) >= self.t:
                            overflow = True
                            break
                        seen[nb.index] = nb
                        nxt.append(nb)
                if overflow:
                    break
            frontier = nxt
        result = (len(seen), degsum // 2, overflow)
        if not overflow:
            for idx in seen:
                self._comp[(i, start.level, idx)] = result
        else:
            self._comp[key] = result
        return result

    def beta(self, i: int, max_len: float, cell: QuadCell) -> float:
        """Per-seed component contribution: 1 for isolated vertices,
        deg/(2m) within a fully explored component, 0 on truncation."""
        deg = len(self.neighbors(i, max_len, cell))
        if deg == 0:
            return 1.0
        size, m, overflow = self.component(i, max_len, cell)
        if overflow:
            return 0.0
        return deg / (2.0 * m)


def _contraction_level(max_len: float) -> int:
    """Grid level g with 2^g in (max_len/8, max_len/4], clamped at 0."""
    if max_len <= 4:
        return 0
    g = int(math.floor(math.log2(max_len / 4)))
    while (1 << g) > max_len / 4:
        g -= 1
    while (1 << (g + 1)) <= max_len / 4:
        g += 1
    return max(g, 0)


def estimate_components(counter, i: int, eps: float,
                        rng: np.random.Generator, ledger: QueryLedger,
                        cfg: MstConfig | None = None,
                        run: "_MstRun | None" = None) -> ComponentEstimate:
    """Estimate of the number of components of the spanner subgraph with
    edges of length <= (1+eps)^i, via contracted-cell seed sampling."""
    cfg = cfg or MstConfig()
    if run is None:
        run = _MstRun(counter, eps, ledger, cfg)
    snap = ledger.snapshot()
    max_len = (1 + eps) ** i
    g = _contraction_level(max_len)
    r_seeds = max(1, math.ceil(cfg.seed_const / eps ** 2))
    level = g
    cap = max(1, math.ceil(math.sqrt(run.counter.n)))
    cells = enumerate_nonempty(run.counter, level, max(cap, 0), ledger,
                               phase="mst_cells")
    if cells is not None:
        m = len(cells)
        if m <= r_seeds:
            # small vertex set: evaluate every vertex exactly
            total = sum(run.beta(i, max_len, c) for c in cells)
            return ComponentEstimate(float(total), float(m), m, "exact",
                                     ledger.since(snap))
        n_hat = float(m)
        seeds = [cells[int(j)] for j in rng.integers(0, m, size=r_seeds)]
        branch = "enumerated"
    else:
        table = run._rank_tables.get(level)
        if table is None:
            table = RankTable(run.counter, level)
            run._rank_tables[level] = table
        seeds = []
        n_hat = None
        for _ in range(r_seeds):
            s = cell_sampling(run.counter, 1 << level, rng, ledger,
                              rank_table=table, phase="mst_cells",
                              enumerate_cap=0)
            seeds.append(s.cell)
            if n_hat is None:
                n_hat = s.m_estimate
        branch = "weighted"
    total = sum(run.beta(i, max_len, c) for c in seeds)
    value = (n_hat / r_seeds) * total
    return ComponentEstimate(float(value), float(n_hat), r_seeds, branch,
                             ledger.since(snap))


def estimate_mst(counter, eps: float, rng: np.random.Generator,
                 ledger: QueryLedger, cfg: MstConfig | None = None) -> Estimate:
    """Estimate of the Euclidean MST weight from range counts only."""
    cfg = cfg or MstConfig()
    snap = ledger.snapshot()
    n = counter.n
    if n <= 1:
        return Estimate(0.0, 0, params={"eps": eps})
    pre = preprocess_domain(counter, eps, ledger)
    scaled = pre.counter
    delta_eff = pre.delta_eff
    scale = pre.width / delta_eff  # effective unit in base coordinates
    w = math.ceil(math.log(2 * delta_eff) / math.log(1 + eps))
    run = _MstRun(scaled, eps, ledger, cfg)
    reps = cfg.level_reps or 1

    c_hat = np.empty(w, dtype=np.float64)
    for i in range(w):
        vals = []
        for _ in range(reps):
            est = estimate_components(scaled, i, eps, rng, ledger, cfg, run)
            vals.append(est.value)
            if est.branch == "exact":
                break
        c_hat[i] = float(np.median(vals))

    total = n - (1 + eps) ** w  # c_hat at the top scale is 1 by convention
    for i in range(w):
        total += eps * (1 + eps) ** i * c_hat[i]
    value = max(total, 0.0) * scale
    return Estimate(value, ledger.since(snap),
                    params={"eps": eps, "delta_eff": delta_eff,
                            "width": pre.width, "levels": w, "reps": reps,
                            "scale": scale})

"""Earth mover's distance: exact baselines and sublinear-query estimators.

The bichromatic instance (reds R, blues B, |R| = |B| = n) is accessed only
through per-color range counts.  In one dimension the optimal matching is
the rank matching; the estimator splits it into long edges, recovered from
segment counts of snapped points, and short edges, estimated by sampling
rank-mated pairs and counting them per dyadic length class.  In two and
three dimensions the surrogate is the greedy bottom-up matching on a
randomly shifted quadtree, whose cost is within an O(log delta) factor of
the true distance in expectation.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .domain import (DomainSpec, QuadCell, Rect, Shift, cell_of, root_cell,
                     tree_distance, z_order_key)
from .oracle import CachedCounter, ColoredOracle, Estimate, QueryLedger
from .primitives import kth_lex

EXACT_EMD_CAP = 4096


@dataclass
class EmdConfig:
    """Knobs for the estimators; repetition counts default to ceil(log2 delta)."""

    reps: int | None = None          # per-class minimum repetitions
    shifts: int | None = None        # independent grid shifts (2D/3D)
    sample_factor: float = 1.0       # scales the s*log^2(delta) sample size
    budget_const: int = 8            # C in the query ceilings


def exact_emd_1d(red: np.ndarray, blue: np.ndarray) -> int:
    """Optimal 1D transport cost: sorted rank matching."""
    r = np.sort(np.asarray(red, dtype=np.int64).reshape(-1))
    b = np.sort(np.asarray(blue, dtype=np.int64).reshape(-1))
    if r.shape != b.shape:
        raise ValueError("need equal multiset sizes")
    return int(np.abs(r - b).sum())


def exact_emd(red: np.ndarray, blue: np.ndarray) -> float:
    """Optimal Euclidean bipartite matching cost (Hungarian method)."""
    r = np.asarray(red, dtype=np.float64)
    b = np.asarray(blue, dtype=np.float64)
    if r.ndim == 1:
        r = r.reshape(-1, 1)
        b = b.reshape(-1, 1)
    if len(r) != len(b):
        raise ValueError("need equal multiset sizes")
    if len(r) > EXACT_EMD_CAP:
        raise ValueError(f"exact_emd capped at {EXACT_EMD_CAP} points")
    dm = cdist(r, b)
    ri, ci = linear_sum_assignment(dm)
    return float(dm[ri, ci].sum())


def _level_keys(coords: np.ndarray, shift: Shift, level: int,
                domain: DomainSpec) -> np.ndarray:
    """Pack per-axis cell indices at a level into one integer key."""
    v = np.asarray(shift.v, dtype=np.int64)
    idx = (coords.astype(np.int64) + v) >> level
    width = domain.root_level + 1
    key = np.zeros(len(coords), dtype=np.int64)
    for k in range(coords.shape[1]):
        key = (key << width) | idx[:, k]
    return key


def greedy_matching_cost_exact(red: np.ndarray, blue: np.ndarray,
                               shift: Shift, domain: DomainSpec) -> int:
    """Tree-metric cost of the greedy quadtree matching, via the surplus
    identity: sum over levels i and cells c of |n_R(c) - n_B(c)| * 2^(i+1).
    """
    red = np.asarray(red, dtype=np.int64).reshape(len(red), -1)
    blue = np.asarray(blue, dtype=np.int64).reshape(len(blue), -1)
    total = 0
    for level in range(domain.root_level):
        rk = _level_keys(red, shift, level, domain)
        bk = _level_keys(blue, shift, level, domain)
        keys = np.concatenate([rk, bk])
        signs = np.concatenate([np.ones(len(rk), dtype=np.int64),
                                -np.ones(len(bk), dtype=np.int64)])
        order = np.argsort(keys, kind="stable")
        keys, signs = keys[order], signs[order]
        cuts = np.flatnonzero(np.diff(keys)) + 1
        sums = np.add.reduceat(signs, np.concatenate([[0], cuts]))
        total += int(np.abs(sums).sum()) << (level + 1)
    return total


def simulate_greedy_matching(red: np.ndarray, blue: np.ndarray, shift: Shift,
                             domain: DomainSpec):
    """Explicit bottom-up greedy matching on the shifted quadtree.

    Within every cell, unmatched reds and blues (each listed in z-order,
    coinciding copies in input order) are paired rank-for-rank.  Returns a
    list of (red_index, blue_index, resolved_level) triples.
    """
    red = np.asarray(red, dtype=np.int64).reshape(len(red), -1)
    blue = np.asarray(blue, dtype=np.int64).reshape(len(blue), -1)
    if len(red) != len(blue):
        raise ValueError("need equal multiset sizes")

    def leaf_key(p):
        return z_order_key(p, shift, domain)

    # per current-level cell: (reds, blues) as index lists in z-order
    cur: dict[tuple, list] = {}
    order_r = sorted(range(len(red)), key=lambda i: (leaf_key(red[i]), i))
    order_b = sorted(range(len(blue)), key=lambda i: (leaf_key(blue[i]), i))
    for i in order_r:
        c = cell_of(red[i], 0, shift)
        cur.setdefault(c.index, ([], []))[0].append(i)
    for i in order_b:
        c = cell_of(blue[i], 0, shift)
        cur.setdefault(c.index, ([], []))[1].append(i)

    edges = []
    level = 0
    while True:
        for idx, (rs, bs) in cur.items():
            m = min(len(rs), len(bs))
            for a, b in zip(rs[:m], bs[:m]):
                edges.append((a, b, level))
            del rs[:m]
            del bs[:m]
        leftovers = {k: v for k, v in cur.items() if v[0] or v[1]}
        if not leftovers:
            break
        level += 1
        nxt: dict[tuple, list] = {}
        # concatenate children in z-order: sort child indices by the
        # lexicographic (axis-0 major) order of their low bits
        for idx in sorted(leftovers):
            rs, bs = leftovers[idx]
            p = tuple(k >> 1 for k in idx)
            slot = nxt.setdefault(p, ([], []))
            slot[0].extend(rs)
            slot[1].extend(bs)
        cur = nxt
    return edges


def greedy_matching_cost_from_edges(edges) -> int:
    total = 0
    for _, _, level in edges:
        if level > 0:
            total += (1 << (level + 2)) - 4
    return total


def _lex_rank_before(counter, p, ledger: QueryLedger, phase: str) -> int:
    """Number of points strictly lexicographically before location p."""
    domain = counter.domain
    rect = domain.full_rect()
    total = 0
    for axis in range(domain.d):
        if p[axis] > 0:
            total += counter.count(rect.with_hi(axis, int(p[axis]) - 1),
                                   ledger, phase)
        rect = rect.pinned(axis, int(p[axis]))
    return total


def find_mate(co: ColoredOracle, p, copy_rank: int, shift: Shift,
              ledger: QueryLedger, color: str = "red",
              phase: str = "find_mate"):
    """Mate of one red (or blue) point under the greedy quadtree matching,
    located with O(log^2 delta) range counts.

    ``copy_rank`` disambiguates coinciding copies (1-based, in the same
    z-order/input convention as :func:`simulate_greedy_matching`).  Returns
    (mate_location, mate_copy_rank, resolved_level).
    """
    domain = co.domain
    own, other = (co.red, co.blue) if color == "red" else (co.blue, co.red)
    cell = cell_of(p, 0, shift)
    rect = cell.rect(domain, shift)
    n_own = own.count(rect, ledger, phase)
    n_oth = other.count(rect, ledger, phase)
    if not 1 <= copy_rank <= n_own:
        raise ValueError("copy_rank out of range")
    if copy_rank <= n_oth:
        # matched in place with the copy of the same local rank
        return np.asarray(p, dtype=np.int64), copy_rank, 0
    rank = copy_rank - n_oth  # rank among this cell's unmatched own-color
    while cell.level < domain.root_level:
        parent = cell.parent()
        own_before = 0
        oth_total = 0
        passed_self = False
        for child in parent.children():
            if child.index == cell.index:
                surplus_oth = max(n_oth - n_own, 0)
                passed_self = True
            else:
                r = child.rect(domain, shift)
                if r.empty:
                    surplus_oth = 0
                else:
                    a = own.count(r, ledger, phase)
                    b = other.count(r, ledger, phase)
                    surplus_oth = max(b - a, 0)
                    if not passed_self:
                        own_before += max(a - b, 0)
            oth_total += surplus_oth
        rank_in_parent = own_before + rank
        if rank_in_parent <= oth_total:
            # matched here: extract the rank_in_parent-th unmatched
            # other-color point of the parent, by z-order descent
            loc, mate_copy = _extract_unmatched(co, parent, rank_in_parent,
                                                shift, ledger,
                                                "blue" if color == "red" else "red",
                                                phase)
            return loc, mate_copy, parent.level
        rank = rank_in_parent - oth_total
        cell = parent
        pr = parent.rect(domain, shift)
        n_own = own.count(pr, ledger, phase)
        n_oth = other.count(pr, ledger, phase)
    raise RuntimeError("unmatched at root; totals differ")  # pragma: no cover


def _extract_unmatched(co: ColoredOracle, cell: QuadCell, rank: int,
                       shift: Shift, ledger: QueryLedger, color: str,
                       phase: str):
    """Location (and copy rank) of the rank-th unmatched point of the given
    color inside ``cell``, in z-order."""
    domain = co.domain
    own, other = (co.red, co.blue) if color == "red" else (co.blue, co.red)
    # On entry, rank indexes the concatenation (in child z-order) of the
    # children's unmatched lists of ``cell``.  One level down, a cell's own
    # unmatched list is the *suffix* of that concatenation (its prefix got
    # matched inside the cell), so descending adds the matched-count offset.
    chosen_surplus = None
    while cell.level > 0:
        kids = []
        total = 0
        for child in cell.children():
            r = child.rect(domain, shift)
            if r.empty:
                surplus = 0
            else:
                a = own.count(r, ledger, phase)
                if a == 0:
                    surplus = 0
                else:
                    b = other.count(r, ledger, phase)
                    surplus = max(a - b, 0)
            kids.append((child, surplus))
            total += surplus
        if chosen_surplus is not None:
            rank += total - chosen_surplus  # skip the matched prefix
        for child, surplus in kids:
            if rank <= surplus:
                cell = child
                chosen_surplus = surplus
                break
            rank -= surplus
        else:  # pragma: no cover
            raise RuntimeError("unmatched-rank descent failed")
    rect = cell.rect(domain, shift)
    n_oth = other.count(rect, ledger, phase)
    return np.asarray(rect.lo, dtype=np.int64), n_oth + rank


def _segment_bounds(delta: int, nseg: int) -> np.ndarray:
    return np.array([(j * delta) // nseg for j in range(nseg + 1)], dtype=np.int64)


def _rank_match_counts(centers2: np.ndarray, red_cnt: np.ndarray,
                       blue_cnt: np.ndarray):
    """Rank matching between two multisets given by (position, multiplicity);
    positions in doubled units.  Yields (length2, multiplicity) edges."""
    i = j = 0
    ri = int(red_cnt[0]) if len(red_cnt) else 0
    bj = int(blue_cnt[0]) if len(blue_cnt) else 0
    edges = []
    while i < len(red_cnt) and j < len(blue_cnt):
        if ri == 0:
            i += 1
            if i < len(red_cnt):
                ri = int(red_cnt[i])
            continue
        if bj == 0:
            j += 1
            if j < len(blue_cnt):
                bj = int(blue_cnt[j])
            continue
        t = min(ri, bj)
        edges.append((abs(int(centers2[i]) - int(centers2[j])), t))
        ri -= t
        bj -= t
    return edges


def estimate_emd_1d(co: ColoredOracle, s: int, rng: np.random.Generator,
                    ledger: QueryLedger, cfg: EmdConfig | None = None) -> Estimate:
    """1D transport-cost estimate from O~(s) range counts.

    Guarantee shape: OPT/4 - n*delta/s^2 <= L <= 4*OPT + n*delta/s^2 up to
    the configured constant, with success probability amplified by taking
    per-class minima over repetitions.
    """
    cfg = cfg or EmdConfig()
    domain = co.domain
    if domain.d != 1:
        raise ValueError("estimate_emd_1d needs a 1D domain")
    delta = domain.delta
    n = co.n
    log_d = domain.log_delta
    red = CachedCounter(co.red)
    blue = CachedCounter(co.blue)
    snap = ledger.snapshot()

    # long part: per-segment counts, points snapped to segment centers
    nseg = math.ceil(2 * s)
    bounds = _segment_bounds(delta, nseg)
    red_cnt = np.empty(nseg, dtype=np.int64)
    blue_cnt = np.empty(nseg, dtype=np.int64)
    centers2 = np.empty(nseg, dtype=np.int64)
    for j in range(nseg):
        r = Rect((int(bounds[j]),), (int(bounds[j + 1]) - 1,))
        red_cnt[j] = red.count(r, ledger, "emd1d_long")
        blue_cnt[j] = blue.count(r, ledger, "emd1d_long")
        centers2[j] = int(bounds[j]) + int(bounds[j + 1]) - 1
    L_long2 = 0
    for len2, mult in _rank_match_counts(centers2, red_cnt, blue_cnt):
        if len2 * s >= delta:  # snapped length >= delta/(2s)
            L_long2 += len2 * mult
    L_long = L_long2 / 2.0

    # short part: sampled rank-mated pairs, counted per dyadic length class
    t = math.ceil(math.log2(delta / s)) if delta > s else 1
    x = max(1, math.ceil(cfg.sample_factor * s * log_d * log_d))
    reps = cfg.reps if cfg.reps is not None else max(1, log_d)
    pair_memo: dict[int, int] = {}
    class_min = np.full(t + 1, np.inf)

    for _ in range(reps):
        ranks = rng.integers(1, n + 1, size=x)
        counts = np.zeros(t + 1, dtype=np.int64)
        for k in ranks:
            k = int(k)
            length = pair_memo.get(k)
            if length is None:
                rk = kth_lex(red, k, ledger, phase="emd1d_short")
                bk = kth_lex(blue, k, ledger, phase="emd1d_short")
                length = abs(int(rk[0]) - int(bk[0]))
                pair_memo[k] = length
            if length >= 1 and length * s < delta:  # short edge
                cls = length.bit_length()  # i with 2^(i-1) <= length < 2^i
                if cls <= t:
                    counts[cls] += 1
        class_min = np.minimum(class_min, counts * (n / x))

    L_short = float(sum((1 << i) * class_min[i] for i in range(1, t + 1)))
    L = L_short + L_long
    return Estimate(L, ledger.since(snap),
                    params={"s": s, "x": x, "reps": reps, "t": t, "nseg": nseg,
                            "L_long": L_long, "L_short": L_short})


class _MateTable:
    """Lazy rank -> (tree length, resolved level) memo for one shift."""

    def __init__(self, co: ColoredOracle, red_cached, blue_cached, shift: Shift):
        self.co = ColoredOracle.__new__(ColoredOracle)
        self.co.red = red_cached
        self.co.blue = blue_cached
        self.shift = shift
        self._memo: dict[int, tuple] = {}

    def lookup(self, rank: int, ledger: QueryLedger, phase: str):
        hit = self._memo.get(rank)
        if hit is None:
            p = kth_lex(self.co.red, rank, ledger, phase=phase)
            copy = rank - _lex_rank_before(self.co.red, p, ledger, phase)
            mate, _, level = find_mate(self.co, p, copy, self.shift, ledger,
                                       color="red", phase=phase)
            length = tree_distance(p, mate, self.shift)
            hit = (length, level)
            self._memo[rank] = hit
        return hit


def _long_part_profile(red, blue, domain: DomainSpec, shift: Shift, i0: int,
                       ledger: QueryLedger, phase: str = "emd_long"):
    """min(n_R, n_B) per non-empty shifted cell for levels >= i0 - 1, by
    descent from the root, and the implied tree-length of edges the greedy
    matching resolves at levels >= i0."""
    minmap: dict[int, dict[tuple, int]] = defaultdict(dict)
    root = root_cell(domain)
    nr = red.n
    nb = blue.n
    stack = [(root, nr, nb)]
    while stack:
        cell, a, b = stack.pop()
        if a == 0 and b == 0:
            continue
        minmap[cell.level][cell.index] = min(a, b)
        if cell.level <= i0 - 1:
            continue
        for child in cell.children():
            r = child.rect(domain, shift)
            if r.empty:
                continue
            ca = red.count(r, ledger, phase) if a else 0
            cb = blue.count(r, ledger, phase) if b else 0
            if ca or cb:
                stack.append((child, ca, cb))
    L_long = 0
    for level in range(i0, domain.root_level + 1):
        for idx, m in minmap[level].items():
            kids = 0
            for child in QuadCell(level, idx).children():
                kids += minmap[level - 1].get(child.index, 0)
            resolved = m - kids
            if resolved:
                L_long += resolved * ((1 << (level + 2)) - 4)
    return L_long, minmap


def estimate_emd(co: ColoredOracle, s: int, rng: np.random.Generator,
                 ledger: QueryLedger, cfg: EmdConfig | None = None) -> Estimate:
    """Transport-cost estimate in 2 or 3 dimensions.

    For each random shift, edges the greedy quadtree matching resolves at
    coarse levels are summed exactly from per-cell counts; fine-level edges
    are estimated by sampling reds, locating their greedy mates, and
    counting per tree-length class.  The final value is the minimum over
    shifts of the per-shift totals.
    """
    cfg = cfg or EmdConfig()
    domain = co.domain
    if domain.d < 2:
        raise ValueError("use estimate_emd_1d for 1D instances")
    delta = domain.delta
    n = co.n
    log_d = domain.log_delta
    d = domain.d
    snap = ledger.snapshot()

    # coarse/fine cutoff: cells of side >= delta / s^(1/d)
    i0 = max(1, math.ceil(math.log2(delta / (s ** (1.0 / d)))))
    i0 = min(i0, domain.root_level)
    x = max(1, math.ceil(cfg.sample_factor * s * log_d * log_d))
    reps = cfg.reps if cfg.reps is not None else max(1, log_d)
    shifts = cfg.shifts if cfg.shifts is not None else max(1, log_d)

    red = CachedCounter(co.red)
    blue = CachedCounter(co.blue)
    best = math.inf
    best_parts = None
    for _ in range(shifts):
        shift = Shift.draw(domain, rng)
        L_long, _ = _long_part_profile(red, blue, domain, shift, i0, ledger)
        table = _MateTable(co, red, blue, shift)
        # classes: resolved level j in [1, i0-1] <-> tree length 2^(j+2)-4,
        # billed at the class upper bound 2^(j+2)
        class_min = np.full(i0, np.inf)
        for _ in range(reps):
            ranks = rng.integers(1, n + 1, size=x)
            counts = np.zeros(i0, dtype=np.int64)
            for k in ranks:
                length, level = table.lookup(int(k), ledger, "emd_short")
                if 1 <= level <= i0 - 1:
                    counts[level] += 1
            class_min = np.minimum(class_min, counts * (n / x))
        L_short = float(sum((1 << (j + 2)) * class_min[j]
                            for j in range(1, i0)))
        if L_long + L_short < best:
            best = L_long + L_short
            best_parts = {"L_long": L_long, "L_short": L_short}
    params = {"s": s, "x": x, "reps": reps, "shifts": shifts, "i0": i0}
    params.update(best_parts or {})
    return Estimate(best, ledger.since(snap), params=params)

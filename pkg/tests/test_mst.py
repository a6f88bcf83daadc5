"""Spanner, component counting and the weight estimate."""

import math

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial.distance import pdist, squareform

from rcgeo import (DomainSpec, ExactCounter, MstConfig, QueryLedger,
                   components_exact, estimate_components, estimate_mst,
                   exact_mst, spanner_mst_exact, wspd, wspd_explicit)
from rcgeo.domain import QuadCell, cell_distance, cell_radius, root_cell
from rcgeo.mst import _MstRun, _contraction_level, preprocess_domain
from tests.conftest import random_coords


def scipy_mst(coords):
    # deduplicate first: csr drops explicit zeros, so zero-length edges
    # between coinciding points would otherwise be lost
    uniq = np.unique(np.asarray(coords, dtype=float), axis=0)
    d = squareform(pdist(uniq))
    return float(minimum_spanning_tree(csr_matrix(d)).sum())


@pytest.mark.parametrize("d,n", [(1, 40), (2, 60), (2, 3), (3, 25)])
def test_exact_mst_matches_scipy(rng, d, n):
    coords = random_coords(rng, n, 64, d)
    assert exact_mst(coords) == pytest.approx(scipy_mst(coords))


def test_exact_mst_trivial():
    assert exact_mst(np.array([[3, 4]])) == 0.0
    assert exact_mst(np.array([[0, 0], [0, 0], [1, 0], [1, 1], [0, 1]])) == \
        pytest.approx(3.0)


def _members(pts, c):
    lo = np.asarray(c.index) * c.side
    return frozenset(
        i for i, p in enumerate(pts)
        if np.all(p >= lo) and np.all(p < lo + c.side))


@pytest.mark.parametrize("eps", [0.25, 0.5])
def test_wspd_covers_each_pair_exactly_once(rng, eps):
    dom = DomainSpec(2, 64)
    pts = random_coords(rng, 35, 64, 2)
    pairs = wspd_explicit(pts, dom, eps)
    mem = {(c.level, c.index): _members(pts, c)
           for pair in pairs for c in pair}
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if np.array_equal(pts[i], pts[j]):
                continue
            cover = sum(
                (i in mem[(a.level, a.index)] and j in mem[(b.level, b.index)])
                or (j in mem[(a.level, a.index)] and i in mem[(b.level, b.index)])
                for a, b in pairs)
            assert cover == 1


@pytest.mark.parametrize("eps", [0.25, 0.5])
def test_wspd_pairs_are_separated(rng, eps):
    dom = DomainSpec(2, 64)
    pts = random_coords(rng, 35, 64, 2)
    for a, b in wspd_explicit(pts, dom, eps):
        # leaves hold a single location, so their effective radius is zero
        ra = 0.0 if a.level == 0 else cell_radius(a)
        rb = 0.0 if b.level == 0 else cell_radius(b)
        assert max(ra, rb) <= eps * cell_distance(a, b) + 1e-12


def test_wspd_oracle_equals_explicit(rng):
    dom = DomainSpec(2, 64)
    pts = random_coords(rng, 35, 64, 2)
    cnt = ExactCounter(pts, dom)
    led = QueryLedger()
    root = root_cell(dom)
    oracle_pairs = wspd(cnt, root, root, 0.5, led)
    key = lambda prs: sorted(
        (min((a.level, a.index), (b.level, b.index)),
         max((a.level, a.index), (b.level, b.index))) for a, b in prs)
    assert key(oracle_pairs) == key(wspd_explicit(pts, dom, 0.5))
    assert led.total > 0


@pytest.mark.parametrize("eps", [0.25, 0.5])
def test_spanner_sandwich(rng, eps):
    dom = DomainSpec(2, 128)
    for _ in range(5):
        pts = random_coords(rng, 50, 128, 2)
        exact = exact_mst(pts)
        spanner = spanner_mst_exact(pts, dom, eps)
        assert exact - 1e-9 <= spanner <= (1 + eps) * exact + 1e-9


def threshold_components(coords, thresh):
    d = squareform(pdist(np.asarray(coords, dtype=float)))
    adj = csr_matrix(d <= thresh)
    return connected_components(adj, directed=False)[0]


def test_components_exact_monotone_and_bounded(rng):
    dom = DomainSpec(2, 128)
    pts = random_coords(rng, 45, 128, 2)
    eps = 0.5
    prev = None
    for i in range(0, 18):
        c = components_exact(pts, dom, eps, i)
        assert 1 <= c <= len(pts)
        if prev is not None:
            assert c <= prev
        prev = c
        # sandwiched between true threshold-graph counts at stretched radii
        thresh = (1 + eps) ** i
        assert threshold_components(pts, thresh * (1 + eps)) <= c
        assert c <= threshold_components(pts, thresh / (1 + eps))
    assert prev == 1


def test_components_exact_merges_duplicates():
    dom = DomainSpec(2, 64)
    pts = np.array([[5, 5], [5, 5], [40, 40]])
    assert components_exact(pts, dom, 0.5, 0) == 2


def test_telescoping_identity_with_true_components(rng):
    """n - (1+eps)^w + eps * sum_i (1+eps)^i c_i sandwiches the true MST
    weight within a (1+eps) factor when c_i are exact."""
    eps = 0.5
    n = 48
    delta = 512                        # >= 2n/eps, so no rescale needed
    pts = random_coords(rng, n, delta, 2)
    w = math.ceil(math.log(2 * delta) / math.log(1 + eps))
    total = n - (1 + eps) ** w
    for i in range(w):
        total += eps * (1 + eps) ** i * threshold_components(pts, (1 + eps) ** i)
    exact = exact_mst(pts)
    assert exact - 1e-9 <= total <= (1 + eps) * exact + 1e-9


def test_contraction_level_band():
    for ml in (3.9, 4.0, 7.3, 64.0, 1000.0):
        g = _contraction_level(ml)
        assert g >= 0
        if ml > 4:
            assert ml / 8 < (1 << g) <= ml / 4


def test_preprocess_scales_to_effective_grid(rng):
    dom = DomainSpec(2, 1024)
    pts = random_coords(rng, 30, 900, 2) + 60
    cnt = ExactCounter(pts, dom)
    led = QueryLedger()
    pre = preprocess_domain(cnt, 0.5, led)
    eff = pre.counter.to_effective(pts)
    assert eff.min() >= 0 and eff.max() < pre.delta_eff
    assert pre.counter.n == 30


def test_estimate_components_exact_branch_counts_clusters(rng):
    dom = DomainSpec(2, 256)
    centers = np.array([[40, 40], [200, 60], [100, 200]])
    pts = np.concatenate([c + rng.integers(-3, 4, size=(50, 2))
                          for c in centers])
    cnt = ExactCounter(pts, dom)
    eps = 0.5
    # max_len far above cluster spread but below cluster separation
    i = int(math.log(40) / math.log(1 + eps))
    est = estimate_components(cnt, i, eps, rng, QueryLedger())
    assert est.branch == "exact"
    assert est.value == pytest.approx(3)


def test_neighbors_symmetric(rng):
    dom = DomainSpec(2, 128)
    pts = random_coords(rng, 50, 128, 2)
    cnt = ExactCounter(pts, dom)
    run = _MstRun(cnt, 0.25, QueryLedger(), MstConfig())
    max_len = 20.0
    g = _contraction_level(max_len)
    arr, _ = run.occupied_level(g)
    cells = [QuadCell(g, tuple(int(v) for v in row)) for row in arr]
    adj = {c.index: {n.index for n in run.neighbors(0, max_len, c)}
           for c in cells}
    for a, nbrs in adj.items():
        for b in nbrs:
            assert a in adj[b]


def test_estimate_mst_two_points():
    dom = DomainSpec(2, 1024)
    pts = np.array([[10, 10], [500, 300]])
    cnt = ExactCounter(pts, dom)
    eps = 0.1
    est = estimate_mst(cnt, eps, np.random.default_rng(0), QueryLedger())
    d = float(np.linalg.norm(pts[1] - pts[0]))
    assert (1 - 2 * eps) * d <= est.value <= (1 + 2 * eps) * d


def test_estimate_mst_trivial_sizes():
    dom = DomainSpec(2, 64)
    for pts in (np.empty((0, 2), dtype=np.int64), np.array([[5, 9]])):
        cnt = ExactCounter(pts, dom)
        est = estimate_mst(cnt, 0.5, np.random.default_rng(0), QueryLedger())
        assert est.value == 0.0


def test_estimate_mst_random_instance_band(rng):
    dom = DomainSpec(2, 256)
    pts = random_coords(rng, 256, 256, 2)
    cnt = ExactCounter(pts, dom)
    eps = 0.25
    est = estimate_mst(cnt, eps, rng, QueryLedger())
    opt = exact_mst(pts)
    assert (1 - 3 * eps) * opt <= est.value <= (1 + 3 * eps) * opt

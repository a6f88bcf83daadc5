"""Transport-cost machinery against brute-force oracles."""

import itertools

import numpy as np
import pytest

from rcgeo import (ColoredOracle, DomainSpec, EmdConfig, QueryLedger, Shift,
                   estimate_emd, estimate_emd_1d, exact_emd, exact_emd_1d,
                   find_mate, greedy_matching_cost_exact,
                   simulate_greedy_matching)
from rcgeo.domain import tree_distance
from rcgeo.emd import greedy_matching_cost_from_edges
from tests.conftest import random_colored


def brute_emd(red, blue):
    """Minimum over all perfect matchings (tiny inputs only)."""
    red = np.asarray(red, dtype=float).reshape(len(red), -1)
    blue = np.asarray(blue, dtype=float).reshape(len(blue), -1)
    best = np.inf
    for perm in itertools.permutations(range(len(blue))):
        cost = sum(np.linalg.norm(red[i] - blue[j])
                   for i, j in enumerate(perm))
        best = min(best, cost)
    return best


def test_exact_emd_1d_matches_brute(rng):
    for _ in range(20):
        r = rng.integers(0, 50, size=6)
        b = rng.integers(0, 50, size=6)
        assert exact_emd_1d(r, b) == pytest.approx(brute_emd(r, b))


def test_exact_emd_matches_brute_2d(rng):
    for _ in range(10):
        r = rng.integers(0, 40, size=(6, 2))
        b = rng.integers(0, 40, size=(6, 2))
        assert exact_emd(r, b) == pytest.approx(brute_emd(r, b))


def test_exact_emd_identical_multisets_zero(rng):
    pts = rng.integers(0, 64, size=(30, 2))
    assert exact_emd(pts, pts[::-1]) == pytest.approx(0.0)
    xs = rng.integers(0, 64, size=20)
    assert exact_emd_1d(xs, xs.copy()) == 0


def test_greedy_formula_equals_simulation(rng):
    dom = DomainSpec(2, 64)
    for _ in range(10):
        ps = random_colored(rng, 40, 64, 2)
        shift = Shift.draw(dom, rng)
        edges = simulate_greedy_matching(ps.reds, ps.blues, shift, dom)
        assert greedy_matching_cost_from_edges(edges) == \
            greedy_matching_cost_exact(ps.reds, ps.blues, shift, dom)
        # edge costs are consistent with the tree metric
        for (i, j, lvl) in edges:
            cost = 0 if lvl == 0 else (1 << (lvl + 2)) - 4
            assert tree_distance(ps.reds[i], ps.blues[j], shift) <= cost or \
                lvl == 0


def test_greedy_cost_upper_bounds_exact_emd(rng):
    dom = DomainSpec(2, 64)
    for _ in range(10):
        ps = random_colored(rng, 8, 64, 2)
        shift = Shift.draw(dom, rng)
        greedy = greedy_matching_cost_exact(ps.reds, ps.blues, shift, dom)
        assert greedy >= exact_emd(ps.reds, ps.blues) - 1e-9


def _mate_map_from_simulation(edges, reds, blues):
    out = {}
    for i, j, _lvl in edges:
        out.setdefault(tuple(reds[i]), []).append(tuple(int(x)
                                                       for x in blues[j]))
    for v in out.values():
        v.sort()
    return out


def test_find_mate_agrees_with_simulation(rng):
    dom = DomainSpec(2, 32)
    for _ in range(4):
        ps = random_colored(rng, 25, 32, 2)
        co = ColoredOracle.from_pointset(ps)
        for _ in range(4):
            shift = Shift.draw(dom, rng)
            edges = simulate_greedy_matching(ps.reds, ps.blues, shift, dom)
            sim = _mate_map_from_simulation(edges, ps.reds, ps.blues)
            got = {}
            reds_sorted = ps.reds[np.lexsort((ps.reds[:, 1], ps.reds[:, 0]))]
            loc_rank = {}
            for p in map(tuple, reds_sorted):
                loc_rank[p] = loc_rank.get(p, 0) + 1
                led = QueryLedger()
                mate, _copy, _lvl = find_mate(co, p, loc_rank[p], shift, led)
                got.setdefault(p, []).append(tuple(int(x) for x in mate))
            for v in got.values():
                v.sort()
            assert got == sim


def test_find_mate_is_involution(rng):
    """Red p's mate's mate (queried from the blue side) returns p."""
    dom = DomainSpec(2, 32)
    ps = random_colored(rng, 15, 32, 2)
    co = ColoredOracle.from_pointset(ps)
    rev = ColoredOracle(co.blue, co.red)
    shift = Shift.draw(dom, rng)
    reds_sorted = ps.reds[np.lexsort((ps.reds[:, 1], ps.reds[:, 0]))]
    loc_rank = {}
    for p in map(tuple, reds_sorted):
        loc_rank[p] = loc_rank.get(p, 0) + 1
        led = QueryLedger()
        mate, copy_rank, _ = find_mate(co, p, loc_rank[p], shift, led)
        back, back_rank, _ = find_mate(rev, mate, copy_rank, shift, led)
        assert tuple(int(x) for x in back) == p
        assert back_rank == loc_rank[p]


def test_estimate_emd_1d_identical_sets_zero(rng):
    dom = DomainSpec(1, 4096)
    xs = rng.integers(0, 4096, size=(256, 1))
    ps_red = xs
    co = ColoredOracle(
        __import__("rcgeo").ExactCounter(ps_red, dom),
        __import__("rcgeo").ExactCounter(ps_red.copy(), dom))
    est = estimate_emd_1d(co, 16, rng, QueryLedger())
    assert est.value == pytest.approx(0.0)


def test_estimate_emd_1d_within_band(rng):
    dom = DomainSpec(1, 4096)
    n, s = 256, 16
    ps = random_colored(rng, n, 4096, 1)
    co = ColoredOracle.from_pointset(ps)
    led = QueryLedger()
    est = estimate_emd_1d(co, s, rng, led)
    opt = exact_emd_1d(ps.reds[:, 0], ps.blues[:, 0])
    band = 8 * n * 4096 / s ** 2
    assert opt / 4 - band <= est.value <= 4 * opt + band
    assert led.total <= 8 * s * np.log2(4096) ** 3


def test_estimate_emd_2d_within_band(rng):
    dom = DomainSpec(2, 256)
    n, s = 128, 16
    ps = random_colored(rng, n, 256, 2)
    co = ColoredOracle.from_pointset(ps)
    est = estimate_emd(co, s, rng, QueryLedger(),
                       EmdConfig(reps=2, shifts=3))
    opt = exact_emd(ps.reds, ps.blues)
    band = 8 * n * 256 / s ** 1.5
    assert opt / 4 - band <= est.value
    assert est.value <= 4 * np.log2(256) * opt + band


def test_estimate_emd_rejects_bad_dimension(rng):
    ps = random_colored(rng, 8, 64, 1)
    co = ColoredOracle.from_pointset(ps)
    with pytest.raises(ValueError):
        estimate_emd(co, 4, rng, QueryLedger())

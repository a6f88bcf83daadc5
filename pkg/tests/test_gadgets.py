"""Instance families against their declared exact properties."""

import numpy as np
import pytest

from rcgeo import (BLUE, RED, exact_emd_1d, exact_mst, gen_cellsampling_lb,
                   gen_emd_lb, gen_mst_lb)


def test_emd1d_near_cost_exactly_n():
    for n, s in [(1024, 8), (4096, 16), (4096, 64)]:
        gi = gen_emd_lb(1, n, s)
        assert len(gi.points.reds) == len(gi.points.blues) == n
        assert exact_emd_1d(gi.points.reds[:, 0], gi.points.blues[:, 0]) == n


def test_emd1d_far_cost_dominates():
    n, s = 4096, 16
    gi = gen_emd_lb(1, n, s, witness=5)
    assert len(gi.points.reds) == len(gi.points.blues) == n
    cost = exact_emd_1d(gi.points.reds[:, 0], gi.points.blues[:, 0])
    delta = gi.params["delta"]
    assert cost >= n * delta / (32 * s * s)


def test_emd1d_witness_positions_differ_but_totals_match():
    a = gen_emd_lb(1, 1024, 8, witness=0)
    b = gen_emd_lb(1, 1024, 8, witness=20)
    assert len(a.points.reds) == len(b.points.reds) == 1024
    assert not np.array_equal(a.points.coords, b.points.coords)


def test_emd2d_structure():
    n, s = 1024, 16
    gi = gen_emd_lb(2, n, s, witness=None)
    ps = gi.points
    assert len(ps.reds) == len(ps.blues) == n
    # every point sits inside the centered gadget square of its cell
    delta = gi.params["delta"]
    cell = delta // 16
    rel = ps.coords % cell
    assert rel.min() >= cell // 4
    assert rel.max() < cell - cell // 4


def test_emd3d_counts_and_domain():
    gi = gen_emd_lb(3, 4096, 8, witness=2)
    ps = gi.points
    assert ps.domain.d == 3
    assert len(ps.reds) == len(ps.blues) == 4096


def test_emd_witness_random_draw_is_seeded():
    a = gen_emd_lb(1, 1024, 8, witness="random", rng=np.random.default_rng(4))
    b = gen_emd_lb(1, 1024, 8, witness="random", rng=np.random.default_rng(4))
    assert np.array_equal(a.points.coords, b.points.coords)
    assert a.params["witness"] == b.params["witness"]


def test_emd_infeasible_params_rejected():
    with pytest.raises(ValueError):
        gen_emd_lb(1, 1000, 16)            # n not divisible by 16s
    with pytest.raises(ValueError):
        gen_emd_lb(2, 1024, 10)            # s not a perfect square
    with pytest.raises(ValueError):
        gen_emd_lb(4, 1024, 16)            # unsupported dimension
    with pytest.raises(ValueError):
        gen_emd_lb(1, 1024, 8, witness=63)  # far gadget needs two segments


def test_cellsampling_counts():
    n, c = 4096, 2
    rt = 64
    uni = gen_cellsampling_lb(n, c)
    wit = gen_cellsampling_lb(n, c, witness=3)
    for gi in (uni, wit):
        assert gi.points.n == n
    m_uni = len(np.unique(uni.points.coords[:, 0]))
    m_wit = len(np.unique(wit.points.coords[:, 0]))
    assert m_uni == rt // (4 * c)
    assert m_wit == 2 * c * rt + rt // (4 * c)
    assert (m_wit - rt // (4 * c)) // (rt // (4 * c)) + 1 == 8 * c * c + 1


def test_cellsampling_infeasible_rejected():
    with pytest.raises(ValueError):
        gen_cellsampling_lb(1000, 2)       # not a perfect square
    with pytest.raises(ValueError):
        gen_cellsampling_lb(64, 4)         # sqrt(n)=8 not divisible by 16


def test_mst_gadget_isolated_costs():
    n = 4096
    strip = gen_mst_lb(n, witness=None)
    uniform = gen_mst_lb(n, witness=0)
    per = uniform.params["points_per_cell"]
    strip_cost = exact_mst(strip.points.coords[:per])
    uni_cost = exact_mst(uniform.points.coords[:per])
    assert n ** (5 / 6) <= strip_cost <= 2 * np.sqrt(2) * n ** (5 / 6)
    assert uni_cost >= n ** (7 / 6) / 4


def test_mst_gadget_full_instance_ratio():
    n = 4096
    with_w = gen_mst_lb(n, witness=7)
    without = gen_mst_lb(n, witness=None)
    mi = exact_mst(with_w.points.coords)
    mi_p = exact_mst(without.points.coords)
    assert mi_p <= 2 * mi
    assert mi <= 2 * mi_p


def test_mst_infeasible_rejected():
    with pytest.raises(ValueError):
        gen_mst_lb(1000)                   # not a perfect sixth power

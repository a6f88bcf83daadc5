"""Sublinear estimators over an orthogonal range-counting oracle.

Points live on an integer grid and are visible only through rectangle
count queries; every estimator accounts for its queries in a ledger.
"""

from .cells import (CellSample, RankTable, cell_sampling, enumerate_nonempty,
                    estimate_nonempty_count)
from .domain import (BLUE, PLAIN, RED, DomainSpec, QuadCell, Rect, Shift,
                     cell_distance, cell_of, cell_radius, next_pow2,
                     tree_distance, z_order_cmp, z_order_key)
from .emd import (EmdConfig, estimate_emd, estimate_emd_1d, exact_emd,
                  exact_emd_1d, find_mate, greedy_matching_cost_exact,
                  simulate_greedy_matching)
from .gadgets import (GadgetInstance, gen_cellsampling_lb, gen_emd_lb,
                      gen_mst_lb)
from .mst import (MstConfig, build_spanner, components_exact, estimate_mst,
                  estimate_components, exact_mst, neighbor_cells,
                  spanner_mst_exact, wspd, wspd_explicit)
from .oracle import (CachedCounter, ColoredOracle, Estimate, ExactCounter,
                     QueryLedger, ScaledCounter)
from .pointset import PointSet
from .primitives import bounding_square, kth_lex, kth_zorder, sample_uniform

__all__ = [
    "BLUE", "PLAIN", "RED",
    "CachedCounter", "CellSample", "ColoredOracle", "DomainSpec",
    "EmdConfig", "Estimate", "ExactCounter", "GadgetInstance", "MstConfig",
    "PointSet", "QuadCell", "QueryLedger", "RankTable", "Rect",
    "ScaledCounter", "Shift",
    "bounding_square", "build_spanner", "cell_distance", "cell_of",
    "cell_radius", "cell_sampling", "components_exact", "enumerate_nonempty",
    "estimate_components", "estimate_emd", "estimate_emd_1d", "estimate_mst",
    "estimate_nonempty_count", "exact_emd", "exact_emd_1d", "exact_mst",
    "find_mate", "gen_cellsampling_lb", "gen_emd_lb", "gen_mst_lb",
    "greedy_matching_cost_exact", "kth_lex", "kth_zorder", "neighbor_cells",
    "next_pow2", "sample_uniform", "simulate_greedy_matching",
    "spanner_mst_exact", "tree_distance", "wspd", "wspd_explicit",
    "z_order_cmp", "z_order_key",
]

__version__ = "0.1.0"

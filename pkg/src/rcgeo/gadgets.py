"""Generators for the adversarial instance families.

Each family hides an expensive "witness" sub-instance (or not) inside many
copies of a cheap one, so that estimators with a bounded query budget can be
tested on their ability to tell the two apart:

* EMD (d in {1,2,3}): near gadgets cost 1 per red point; the far gadget
  stacks its points at opposite ends of its cell and dominates the cost.
* Cell sampling: a uniform family where every segment holds one crowded
  cell, versus a family whose witness segment explodes into many singleton
  cells.
* MST: strip gadgets (diagonal runs, cheap) versus one uniform gadget
  (scattered points, expensive) hidden in a grid of cells.

All generators are deterministic given their parameters; ``witness="random"``
draws the witness position (or none, with probability 1/2) from the supplied
generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import BLUE, PLAIN, RED, DomainSpec, is_pow2, next_pow2
from .pointset import PointSet


@dataclass
class GadgetInstance:
    points: PointSet
    family: str                      # emd1d | emd2d | emd3d | cellsampling | mst
    params: dict = field(default_factory=dict)
    declared_cost: str | None = None


def _resolve_witness(witness, n_slots: int, rng, span: int = 1):
    """None, an integer slot, or "random" (no witness with probability 1/2,
    else a uniform slot). Slots must leave room for a witness of ``span``."""
    limit = n_slots - span + 1
    if witness == "random":
        if rng is None:
            raise ValueError('witness="random" requires an rng')
        if rng.integers(0, 2) == 0:
            return None
        return int(rng.integers(0, limit))
    if witness is None:
        return None
    w = int(witness)
    if not 0 <= w < limit:
        raise ValueError(f"witness index {w} out of range [0, {limit})")
    return w


def _check(cond: bool, msg: str):
    if not cond:
        raise ValueError(f"infeasible parameters: {msg}")


# ---------------------------------------------------------------------------
# EMD families


def _emd_gadget(d: int, kind: str, g: int, h: int, color_first: int):
    """Point offsets of one gadget inside a d-cube of side h.

    d=1 near: two alternating runs of g+g points at unit spacing, one
    starting at the left endpoint and one ending at the right endpoint.
    d=1 far: 2g points stacked on each endpoint, opposite colors.
    d>=2: one copy of the (d-1)-gadget on each of two parallel facets,
    with the leading color swapped between the facets.
    """
    other = BLUE if color_first == RED else RED
    if d == 1:
        out = []
        if kind == "near":
            for j in range(2 * g):
                col = color_first if j % 2 == 0 else other
                out.append(((j,), col))
                out.append(((h - 2 * g + j,), col))
        else:
            for _ in range(2 * g):
                out.append(((0,), color_first))
                out.append(((h - 1,), other))
        return out
    sub_hi = _emd_gadget(d - 1, kind, g, h, color_first)
    sub_lo = _emd_gadget(d - 1, kind, g, h, other)
    out = []
    for off, col in sub_hi:
        out.append((off + (h - 1,), col))
    for off, col in sub_lo:
        out.append((off + (0,), col))
    return out


def gen_emd_lb(d: int, n: int, s: int, witness=None,
               rng: np.random.Generator | None = None,
               delta: int | None = None) -> GadgetInstance:
    """Colored instance with |R| = |B| = n: near gadgets everywhere, with
    the far gadget planted at the witness position (if any).

    d=1: 8s unit-spacing segments of length delta/(8s); the far gadget
    spans two adjacent segments (stacked reds at the left end of segment t,
    stacked blues at the right end of segment t+1) and replaces their near
    gadgets point-for-point.
    d=2: 16s square cells; the gadget square of half the cell side sits in
    the middle of each cell, with one 1D gadget copy on its top edge
    (red leading) and one on its bottom edge (blue leading).
    d=3: cubic cells with gadget copies of the 2D construction on two
    parallel facets of the centered half-side cube.
    """
    if d == 1:
        _check(n % (16 * s) == 0, "n must be divisible by 16*s")
        g = n // (16 * s)
        if delta is None:
            delta = max(1 << 16, next_pow2(2 * n), next_pow2(8 * s))
        _check(is_pow2(delta) and delta % (8 * s) == 0,
               "delta must be a power of two divisible by 8*s")
        seg = delta // (8 * s)
        _check(seg >= 4 * g, "segments too short for the chains (delta < 2n)")
        t = _resolve_witness(witness, 8 * s, rng, span=2)
        coords, colors = [], []
        for i in range(8 * s):
            lo = i * seg
            if t is not None and i in (t, t + 1):
                continue
            for off, col in _emd_gadget(1, "near", g, seg, RED):
                coords.append((lo + off[0],))
                colors.append(col)
        if t is not None:
            for _ in range(4 * g):
                coords.append((t * seg,))
                colors.append(RED)
                coords.append(((t + 2) * seg - 1,))
                colors.append(BLUE)
        domain = DomainSpec(1, delta)
        cost = ("n exactly" if t is None
                else "n*delta/(16*s^2) - n/(4*s) + n - n/(4*s)")
        fam = "emd1d"
    else:
        _check(d in (2, 3), "d must be 1, 2 or 3")
        root = round(s ** (1.0 / d))
        _check(root ** d == s, f"s must be a perfect {d}-th power")
        a = 4 * root                       # cells per axis
        per_cell = (1 << d)                # red points per cell, in units of g
        _check(n % (a ** d * per_cell) == 0,
               f"n must be divisible by {a ** d * per_cell}")
        g = n // (a ** d * per_cell)
        if delta is None:
            delta = max(1 << 16, next_pow2(a * 8 * g * per_cell))
        _check(is_pow2(delta) and delta % (2 * a) == 0,
               "delta must be a power of two divisible by 8*s^(1/d)")
        cell = delta // a
        h = cell // 2                      # gadget cube side, centered
        _check(h >= 4 * g, "gadget cube too small for the chains")
        w = _resolve_witness(witness, a ** d, rng)
        near = _emd_gadget(d, "near", g, h, RED)
        far = _emd_gadget(d, "far", g, h, RED)
        coords, colors = [], []
        for flat in range(a ** d):
            idx = []
            v = flat
            for _ in range(d):
                idx.append(v % a)
                v //= a
            lo = tuple(k * cell + cell // 4 for k in idx)
            for off, col in (far if flat == w else near):
                coords.append(tuple(l + o for l, o in zip(lo, off)))
                colors.append(col)
        domain = DomainSpec(d, delta)
        cost = ("Theta(n)" if w is None
                else f"Theta(n*delta/s^{{1+1/{d}}}) from the far cell")
        fam = f"emd{d}d"
    pts = PointSet(np.array(coords, dtype=np.int64),
                   np.array(colors, dtype=np.int8), domain)
    return GadgetInstance(pts, fam,
                          params={"n": n, "s": s, "d": d, "delta": delta,
                                  "witness": t if d == 1 else w},
                          declared_cost=cost)


# ---------------------------------------------------------------------------
# cell-sampling families


def gen_cellsampling_lb(n: int, c: int, witness=None,
                        rng: np.random.Generator | None = None
                        ) -> GadgetInstance:
    """1D instance over delta = n split into sqrt(n)/(4c) segments.

    Uniform family (no witness): 4c*sqrt(n) points stacked in every
    segment's leftmost unit cell -> sqrt(n)/(4c) non-empty cells.
    Witness family: the witness segment instead holds 2c*sqrt(n) stacked
    points plus 2c*sqrt(n) singleton cells -> 2c*sqrt(n) + sqrt(n)/(4c)
    non-empty cells, a factor 8c^2 + 1 more.
    """
    rt = math.isqrt(n)
    _check(rt * rt == n, "n must be a perfect square")
    _check(rt % (4 * c) == 0, "sqrt(n) must be divisible by 4*c")
    n_seg = rt // (4 * c)
    seg = n // n_seg                       # = 4c*sqrt(n), the stack size too
    _check(seg >= 2 * c * rt + 1, "witness singletons do not fit")
    w = _resolve_witness(witness, n_seg, rng)
    coords = []
    for i in range(n_seg):
        lo = i * seg
        if i == w:
            coords.extend([(lo,)] * (2 * c * rt))
            coords.extend((lo + 1 + j,) for j in range(2 * c * rt))
        else:
            coords.extend([(lo,)] * seg)
    domain = DomainSpec(1, next_pow2(n))
    pts = PointSet(np.array(coords, dtype=np.int64),
                   np.full(len(coords), PLAIN, dtype=np.int8), domain)
    m = n_seg if w is None else n_seg + 2 * c * rt
    return GadgetInstance(pts, "cellsampling",
                          params={"n": n, "c": c, "witness": w,
                                  "nonempty_cells": m},
                          declared_cost=f"{m} non-empty unit cells")


# ---------------------------------------------------------------------------
# MST families


def gen_mst_lb(n: int, witness=None,
               rng: np.random.Generator | None = None) -> GadgetInstance:
    """2D grid of 16*n^(1/3) cells of side 4*n^(5/6), each holding an
    n^(2/3)-point gadget (16n points total over delta = 16n).

    Strip gadget: a diagonal run at spacing n^(1/6), weight Theta(n^(5/6)).
    Uniform gadget (at the witness cell): row i, column i*n^(1/3) mod
    n^(2/3), scattered so its weight is Theta(n^(7/6)).
    """
    m = round(n ** (1.0 / 6.0))
    _check(m ** 6 == n, "n must be a perfect sixth power")
    k = m ** 2                             # n^(1/3)
    pts_per = k ** 2                       # n^(2/3)
    cell = 4 * m ** 5                      # 4*n^(5/6)
    a = 4 * m                              # cells per axis -> 16*n^(1/3) cells
    delta = a * cell                       # 16n
    _check(is_pow2(delta), "16n must be a power of two")
    w = _resolve_witness(witness, a * a, rng)
    span = pts_per * m                     # n^(5/6), gadget footprint
    off = (cell - span) // 2
    coords = []
    for flat in range(a * a):
        ci, cj = flat % a, flat // a
        lo = (ci * cell + off, cj * cell + off)
        if flat == w:
            for i in range(pts_per):
                coords.append((lo[0] + i * m, lo[1] + ((i * k) % pts_per) * m))
        else:
            for i in range(pts_per):
                coords.append((lo[0] + i * m, lo[1] + i * m))
    domain = DomainSpec(2, delta)
    pts = PointSet(np.array(coords, dtype=np.int64),
                   np.full(len(coords), PLAIN, dtype=np.int8), domain)
    return GadgetInstance(pts, "mst",
                          params={"n": n, "witness": w, "cells": a * a,
                                  "points_per_cell": pts_per},
                          declared_cost=("all strips: Theta(n^(5/6)) each"
                                         if w is None else
                                         "one uniform gadget: Theta(n^(7/6))"))

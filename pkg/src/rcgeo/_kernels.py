"""Hot numeric kernels: numba-jitted with a pure-numpy fallback.

Set RCGEO_DISABLE_NUMBA=1 to force the numpy path (also used automatically
when numba is unavailable).  benchmarks/kernel_bench.py compares the two.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and not os.environ.get("RCGEO_DISABLE_NUMBA")


def _count_in_rect_py(points: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> int:
    mask = np.ones(points.shape[0], dtype=bool)
    for k in range(points.shape[1]):
        col = points[:, k]
        mask &= (col >= lo[k]) & (col <= hi[k])
    return int(np.count_nonzero(mask))


def _count_in_rect_many_py(points, los, his):
    out = np.empty(los.shape[0], dtype=np.int64)
    for i in range(los.shape[0]):
        out[i] = _count_in_rect_py(points, los[i], his[i])
    return out


def _kruskal_py(n: int, us: np.ndarray, vs: np.ndarray, ws: np.ndarray) -> float:
    """MST weight by Kruskal with union-find; edges pre-sorted by weight."""
    parent = np.arange(n, dtype=np.int64)

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    total = 0.0
    used = 0
    for i in range(len(ws)):
        ra, rb = find(us[i]), find(vs[i])
        if ra != rb:
            parent[ra] = rb
            total += float(ws[i])
            used += 1
            if used == n - 1:
                break
    return total


if USE_NUMBA:
    @numba.njit(cache=True)
    def _count_in_rect_nb(points, lo, hi):  # pragma: no cover - jitted
        n, d = points.shape
        total = 0
        for i in range(n):
            ok = True
            for k in range(d):
                x = points[i, k]
                if x < lo[k] or x > hi[k]:
                    ok = False
                    break
            if ok:
                total += 1
        return total

    @numba.njit(cache=True)
    def _count_in_rect_many_nb(points, los, his):  # pragma: no cover
        m = los.shape[0]
        out = np.empty(m, dtype=np.int64)
        for i in range(m):
            out[i] = _count_in_rect_nb(points, los[i], his[i])
        return out

    @numba.njit(cache=True)
    def _kruskal_nb(n, us, vs, ws):  # pragma: no cover
        parent = np.arange(n)
        total = 0.0
        used = 0
        for i in range(len(ws)):
            a = us[i]
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            b = vs[i]
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a != b:
                parent[a] = b
                total += ws[i]
                used += 1
                if used == n - 1:
                    break
        return total

    def count_in_rect(points, lo, hi):
        return int(_count_in_rect_nb(points, lo, hi))

    def count_in_rect_many(points, los, his):
        return _count_in_rect_many_nb(points, los, his)

    def kruskal_total(n, us, vs, ws):
        return float(_kruskal_nb(n, us.astype(np.int64), vs.astype(np.int64),
                                 ws.astype(np.float64)))
else:
    count_in_rect = _count_in_rect_py
    count_in_rect_many = _count_in_rect_many_py

    def kruskal_total(n, us, vs, ws):
        return _kruskal_py(n, us.astype(np.int64), vs.astype(np.int64),
                           ws.astype(np.float64))

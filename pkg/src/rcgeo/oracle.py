"""Orthogonal range-counting oracles and query accounting.

Every estimator in this package touches the hidden point set only through
``count(rect)`` calls routed through a :class:`QueryLedger`.  The reference
oracle answers from an explicit point array (numba/numpy scan, or a dense
prefix-sum grid when the domain is small enough to materialize).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .domain import BLUE, DomainSpec, RED, Rect

PREFIX_GRID_LIMIT = 1 << 24  # build a dense prefix grid when delta^d <= this


class QueryLedger:
    """Counts oracle queries, total and per named phase."""

    __slots__ = ("total", "per_phase")

    def __init__(self):
        self.total = 0
        self.per_phase: dict[str, int] = {}

    def tick(self, phase: str = "count") -> None:
        self.total += 1
        self.per_phase[phase] = self.per_phase.get(phase, 0) + 1

    def snapshot(self) -> int:
        return self.total

    def since(self, snap: int) -> int:
        return self.total - snap

    def breakdown(self) -> dict[str, int]:
        out = dict(sorted(self.per_phase.items()))
        out["total"] = self.total
        return out

    def __repr__(self):
        phases = " ".join(f"{k}={v}" for k, v in sorted(self.per_phase.items()))
        return f"QueryLedger(total={self.total} {phases})"


@dataclass
class Estimate:
    """An estimator result plus its query bill."""

    value: float
    queries_used: int
    params: dict = field(default_factory=dict)
    phase_breakdown: dict = field(default_factory=dict)


class ExactCounter:
    """Exact range counting over an explicit integer point multiset."""

    def __init__(self, coords: np.ndarray, domain: DomainSpec):
        coords = np.ascontiguousarray(np.asarray(coords, dtype=np.int64))
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        if coords.shape[0] and coords.shape[1] != domain.d:
            raise ValueError("coordinate dimension does not match domain")
        if coords.size and (coords.min() < 0 or coords.max() >= domain.delta):
            raise ValueError("point outside domain")
        self._coords = coords
        self._domain = domain
        self._grid = None
        if coords.shape[0] and domain.delta ** domain.d <= PREFIX_GRID_LIMIT:
            self._grid = self._build_prefix(coords, domain)

    @staticmethod
    def _build_prefix(coords, domain):
        shape = (domain.delta,) * domain.d
        grid = np.zeros(shape, dtype=np.int64)
        np.add.at(grid, tuple(coords[:, k] for k in range(domain.d)), 1)
        for axis in range(domain.d):
            np.cumsum(grid, axis=axis, out=grid)
        return grid

    @property
    def domain(self) -> DomainSpec:
        return self._domain

    @property
    def n(self) -> int:
        return self._coords.shape[0]

    def count(self, rect: Rect, ledger: QueryLedger, phase: str = "count") -> int:
        ledger.tick(phase)
        return self.count_free(rect)

    def count_free(self, rect: Rect) -> int:
        """The answer without billing (internal / test use)."""
        if rect.empty or self.n == 0:
            return 0
        if self._grid is not None:
            return self._prefix_count(rect)
        return _kernels.count_in_rect(self._coords,
                                      np.asarray(rect.lo, dtype=np.int64),
                                      np.asarray(rect.hi, dtype=np.int64))

    def _prefix_count(self, rect: Rect) -> int:
        # inclusion-exclusion over the 2^d corners of the prefix grid
        total = 0
        d = self._domain.d
        for mask in range(1 << d):
            idx = []
            sign = 1
            skip = False
            for k in range(d):
                if mask & (1 << k):
                    c = rect.lo[k] - 1
                    sign = -sign
                else:
                    c = rect.hi[k]
                if c < 0:
                    skip = True
                    break
                idx.append(c)
            if not skip:
                total += sign * int(self._grid[tuple(idx)])
        return total


class CachedCounter:
    """Memoizes answers in front of a counter.

    The oracle is deterministic, so an estimator may reuse an answer it has
    already paid for; only cache misses reach the ledger.
    """

    def __init__(self, base):
        self._base = base
        self._cache: dict = {}

    @property
    def domain(self):
        return self._base.domain

    @property
    def n(self):
        return self._base.n

    def count(self, rect: Rect, ledger: QueryLedger, phase: str = "count") -> int:
        if rect.empty:
            return 0
        key = (rect.lo, rect.hi)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._base.count(rect, ledger, phase)
            self._cache[key] = hit
        return hit


class ScaledCounter:
    """Presents a counter over [0, delta_eff)^d backed by an affine window
    of the base domain: x_eff = ((x - lo) * delta_eff) // width.

    Each effective rect maps to a single base rect, so one effective query
    costs one base query.
    """

    def __init__(self, base, lo, width: int, delta_eff: int):
        self._base = base
        self._lo = tuple(int(a) for a in lo)
        self._width = int(width)
        self._domain = DomainSpec(base.domain.d, delta_eff)

    @property
    def domain(self):
        return self._domain

    @property
    def n(self):
        return self._base.n

    def base_rect(self, rect: Rect) -> Rect:
        de = self._domain.delta
        w = self._width
        lo = []
        hi = []
        for k in range(rect.d):
            a, b = rect.lo[k], rect.hi[k]
            lo.append(self._lo[k] + -((-a * w) // de))       # ceil(a*w/de)
            hi.append(self._lo[k] + -((-(b + 1) * w) // de) - 1)
        return Rect.clipped(lo, hi, self._base.domain)

    def to_effective(self, coords: np.ndarray) -> np.ndarray:
        """Snap base coordinates into the effective grid (for baselines)."""
        lo = np.asarray(self._lo, dtype=np.int64)
        c = np.asarray(coords, dtype=np.int64)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        return ((c - lo) * self._domain.delta) // self._width

    def count(self, rect: Rect, ledger: QueryLedger, phase: str = "count") -> int:
        if rect.empty:
            return 0
        return self._base.count(self.base_rect(rect), ledger, phase)


@dataclass
class ColoredOracle:
    """Red/blue views over one bichromatic instance; |R| == |B|."""

    red: ExactCounter
    blue: ExactCounter

    def __post_init__(self):
        if self.red.n != self.blue.n:
            raise ValueError("red and blue point counts must match")
        if self.red.domain != self.blue.domain:
            raise ValueError("red and blue domains must match")

    @property
    def domain(self) -> DomainSpec:
        return self.red.domain

    @property
    def n(self) -> int:
        return self.red.n

    @classmethod
    def from_pointset(cls, ps) -> "ColoredOracle":
        return cls(ExactCounter(ps.coords[ps.colors == RED], ps.domain),
                   ExactCounter(ps.coords[ps.colors == BLUE], ps.domain))

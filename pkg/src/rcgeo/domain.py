"""Discrete-domain geometry: grids, shifted quadtree cells, z-order, tree metric.

Points live on the integer grid [0, delta)^d with delta a power of two and
d in {1, 2, 3}.  A quadtree over the domain uses cells of side 2^level; the
root cell has side 2*delta so that, for any shift vector v in [0, delta)^d,
the whole domain fits inside a single (translated) root cell.  A shifted
cell at level i with index k covers coordinates x with
floor((x + v) / 2^i) == k, i.e. the grid is translated by -v relative to
the domain.  Clipping a shifted cell to the domain therefore always yields
a single box (no wrap-around).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

PLAIN, RED, BLUE = 0, 1, 2
COLOR_CHARS = {RED: "R", BLUE: "B", PLAIN: "P"}
CHAR_COLORS = {c: k for k, c in COLOR_CHARS.items()}


def is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


def next_pow2(x: int) -> int:
    """Smallest power of two >= x (x >= 1)."""
    if x <= 1:
        return 1
    return 1 << (x - 1).bit_length()


def ilog2(x: int) -> int:
    if not is_pow2(x):
        raise ValueError(f"{x} is not a power of two")
    return x.bit_length() - 1


@dataclass(frozen=True)
class DomainSpec:
    """The ambient grid [0, delta)^d."""

    d: int
    delta: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if not is_pow2(self.delta):
            raise ValueError(f"delta must be a power of two, got {self.delta}")

    @property
    def log_delta(self) -> int:
        return ilog2(self.delta)

    @property
    def root_level(self) -> int:
        """Level of the (shifted) root cell, side 2*delta."""
        return self.log_delta + 1

    def full_rect(self) -> "Rect":
        return Rect(tuple(0 for _ in range(self.d)),
                    tuple(self.delta - 1 for _ in range(self.d)))

    def contains(self, p) -> bool:
        return all(0 <= int(x) < self.delta for x in p)


@dataclass(frozen=True)
class Rect:
    """Closed integer box [lo_1, hi_1] x ... x [lo_d, hi_d]; may be empty."""

    lo: tuple
    hi: tuple
    empty: bool = False

    @classmethod
    def empty_rect(cls, d: int) -> "Rect":
        z = tuple(0 for _ in range(d))
        return cls(z, z, empty=True)

    @classmethod
    def clipped(cls, lo, hi, domain: DomainSpec) -> "Rect":
        clo = tuple(max(int(a), 0) for a in lo)
        chi = tuple(min(int(b), domain.delta - 1) for b in hi)
        if any(a > b for a, b in zip(clo, chi)):
            return cls.empty_rect(domain.d)
        return cls(clo, chi)

    @property
    def d(self) -> int:
        return len(self.lo)

    def contains(self, p) -> bool:
        if self.empty:
            return False
        return all(a <= int(x) <= b for a, x, b in zip(self.lo, p, self.hi))

    def volume(self) -> int:
        if self.empty:
            return 0
        out = 1
        for a, b in zip(self.lo, self.hi):
            out *= b - a + 1
        return out

    def pinned(self, axis: int, value: int) -> "Rect":
        """Restrict one axis to a single coordinate."""
        lo = list(self.lo)
        hi = list(self.hi)
        lo[axis] = hi[axis] = int(value)
        return Rect(tuple(lo), tuple(hi), empty=self.empty)

    def with_hi(self, axis: int, value: int) -> "Rect":
        hi = list(self.hi)
        hi[axis] = int(value)
        if value < self.lo[axis]:
            return Rect.empty_rect(self.d)
        return Rect(self.lo, tuple(hi), empty=self.empty)


@dataclass(frozen=True)
class Shift:
    """Translation vector in [0, delta)^d applied to the quadtree grid."""

    v: tuple

    @classmethod
    def zero(cls, d: int) -> "Shift":
        return cls(tuple(0 for _ in range(d)))

    @classmethod
    def draw(cls, domain: DomainSpec, rng: np.random.Generator) -> "Shift":
        return cls(tuple(int(x) for x in rng.integers(0, domain.delta, size=domain.d)))


@dataclass(frozen=True)
class QuadCell:
    """Quadtree cell: side 2^level, per-axis index; grid translated by -shift."""

    level: int
    index: tuple

    @property
    def d(self) -> int:
        return len(self.index)

    @property
    def side(self) -> int:
        return 1 << self.level

    def rect(self, domain: DomainSpec, shift: Shift) -> Rect:
        s = self.side
        lo = tuple(k * s - v for k, v in zip(self.index, shift.v))
        hi = tuple(a + s - 1 for a in lo)
        return Rect.clipped(lo, hi, domain)

    def parent(self) -> "QuadCell":
        return QuadCell(self.level + 1, tuple(k >> 1 for k in self.index))

    def children(self):
        """Child cells ordered lexicographically by center (axis 0 major)."""
        out = []
        for bits in itertools.product((0, 1), repeat=self.d):
            out.append(QuadCell(self.level - 1,
                                tuple(2 * k + b for k, b in zip(self.index, bits))))
        return out

    def center(self, shift: Shift | None = None):
        """Cell center in domain coordinates (half-integer)."""
        s = self.side
        v = shift.v if shift is not None else (0,) * self.d
        return tuple(k * s + (s - 1) / 2.0 - w for k, w in zip(self.index, v))


def root_cell(domain: DomainSpec) -> QuadCell:
    """Shifted root: side 2*delta, contains the whole domain for any shift."""
    return QuadCell(domain.root_level, tuple(0 for _ in range(domain.d)))


def cell_of(p, level: int, shift: Shift) -> QuadCell:
    idx = tuple((int(x) + v) >> level for x, v in zip(p, shift.v))
    return QuadCell(level, idx)


def cell_distance(a: QuadCell, b: QuadCell) -> float:
    """Euclidean distance between cell centers (same shifted grid)."""
    ca = a.center()
    cb = b.center()
    return float(np.sqrt(sum((x - y) ** 2 for x, y in zip(ca, cb))))


def cell_radius(cell: QuadCell) -> float:
    """Half-diagonal of the cell (radius of the enclosing ball)."""
    return cell.side * np.sqrt(cell.d) / 2.0


def z_order_key(p, shift: Shift, domain: DomainSpec) -> int:
    """Morton key of p under the shifted grid; axis 0 is most significant
    within each level, matching the lexicographic-by-center child order."""
    coords = [int(x) + v for x, v in zip(p, shift.v)]
    nbits = domain.root_level
    key = 0
    for bit in range(nbits - 1, -1, -1):
        for c in coords:
            key = (key << 1) | ((c >> bit) & 1)
    return key


def z_order_cmp(p, q, shift: Shift, domain: DomainSpec) -> int:
    """-1/0/+1 comparison in z-order (recursive child order of the shifted
    quadtree; degenerates to numeric order in one dimension)."""
    kp = z_order_key(p, shift, domain)
    kq = z_order_key(q, shift, domain)
    return (kp > kq) - (kp < kq)


def tree_distance(p, q, shift: Shift) -> int:
    """Distance in the shifted-quadtree tree metric.

    The tree connects each cell at level i to its parent at level i+1 by an
    edge of weight 2^(i+1).  With j the level of the lowest common shifted
    cell of p and q, the leaf-to-leaf path costs 2^(j+2) - 4; identical
    locations are at distance 0.
    """
    j = 0
    for x, y, v in zip(p, q, shift.v):
        j = max(j, int((int(x) + int(v)) ^ (int(y) + int(v))).bit_length())
    if j == 0:
        return 0
    return (1 << (j + 2)) - 4


def tree_distance_batch(P: np.ndarray, Q: np.ndarray, shift: Shift) -> np.ndarray:
    """Vectorized tree_distance for matching rows of P and Q, shape (n, d)."""
    v = np.asarray(shift.v, dtype=np.int64)
    x = (P.astype(np.int64) + v) ^ (Q.astype(np.int64) + v)
    # bit_length per entry; log2 on int64 is exact here since domain
    # coordinates stay far below 2^53.
    bl = np.zeros_like(x)
    mask = x > 0
    bl[mask] = np.floor(np.log2(x[mask])).astype(np.int64) + 1
    j = bl.max(axis=1)
    out = np.where(j == 0, 0, (1 << np.maximum(j + 2, 2)) - 4)
    return out.astype(np.int64)

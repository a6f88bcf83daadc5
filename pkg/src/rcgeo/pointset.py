"""Point multiset container and its on-disk format.

Files are plain text: a header line ``d delta n_red n_blue n_plain``
followed by one ``color x_1 ... x_d`` line per point, color in {R, B, P}.
Round-trips are bit-exact and preserve point order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .domain import BLUE, CHAR_COLORS, COLOR_CHARS, DomainSpec, PLAIN, RED


@dataclass
class PointSet:
    coords: np.ndarray  # (n, d) int64
    colors: np.ndarray  # (n,) uint8
    domain: DomainSpec

    def __post_init__(self):
        self.coords = np.ascontiguousarray(np.asarray(self.coords, dtype=np.int64))
        if self.coords.ndim == 1:
            self.coords = self.coords.reshape(-1, 1)
        self.colors = np.asarray(self.colors, dtype=np.uint8)
        if self.coords.shape[0] != self.colors.shape[0]:
            raise ValueError("coords/colors length mismatch")
        if self.coords.shape[0]:
            if self.coords.shape[1] != self.domain.d:
                raise ValueError("dimension mismatch")
            if self.coords.min() < 0 or self.coords.max() >= self.domain.delta:
                raise ValueError("point outside domain")

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def of_color(self, color: int) -> np.ndarray:
        return self.coords[self.colors == color]

    @property
    def reds(self) -> np.ndarray:
        return self.of_color(RED)

    @property
    def blues(self) -> np.ndarray:
        return self.of_color(BLUE)

    def save(self, path: str) -> None:
        """Atomic write (stage then rename)."""
        n_red = int(np.count_nonzero(self.colors == RED))
        n_blue = int(np.count_nonzero(self.colors == BLUE))
        n_plain = self.n - n_red - n_blue
        lines = [f"{self.domain.d} {self.domain.delta} {n_red} {n_blue} {n_plain}"]
        for i in range(self.n):
            xs = " ".join(str(int(x)) for x in self.coords[i])
            lines.append(f"{COLOR_CHARS[int(self.colors[i])]} {xs}")
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "PointSet":
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 5:
                raise ValueError("bad header")
            d, delta, n_red, n_blue, n_plain = (int(x) for x in header)
            domain = DomainSpec(d, delta)
            coords = []
            colors = []
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                colors.append(CHAR_COLORS[parts[0]])
                xs = [int(x) for x in parts[1:]]
                if len(xs) != d:
                    raise ValueError("bad point line")
                coords.append(xs)
        ps = cls(np.asarray(coords, dtype=np.int64).reshape(-1, d),
                 np.asarray(colors, dtype=np.uint8), domain)
        counts = (int(np.count_nonzero(ps.colors == RED)),
                  int(np.count_nonzero(ps.colors == BLUE)),
                  int(np.count_nonzero(ps.colors == PLAIN)))
        if counts != (n_red, n_blue, n_plain):
            raise ValueError("header/point-count mismatch")
        return ps

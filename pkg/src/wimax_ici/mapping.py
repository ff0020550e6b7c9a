"""Gray-labelled square QAM constellations with unit average energy."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MODULATIONS = {"qpsk": 4, "qam16": 16, "qam64": 64}


@dataclass(frozen=True, eq=False)
class Constellation:
    """Point ``points[i]`` carries the label ``i`` (MSB first).

    The first half of each label selects the in-phase level, the second
    half the quadrature level; both axes are Gray coded.
    """

    order: int
    points: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return int(self.order).bit_length() - 1

    def labels(self) -> np.ndarray:
        """(order, bits_per_symbol) array of label bits."""
        k = self.bits_per_symbol
        idx = np.arange(self.order)
        return ((idx[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)

    @property
    def min_distance(self) -> float:
        d = np.abs(self.points[:, None] - self.points[None, :])
        return float(d[d > 0].min())


def _gray_axis_levels(m: int) -> np.ndarray:
    """Amplitude for each m-bit axis label; label 0 sits on the largest level."""
    L = 1 << m
    levels = np.empty(L)
    for i in range(L):
        levels[i ^ (i >> 1)] = (L - 1) - 2 * i
    return levels


def constellation(order: int | str) -> Constellation:
    """Shared instance for an order (4, 16, 64) or a name from MODULATIONS."""
    if isinstance(order, str):
        if order not in MODULATIONS:
            raise ValueError(f"unknown modulation {order!r}")
        order = MODULATIONS[order]
    return _constellation(int(order))


@lru_cache(maxsize=None)
def _constellation(order: int) -> Constellation:
    if order not in (4, 16, 64):
        raise ValueError(f"unsupported constellation order {order}")
    k = order.bit_length() - 1
    m = k // 2
    levels = _gray_axis_levels(m)
    idx = np.arange(order)
    pts = levels[idx >> m] + 1j * levels[idx & ((1 << m) - 1)]
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    pts.flags.writeable = False
    return Constellation(order, pts)


def map_bits(bits, c: Constellation) -> np.ndarray:
    """Map groups of ``c.bits_per_symbol`` bits (MSB first) to points.

    Works along the last axis so batches of blocks map in one call.
    """
    arr = np.asarray(bits, dtype=np.uint8)
    k = c.bits_per_symbol
    if arr.shape[-1] % k:
        raise ValueError(f"{arr.shape[-1]} bits is not a multiple of {k}")
    groups = arr.reshape(arr.shape[:-1] + (-1, k))
    idx = groups @ (1 << np.arange(k - 1, -1, -1))
    return c.points[idx]


def nearest_index(symbols, c: Constellation) -> np.ndarray:
    """Index of the closest point; exact ties go to the lowest label."""
    s = np.asarray(symbols, dtype=complex)
    best = np.full(s.shape, np.inf)
    idx = np.zeros(s.shape, dtype=np.intp)
    for i, p in enumerate(c.points):
        d = np.abs(s - p) ** 2
        better = d < best
        best = np.where(better, d, best)
        idx[better] = i
    return idx


def demap_hard(symbols, c: Constellation) -> np.ndarray:
    idx = nearest_index(symbols, c)
    bits = c.labels()[idx]
    return bits.reshape(idx.shape[:-1] + (-1,)) if idx.ndim else bits

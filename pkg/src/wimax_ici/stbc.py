"""2x1 Alamouti space-time block code with known channel.

Slot 1 sends ``(s1, s2)`` from antennas (1, 2); slot 2 sends
``(-conj(s2), conj(s1))``. All functions broadcast over arrays, which is
how the simulator codes every subcarrier of a symbol pair at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mapping import Constellation


@dataclass(frozen=True)
class StbcPair:
    s1: np.ndarray
    s2: np.ndarray

    @property
    def slot1_tx(self):
        return self.s1, self.s2

    @property
    def slot2_tx(self):
        return -np.conj(self.s2), np.conj(self.s1)

    def matrix(self) -> np.ndarray:
        """Rows are time slots, columns antennas (scalar pairs only)."""
        return np.array([self.slot1_tx, self.slot2_tx], dtype=complex)


@dataclass(frozen=True)
class ChannelGains:
    h1: np.ndarray
    h2: np.ndarray

    @property
    def alpha_sq(self) -> np.ndarray:
        return np.abs(self.h1) ** 2 + np.abs(self.h2) ** 2


def stbc_encode(s1, s2) -> StbcPair:
    return StbcPair(np.asarray(s1, dtype=complex), np.asarray(s2, dtype=complex))


def stbc_combine(r1, r2, h: ChannelGains):
    """Linear combining; noiseless output is ``alpha_sq * (s1, s2)``."""
    r1 = np.asarray(r1)
    r2c = np.conj(r2)
    s1 = np.conj(h.h1) * r1 + h.h2 * r2c
    s2 = np.conj(h.h2) * r1 - h.h1 * r2c
    return s1, s2


def stbc_ml_decide(s_tilde, alpha_sq, c: Constellation) -> np.ndarray:
    """ML symbol decision on a combiner output.

    Minimizes ``|s_tilde - s|^2 + (alpha_sq - 1) |s|^2`` over the
    constellation, which matters once points differ in modulus. Bins with
    ``alpha_sq == 0`` are erasures and come back as NaN.
    """
    st = np.asarray(s_tilde, dtype=complex)
    a = np.broadcast_to(np.asarray(alpha_sq, dtype=float), st.shape)
    out = c.points[stbc_ml_index(st, a, c)]
    return np.where(a > 0, out, np.nan + 0j)


def stbc_ml_index(s_tilde, alpha_sq, c: Constellation) -> np.ndarray:
    """Label index of the ML decision (ties to the lowest label)."""
    st = np.asarray(s_tilde, dtype=complex)
    a = np.asarray(alpha_sq, dtype=float) - 1
    best = np.full(np.broadcast_shapes(st.shape, a.shape), np.inf)
    idx = np.zeros(best.shape, dtype=np.intp)
    # running minimum keeps memory at one array per point
    for i, p in enumerate(c.points):
        m = np.abs(st - p) ** 2 + a * abs(p) ** 2
        better = m < best
        best = np.where(better, m, best)
        idx[better] = i
    return idx

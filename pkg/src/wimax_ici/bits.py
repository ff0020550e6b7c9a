"""Bit-level transmit conditioning: randomizer, convolutional code, block
interleaver, hard-decision Viterbi decoder and error counting.

Every function accepts either a single block (1-D array) or a batch of
equal-length blocks (2-D array, one block per row). Batching is what keeps
the Monte Carlo loop in :mod:`wimax_ici.sim` affordable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

PRBS_SEED_ALL_ONES = 0x7FFF


@dataclass(frozen=True)
class CodecSpec:
    """Rate-1/2 feed-forward convolutional code.

    Generator polynomials are octal-coded with the most significant tap
    applied to the current input bit.
    """

    constraint_length: int = 7
    generators: tuple[int, int] = (0o171, 0o133)

    def __post_init__(self):
        if self.constraint_length < 2:
            raise ValueError("constraint_length must be >= 2")
        if len(self.generators) != 2:
            raise ValueError("rate-1/2 code needs exactly two generators")
        for g in self.generators:
            if g <= 0 or g >= (1 << self.constraint_length):
                raise ValueError(f"generator {g:o} does not fit constraint length")

    @property
    def tail_bits(self) -> int:
        return self.constraint_length - 1

    @property
    def n_states(self) -> int:
        return 1 << (self.constraint_length - 1)

    def taps(self) -> np.ndarray:
        """(2, K) array; ``taps[i, d]`` multiplies the input delayed by d."""
        K = self.constraint_length
        return np.array(
            [[(g >> (K - 1 - d)) & 1 for d in range(K)] for g in self.generators],
            dtype=np.uint8,
        )


WIMAX_CODEC = CodecSpec()


def _as_bits(data) -> np.ndarray:
    arr = np.asarray(data)
    if arr.size == 0:
        raise ValueError("bit block must be nonempty")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bit block may only contain 0 and 1")
    return arr.astype(np.uint8, copy=False)


@lru_cache(maxsize=32)
def prbs(length: int, seed_state: int = PRBS_SEED_ALL_ONES) -> np.ndarray:
    """First ``length`` output bits of the x^15 + x^14 + 1 generator.

    ``seed_state`` bit 14 is register stage 1 and bit 0 is stage 15. The
    returned array is read-only because it is cached.
    """
    if not 0 < seed_state < (1 << 15):
        raise ValueError("seed_state must be a nonzero 15-bit value")
    reg = seed_state
    out = np.empty(length, dtype=np.uint8)
    for n in range(length):
        fb = ((reg >> 1) ^ reg) & 1  # stages 14 and 15
        out[n] = fb
        reg = (reg >> 1) | (fb << 14)
    out.flags.writeable = False
    return out


def randomize(data, seed_state: int = PRBS_SEED_ALL_ONES) -> np.ndarray:
    """XOR each block with the PRBS restarted from ``seed_state``.

    Applying it twice with the same seed returns the input.
    """
    bits = _as_bits(data)
    return bits ^ prbs(bits.shape[-1], seed_state)


def conv_encode(data, spec: CodecSpec = WIMAX_CODEC) -> np.ndarray:
    """Zero-tail rate-1/2 encoding.

    Output length per block is ``2 * (len + K - 1)``, ordered
    ``g0[0], g1[0], g0[1], g1[1], ...``.
    """
    bits = _as_bits(data)
    K = spec.constraint_length
    pad = [(0, 0)] * (bits.ndim - 1) + [(0, K - 1)]
    u = np.pad(bits, pad)
    L = u.shape[-1]
    out = np.zeros(bits.shape[:-1] + (L, 2), dtype=np.uint8)
    for i, row in enumerate(spec.taps()):
        for d in np.flatnonzero(row):
            out[..., d:, i] ^= u[..., : L - d]
    return out.reshape(bits.shape[:-1] + (2 * L,))


def interleave(data, rows: int, cols: int) -> np.ndarray:
    """Write the block column by column into a rows x cols array, read rows."""
    arr = np.asarray(data)
    if arr.shape[-1] != rows * cols:
        raise ValueError(f"block length {arr.shape[-1]} != {rows}x{cols}")
    lead = arr.shape[:-1]
    return np.swapaxes(arr.reshape(lead + (cols, rows)), -1, -2).reshape(lead + (rows * cols,))


def deinterleave(data, rows: int, cols: int) -> np.ndarray:
    arr = np.asarray(data)
    if arr.shape[-1] != rows * cols:
        raise ValueError(f"block length {arr.shape[-1]} != {rows}x{cols}")
    lead = arr.shape[:-1]
    return np.swapaxes(arr.reshape(lead + (rows, cols)), -1, -2).reshape(lead + (rows * cols,))


@lru_cache(maxsize=8)
def _trellis(spec: CodecSpec):
    # state = last K-1 inputs, most recent in the MSB
    K = spec.constraint_length
    ns = spec.n_states
    g0, g1 = spec.generators
    parity = lambda x: bin(x).count("1") & 1  # noqa: E731
    nxt = np.arange(ns)
    b = nxt >> (K - 2)
    prev = np.stack([((nxt << 1) & (ns - 1)), ((nxt << 1) & (ns - 1)) | 1])
    pattern = np.empty((2, ns), dtype=np.intp)
    for p in range(2):
        for s in range(ns):
            reg = (int(b[s]) << (K - 1)) | int(prev[p, s])
            pattern[p, s] = 2 * parity(reg & g0) + parity(reg & g1)
    return prev, pattern, b.astype(np.uint8)


@numba.njit(cache=True, nogil=True)
def _viterbi_kernel(rx, prev, pattern, in_bit, n_keep):
    B, n = rx.shape
    T = n // 2
    ns = prev.shape[1]
    out = np.empty((B, n_keep), dtype=np.uint8)
    pm = np.empty(ns, dtype=np.int32)
    new = np.empty(ns, dtype=np.int32)
    choice = np.empty((T, ns), dtype=np.uint8)
    bm = np.empty(4, dtype=np.int32)
    for b in range(B):
        pm[:] = 1 << 28
        pm[0] = 0
        for t in range(T):
            r0 = rx[b, 2 * t]
            r1 = rx[b, 2 * t + 1]
            bm[0] = r0 + r1
            bm[1] = r0 + 1 - r1
            bm[2] = 1 - r0 + r1
            bm[3] = 2 - r0 - r1
            for s in range(ns):
                c0 = pm[prev[0, s]] + bm[pattern[0, s]]
                c1 = pm[prev[1, s]] + bm[pattern[1, s]]
                if c1 < c0:
                    new[s] = c1
                    choice[t, s] = 1
                else:
                    new[s] = c0
                    choice[t, s] = 0
            pm[:] = new
        state = 0
        for t in range(T - 1, -1, -1):
            if t < n_keep:
                out[b, t] = in_bit[state]
            state = prev[choice[t, state], state]
    return out


def viterbi_decode(coded, spec: CodecSpec = WIMAX_CODEC) -> np.ndarray:
    """Hard-decision (Hamming metric) maximum-likelihood decoding.

    Assumes the encoder started and ended in the zero state; the tail bits
    are stripped from the result.
    """
    rx = _as_bits(coded)
    squeeze = rx.ndim == 1
    rx = np.ascontiguousarray(np.atleast_2d(rx))
    n = rx.shape[-1]
    if n % 2 or n < 2 * spec.tail_bits + 2:
        raise ValueError(f"coded length {n} is odd or shorter than the tail")
    prev, pattern, in_bit = _trellis(spec)
    out = _viterbi_kernel(rx, prev, pattern, in_bit, n // 2 - spec.tail_bits)
    return out[0] if squeeze else out


def count_bit_errors(tx, rx) -> tuple[int, int]:
    """Return ``(errors, total)`` where errors is the Hamming distance."""
    a = np.asarray(tx)
    b = np.asarray(rx)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b)), int(a.size)

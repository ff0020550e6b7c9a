"""OFDM core: radix-2 FFT, subcarrier allocation, cyclic prefix and CFO.

Frequency-domain arrays are in natural FFT order (bin k <-> frequency k for
k < N/2, k - N otherwise). All transforms act on the last axis so stacks of
OFDM symbols go through in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# subcarrier roles
NULL, DATA, PILOT, DATA_MIRROR, PILOT_MIRROR = range(5)


_KERNEL = 16  # first log2(_KERNEL) radix-2 stages are folded into one small matrix


@lru_cache(maxsize=16)
def _fft_plan(n: int):
    if n < 1 or n & (n - 1):
        raise ValueError(f"FFT length {n} is not a power of two")
    bits = n.bit_length() - 1
    rev = np.zeros(n, dtype=np.intp)
    for i in range(bits):
        rev |= ((np.arange(n) >> i) & 1) << (bits - 1 - i)
    # after bit reversal, each run of L samples holds a length-L sub-DFT whose
    # inputs sit in bit-reversed order: kernel[i, k] = W_L^(k * rev_L(i))
    L = min(n, _KERNEL)
    lb = L.bit_length() - 1
    rl = np.zeros(L, dtype=np.intp)
    for i in range(lb):
        rl |= ((np.arange(L) >> i) & 1) << (lb - 1 - i)
    kernel = np.exp(-2j * np.pi * np.outer(rl, np.arange(L)) / L)
    table = np.exp(-2j * np.pi * np.arange(n // 2) / n) if n > 1 else np.ones(0)
    twiddles = []
    h = L
    while h < n:
        twiddles.append(table[:: n // (2 * h)][:h])
        h *= 2
    return rev, kernel, twiddles


def fft(x) -> np.ndarray:
    """Unscaled forward DFT, iterative decimation in time."""
    a = np.asarray(x, dtype=complex)
    n = a.shape[-1]
    rev, kernel, twiddles = _fft_plan(n)
    lead = a.shape[:-1]
    L = len(kernel)
    a = (a[..., rev].reshape(lead + (n // L, L)) @ kernel).reshape(lead + (n,))
    h = L
    for w in twiddles:
        blocks = a.reshape(lead + (n // (2 * h), 2, h))
        even = blocks[..., 0, :]
        odd = blocks[..., 1, :]
        t = odd * w
        np.subtract(even, t, out=odd)
        even += t
        h *= 2
    return a


def ifft(x) -> np.ndarray:
    """Inverse DFT with the 1/N factor on this side."""
    a = np.asarray(x, dtype=complex)
    return np.conj(fft(np.conj(a))) / a.shape[-1]


@dataclass(frozen=True, eq=False)
class AllocationPlan:
    """Which FFT bins carry data and pilots.

    ``data_indices``/``pilot_indices`` list every loaded bin for a plain
    (non-cancelling) OFDM symbol. The ``primary_*`` subsets hold the bins
    that carry independent values under mirror-pair cancellation; the
    partner of primary bin ``k`` is ``mirror(k) = n_fft - 1 - k``.
    """

    n_fft: int
    n_used: int
    data_indices: np.ndarray
    pilot_indices: np.ndarray
    primary_data: np.ndarray
    primary_pilot: np.ndarray

    @property
    def n_data(self) -> int:
        return len(self.data_indices)

    @property
    def n_pilot(self) -> int:
        return len(self.pilot_indices)

    def mirror(self, k):
        return self.n_fft - 1 - np.asarray(k)

    def roles(self, mirrored: bool) -> np.ndarray:
        r = np.full(self.n_fft, NULL, dtype=np.int8)
        if mirrored:
            r[self.primary_data] = DATA
            r[self.mirror(self.primary_data)] = DATA_MIRROR
            r[self.primary_pilot] = PILOT
            r[self.mirror(self.primary_pilot)] = PILOT_MIRROR
        else:
            r[self.data_indices] = DATA
            r[self.pilot_indices] = PILOT
        return r


def wimax_allocation(n_fft: int = 512, n_used: int = 256, n_pilot_pairs: int = 30) -> AllocationPlan:
    """Default plan: 192 data + 60 pilot bins around DC.

    The used band spans frequencies ``-n_used/2 .. n_used/2 - 1``. Mirror
    pairs are ``(f, -1 - f)``; the pair holding DC and the outermost pair
    stay null, leaving ``n_used - 4`` loaded bins.
    """
    half = n_used // 2
    if n_used > n_fft or half < 3:
        raise ValueError("used band does not fit the FFT")
    positive = np.arange(1, half - 1)
    if not 1 <= n_pilot_pairs < len(positive):
        raise ValueError("pilot count does not fit the used band")
    pilots = np.unique(np.round(np.linspace(1, half - 2, n_pilot_pairs)).astype(int))
    data = np.setdiff1d(positive, pilots)
    mirror = lambda k: n_fft - 1 - k  # noqa: E731
    return AllocationPlan(
        n_fft=n_fft,
        n_used=n_used,
        data_indices=np.concatenate([data, mirror(data)]),
        pilot_indices=np.concatenate([pilots, mirror(pilots)]),
        primary_data=data,
        primary_pilot=pilots,
    )


@dataclass
class SubcarrierFrame:
    """Frequency-domain content of one OFDM symbol (or a stack of them)."""

    values: np.ndarray
    roles: np.ndarray

    @property
    def n_fft(self) -> int:
        return self.values.shape[-1]


def assemble_symbol(data, pilots, plan: AllocationPlan) -> SubcarrierFrame:
    """Load every data and pilot bin with an independent value."""
    data = np.asarray(data, dtype=complex)
    pilots = np.asarray(pilots, dtype=complex)
    if data.shape[-1] != plan.n_data or pilots.shape[-1] != plan.n_pilot:
        raise ValueError(
            f"expected {plan.n_data} data / {plan.n_pilot} pilots, "
            f"got {data.shape[-1]} / {pilots.shape[-1]}"
        )
    lead = np.broadcast_shapes(data.shape[:-1], pilots.shape[:-1])
    values = np.zeros(lead + (plan.n_fft,), dtype=complex)
    values[..., plan.data_indices] = data
    values[..., plan.pilot_indices] = pilots
    return SubcarrierFrame(values, plan.roles(mirrored=False))


def add_cp(x, cp_len: int) -> np.ndarray:
    x = np.asarray(x)
    n = x.shape[-1]
    if not 0 <= cp_len < n:
        raise ValueError(f"cp_len {cp_len} must be in [0, {n})")
    return np.concatenate([x[..., n - cp_len :], x], axis=-1)


def strip_cp(x, cp_len: int) -> np.ndarray:
    x = np.asarray(x)
    if not 0 <= cp_len < x.shape[-1] - cp_len:
        raise ValueError(f"cp_len {cp_len} leaves no symbol body")
    return x[..., cp_len:]


def valid_cp_lengths(n_fft: int) -> tuple[int, ...]:
    return tuple(n_fft // d for d in (4, 8, 16, 32))


def apply_cfo(x, epsilon: float, n_fft: int, start: int = 0) -> np.ndarray:
    """Rotate sample n by exp(j 2 pi epsilon (start + n) / n_fft).

    The sample counter runs along the last axis, so pass a whole frame
    (CP included) to keep the phase continuous from symbol to symbol.
    """
    x = np.asarray(x, dtype=complex)
    if epsilon == 0:
        return x.copy()
    n = start + np.arange(x.shape[-1])
    return x * np.exp(2j * np.pi * epsilon * n / n_fft)


@dataclass(frozen=True)
class PilotPlan:
    npt: int
    npf: int
    delta_f: float
    t_s: float
    tau_max: float


def compute_pilot_spacing(delta_f: float, t_s: float, tau_max: float) -> PilotPlan:
    """Maximum pilot spacing in time and frequency.

    npt ~ 1 / (delta_f * t_s) and npf ~ 1 / (delta_f * tau_max), rounded
    down and floored at 1.
    """
    if min(delta_f, t_s, tau_max) <= 0:
        raise ValueError("delta_f, t_s and tau_max must be positive")

    def spacing(v):
        return max(1, math.floor(1.0 / v + 1e-9))

    return PilotPlan(spacing(delta_f * t_s), spacing(delta_f * tau_max), delta_f, t_s, tau_max)

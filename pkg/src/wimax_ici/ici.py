"""Inter-carrier interference: leakage coefficients, mirror-pair
self-cancellation (with and without pilots) and analytic CIR.

Under cancellation every independent value placed on bin ``k`` is repeated
with weight -1 on ``mirror(k) = N - 1 - k``; the receiver decides on
``(Y[j] - Y[mirror(j)]) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import prbs
from .mapping import constellation, map_bits
from .ofdm import (
    DATA,
    DATA_MIRROR,
    PILOT,
    PILOT_MIRROR,
    AllocationPlan,
    SubcarrierFrame,
)

SCHEMES = ("standard", "scm", "pascs")
CIR_CAP_DB = 200.0
PILOT_SEED = 0x4A5B


def _leakage(x: np.ndarray, n: int) -> np.ndarray:
    """sin(pi x) / (n sin(pi x / n)) * exp(j pi (n-1) x / n), limits at x = 0 mod n."""
    x = np.asarray(x, dtype=float)
    phase = np.exp(1j * np.pi * (n - 1) * x / n)
    on_grid = np.isclose(x, np.round(x), rtol=0, atol=1e-12)
    hit = on_grid & (np.mod(np.round(x), n) == 0)
    den = n * np.sin(np.pi * x / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.where(on_grid, 0.0, np.sin(np.pi * x) / den)
    # at x = q n the ratio tends to (-1)^(q (n - 1))
    mag = np.where(hit, np.where(np.mod(np.round(x) / n * (n - 1), 2) == 0, 1.0, -1.0), mag)
    return mag * phase


@dataclass(frozen=True, eq=False)
class IciCoefficients:
    """Leakage from a source bin into the bin ``m`` places below it.

    ``Y[j] = sum_k X[k] * w(k - j)`` after a CFO of ``epsilon`` subcarrier
    spacings. ``w`` holds offsets ``-N+1 .. N-1`` in ``offsets`` order.
    """

    n_fft: int
    epsilon: float
    w: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.n_fft + 1, self.n_fft)

    def __call__(self, m) -> np.ndarray:
        """Coefficient at (circular) offset ``m``."""
        m = np.mod(np.asarray(m), self.n_fft)
        return self.w[m + self.n_fft - 1]


def ici_coefficients(n_fft: int, epsilon: float) -> IciCoefficients:
    if n_fft < 1 or n_fft & (n_fft - 1):
        raise ValueError(f"n_fft {n_fft} is not a power of two")
    if abs(epsilon) >= 1:
        raise ValueError("|epsilon| must be below one subcarrier spacing")
    m = np.arange(-n_fft + 1, n_fft)
    return IciCoefficients(n_fft, float(epsilon), _leakage(m + epsilon, n_fft))


@dataclass(frozen=True)
class CancellationScheme:
    kind: str
    n_pilot: int = 0

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ValueError(f"unknown scheme {self.kind!r}")
        if self.kind == "pascs" and self.n_pilot < 2:
            raise ValueError("pascs needs at least two pilots")
        if self.kind != "pascs" and self.n_pilot:
            raise ValueError(f"{self.kind} carries no pilots")

    @property
    def mirrored(self) -> bool:
        return self.kind != "standard"


def scheme_for(kind: str, plan: AllocationPlan) -> CancellationScheme:
    return CancellationScheme(kind, len(plan.primary_pilot) if kind == "pascs" else 0)


def pilot_sequence(n: int) -> np.ndarray:
    """Fixed unit-modulus QPSK pilot values, the same in every symbol."""
    return map_bits(prbs(2 * n, PILOT_SEED), constellation(4))


def insert_pilots(data_syms, pilot_syms, plan: AllocationPlan) -> SubcarrierFrame:
    """Place independent values on the primary bins, reserving mirrors."""
    data_syms = np.asarray(data_syms, dtype=complex)
    pilot_syms = np.asarray(pilot_syms, dtype=complex)
    nd, npl = len(plan.primary_data), len(plan.primary_pilot)
    if data_syms.shape[-1] != nd or pilot_syms.shape[-1] != npl:
        raise ValueError(
            f"expected {nd} data / {npl} pilots, got {data_syms.shape[-1]} / {pilot_syms.shape[-1]}"
        )
    lead = np.broadcast_shapes(data_syms.shape[:-1], pilot_syms.shape[:-1])
    values = np.zeros(lead + (plan.n_fft,), dtype=complex)
    values[..., plan.primary_data] = data_syms
    values[..., plan.primary_pilot] = pilot_syms
    return SubcarrierFrame(values, plan.roles(mirrored=True))


def modulate_cancelling(frame: SubcarrierFrame, scheme: CancellationScheme) -> SubcarrierFrame:
    """Copy each independent value, negated, onto its mirror bin."""
    if not scheme.mirrored:
        return SubcarrierFrame(frame.values.copy(), frame.roles.copy())
    n = frame.n_fft
    src = np.flatnonzero((frame.roles == DATA) | (frame.roles == PILOT))
    dst = n - 1 - src
    clash = np.isin(frame.roles[dst], (DATA, PILOT)) | np.isin(dst, src)
    if clash.any():
        raise ValueError(f"mirror bins {dst[clash].tolist()} already carry independent values")
    values = frame.values.copy()
    values[..., dst] = -values[..., src]
    roles = frame.roles.copy()
    roles[dst] = np.where(frame.roles[src] == DATA, DATA_MIRROR, PILOT_MIRROR)
    return SubcarrierFrame(values, roles)


def demodulate_cancelling(rx, scheme: CancellationScheme, indices=None) -> np.ndarray:
    """Decision variables for the carried bins.

    ``rx`` is a post-FFT :class:`SubcarrierFrame` or a plain ``(..., N)``
    array. ``indices`` defaults to the frame's DATA bins.
    """
    if isinstance(rx, SubcarrierFrame):
        values = rx.values
        if indices is None:
            indices = np.flatnonzero(rx.roles == DATA)
    else:
        values = np.asarray(rx)
        if indices is None:
            raise ValueError("indices are required when rx is a bare array")
    indices = np.asarray(indices)
    if not scheme.mirrored:
        return values[..., indices]
    n = values.shape[-1]
    return 0.5 * (values[..., indices] - values[..., n - 1 - indices])


def _transfer(n_fft: int, epsilon: float, sources: np.ndarray, decisions: np.ndarray, mirrored: bool):
    """Matrix C[s, d]: contribution of unit source s to decision d."""
    w = ici_coefficients(n_fft, epsilon)
    bins = np.arange(n_fft)

    def leak(src_bins):
        # received bin b gets w(src - b)
        return w(src_bins[:, None] - bins[None, :])

    rx = leak(sources)
    if mirrored:
        rx = rx - leak(n_fft - 1 - sources)
        return 0.5 * (rx[:, decisions] - rx[:, n_fft - 1 - decisions])
    return rx[:, decisions]


@dataclass(frozen=True)
class CirBreakdown:
    signal_power: float
    ici_data_power: float
    ici_pilot_power: float
    cir_db: float


def _cir_db(signal: float, interference: float) -> float:
    if interference <= signal * 10 ** (-CIR_CAP_DB / 10):
        return CIR_CAP_DB
    return float(10 * np.log10(signal / interference))


def theoretical_cir(n_fft: int, epsilon: float, scheme: CancellationScheme, allocation: AllocationPlan) -> CirBreakdown:
    """Signal and ICI power per decision for unit-power independent symbols.

    Powers are averaged over the carried data bins. Pilots are counted as
    independent unit-power interferers (their values are a pseudo-random
    QPSK sequence).
    """
    if abs(epsilon) >= 0.5:
        raise ValueError("|epsilon| must be below 0.5")
    if n_fft != allocation.n_fft:
        raise ValueError("allocation was built for a different FFT size")
    if scheme.mirrored:
        data = allocation.primary_data
        pilots = allocation.primary_pilot if scheme.kind == "pascs" else np.empty(0, int)
    else:
        data = allocation.data_indices
        pilots = np.empty(0, int)
    sources = np.concatenate([data, pilots]).astype(int)
    C = _transfer(n_fft, epsilon, sources, data, scheme.mirrored)
    power = np.abs(C) ** 2
    nd = len(data)
    desired = power[np.arange(nd), np.arange(nd)]
    data_part = power[:nd].sum(axis=0) - desired
    pilot_part = power[nd:].sum(axis=0)
    s, a, b = float(desired.mean()), float(data_part.mean()), float(pilot_part.mean())
    return CirBreakdown(s, a, b, _cir_db(s, a + b))


@dataclass(frozen=True)
class CombinedCoefficients:
    """ICI seen by one decision bin, per interfering primary bin.

    ``raw`` is plain leakage, ``modulated`` the leakage of a +1/-1 mirror
    pair into the decision bin, ``demodulated`` what survives the mirror
    differencing at the receiver.
    """

    decision_bin: int
    offsets: np.ndarray
    raw: np.ndarray
    modulated: np.ndarray
    demodulated: np.ndarray


def combined_coefficients(n_fft: int, epsilon: float, allocation: AllocationPlan, decision_bin: int | None = None) -> CombinedCoefficients:
    primary = np.sort(np.concatenate([allocation.primary_data, allocation.primary_pilot]))
    if decision_bin is None:
        decision_bin = int(primary[np.argmin(np.abs(primary - allocation.n_used // 4))])
    if decision_bin not in primary:
        raise ValueError(f"bin {decision_bin} is not a primary bin")
    others = primary[primary != decision_bin]
    w = ici_coefficients(n_fft, epsilon)
    raw = w(others - decision_bin)
    modulated = raw - w(n_fft - 1 - others - decision_bin)
    demod = _transfer(n_fft, epsilon, others, np.array([decision_bin]), mirrored=True)[:, 0]
    return CombinedCoefficients(decision_bin, others - decision_bin, raw, modulated, demod)

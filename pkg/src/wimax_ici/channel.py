"""SUI-1..6 tapped-delay-line fading channels plus flat references.

Each tap gain is

    sqrt(Fnorm * P) * (sqrt(K / (K + 1)) + sqrt(1 / (K + 1)) * g)

with ``g`` a unit-variance circular Gaussian process (rounded Doppler
spectrum in continuous mode, one independent draw per block in block
mode) correlated across transmit antennas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import i0e

from .ofdm import ifft


@dataclass(frozen=True)
class SuiProfile:
    name: str
    tap_power_db: tuple[float, ...]
    k_factor: tuple[float, ...]
    tap_delay_us: tuple[float, ...]
    max_doppler_hz: tuple[float, ...]
    antenna_corr: float
    gain_norm_db: float
    terrain: str | None = None

    def __post_init__(self):
        n = len(self.tap_power_db)
        if not (len(self.k_factor) == len(self.tap_delay_us) == len(self.max_doppler_hz) == n):
            raise ValueError("per-tap fields must have equal length")
        if self.tap_delay_us[0] != 0 or np.any(np.diff(self.tap_delay_us) <= 0):
            raise ValueError("delays must start at 0 and increase")
        if min(self.k_factor) < 0 or self.tap_power_db[0] != 0 or max(self.tap_power_db) > 0:
            raise ValueError("invalid K-factor or tap power")
        if not 0 <= self.antenna_corr <= 1:
            raise ValueError("antenna correlation must lie in [0, 1]")

    @property
    def n_taps(self) -> int:
        return len(self.tap_power_db)

    def mean_tap_power(self) -> np.ndarray:
        """Linear tap powers including the gain normalization."""
        return 10 ** ((np.asarray(self.tap_power_db) + self.gain_norm_db) / 10)

    def max_delay_s(self) -> float:
        return self.tap_delay_us[-1] * 1e-6


SUI_PROFILES = {
    1: SuiProfile("sui1", (0, -15, -20), (4, 0, 0), (0.0, 0.4, 0.9), (0.4, 0.3, 0.5), 0.7, -0.1771, "C"),
    2: SuiProfile("sui2", (0, -12, -15), (2, 0, 0), (0.0, 0.4, 1.1), (0.2, 0.15, 0.25), 0.5, -0.3930, "C"),
    3: SuiProfile("sui3", (0, -5, -10), (1, 0, 0), (0.0, 0.4, 0.9), (0.4, 0.3, 0.5), 0.4, -1.5113, "B"),
    4: SuiProfile("sui4", (0, -4, -8), (0, 0, 0), (0.0, 0.5, 4.0), (0.2, 0.15, 0.25), 0.3, -1.9218, "B"),
    5: SuiProfile("sui5", (0, -5, -10), (0, 0, 0), (0.0, 4.0, 10.0), (2, 1.5, 2.5), 0.3, -1.5113, "A"),
    6: SuiProfile("sui6", (0, -10, -14), (0, 0, 0), (0.0, 14.0, 20.0), (0.4, 0.3, 0.5), 0.3, -0.5683, "A"),
}

TERRAIN = {
    "A": "Hilly terrain with moderate to heavy tree density",
    "B": "Hilly terrain with light tree density or flat terrain with moderate to heavy tree density",
    "C": "Mostly flat terrain with light tree densities",
}

FLAT_RAYLEIGH = SuiProfile("rayleigh", (0,), (0,), (0.0,), (0.0,), 0.0, 0.0)


def sui_profile(model: int) -> SuiProfile:
    if model not in SUI_PROFILES:
        raise ValueError(f"SUI model must be 1..6, got {model}")
    return SUI_PROFILES[model]


@dataclass
class ChannelRealization:
    """Tap gains held constant over ``update_len`` samples each.

    ``tap_gains`` has shape ``(n_tx, n_taps, n_updates)``.
    """

    tap_gains: np.ndarray
    tap_sample_delays: np.ndarray
    update_len: int
    sample_rate: float
    seed: object = None
    profile: SuiProfile | None = field(default=None, repr=False)

    @property
    def n_tx(self) -> int:
        return self.tap_gains.shape[0]

    @property
    def covered_samples(self) -> int:
        return self.tap_gains.shape[-1] * self.update_len

    @property
    def max_delay(self) -> int:
        return int(self.tap_sample_delays.max())

    def frequency_response(self, n_fft: int) -> np.ndarray:
        """(n_tx, n_updates, n_fft) response at FFT bin k, natural order."""
        k = np.arange(n_fft)
        steer = np.exp(-2j * np.pi * np.outer(self.tap_sample_delays, k) / n_fft)
        return np.einsum("atu,tk->auk", self.tap_gains, steer)


def rounded_doppler_psd(f0) -> np.ndarray:
    """Rounded spectrum 1 - 1.72 f0^2 + 0.785 f0^4 on |f0| <= 1, else 0."""
    f0 = np.abs(np.asarray(f0, dtype=float))
    return np.where(f0 <= 1, 1 - 1.72 * f0**2 + 0.785 * f0**4, 0.0)


def _doppler_process(rng: np.random.Generator, n: int, rate: float, fm: float, count: int) -> np.ndarray:
    """``count`` independent unit-variance Doppler-shaped sequences of length n."""
    if fm <= 0:
        return np.repeat(_cn(rng, (count, 1)), n, axis=1)
    m = 1 << max(6, math.ceil(math.log2(max(n, 16 * rate / fm))))
    f = np.fft.fftfreq(m, d=1 / rate)
    mask = np.sqrt(rounded_doppler_psd(f / fm))
    mask *= m / np.sqrt(np.sum(mask**2))
    x = ifft(_cn(rng, (count, m)) * mask)
    return x[:, :n]


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def realize_channel(
    profile: SuiProfile,
    n_tx: int,
    duration: int,
    sample_rate: float,
    update_mode: str = "block",
    seed=None,
    *,
    block_len: int | None = None,
    channel_rate: float | None = None,
) -> ChannelRealization:
    """Draw tap gains covering ``duration`` samples.

    ``block`` mode draws independent gains every ``block_len`` samples
    (default: one draw for the whole duration). ``continuous`` mode
    samples the Doppler-shaped process at ``channel_rate`` Hz (default
    16x the largest Doppler) and holds each value in between.
    """
    if sample_rate <= 0 or duration <= 0:
        raise ValueError("sample_rate and duration must be positive")
    delays = np.rint(np.asarray(profile.tap_delay_us) * 1e-6 * sample_rate).astype(int)
    if len(np.unique(delays)) != len(delays):
        raise ValueError(
            f"{profile.name}: taps collide at {sample_rate / 1e6:g} MHz sampling, delays {delays.tolist()}"
        )
    rng = np.random.default_rng(seed)
    n_taps = profile.n_taps

    if update_mode == "block":
        update_len = int(block_len or duration)
        n_upd = -(-duration // update_len)
        diffuse = _cn(rng, (n_tx, n_taps, n_upd))
    elif update_mode == "continuous":
        fm_max = max(profile.max_doppler_hz)
        rate = channel_rate or (16 * fm_max if fm_max > 0 else sample_rate)
        update_len = max(1, int(round(sample_rate / rate)))
        n_upd = -(-duration // update_len)
        eff_rate = sample_rate / update_len
        diffuse = np.empty((n_tx, n_taps, n_upd), dtype=complex)
        for t, fm in enumerate(profile.max_doppler_hz):
            diffuse[:, t, :] = _doppler_process(rng, n_upd, eff_rate, fm, n_tx)
    else:
        raise ValueError(f"unknown update_mode {update_mode!r}")

    rho = profile.antenna_corr
    for a in range(1, n_tx):
        diffuse[a] = rho * diffuse[0] + math.sqrt(1 - rho**2) * diffuse[a]

    k = np.asarray(profile.k_factor, dtype=float)[:, None]
    finite = np.where(np.isinf(k), 0.0, k)
    los = np.where(np.isinf(k), 1.0, np.sqrt(finite / (finite + 1)))
    nlos = np.sqrt(1 / (finite + 1)) * ~np.isinf(k)
    amp = np.sqrt(profile.mean_tap_power())[:, None]
    gains = amp * (los + nlos * diffuse)
    return ChannelRealization(gains, delays, update_len, sample_rate, seed, profile)


def static_channel(n_tx: int, duration: int, sample_rate: float) -> ChannelRealization:
    """Unit gain, zero delay on every antenna (ideal / AWGN links)."""
    return ChannelRealization(np.ones((n_tx, 1, 1), dtype=complex), np.zeros(1, dtype=int), duration, sample_rate)


def apply_channel(x, ch: ChannelRealization) -> np.ndarray:
    """Time-varying tapped delay line summed over transmit antennas.

    ``x`` has shape ``(n_tx, L)``; returns ``y[n] = sum_a sum_k
    g[a, k, n // update_len] * x[a, n - d_k]``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    n_tx, L = x.shape
    if n_tx != ch.n_tx:
        raise ValueError(f"signal has {n_tx} antennas, realization {ch.n_tx}")
    if L > ch.covered_samples:
        raise ValueError(f"realization covers {ch.covered_samples} samples, signal has {L}")
    U = ch.update_len
    n_upd = -(-L // U)
    padded = n_upd * U
    y = np.zeros(padded, dtype=complex)
    for t, d in enumerate(ch.tap_sample_delays):
        shifted = np.zeros((n_tx, padded), dtype=complex)
        shifted[:, d:L] = x[:, : L - d]
        g = ch.tap_gains[:, t, :n_upd, None]
        y += (shifted.reshape(n_tx, n_upd, U) * g).sum(axis=0).reshape(-1)
    return y[:L]


def add_awgn(x, snr_db: float, signal_power_ref: float, seed=None) -> np.ndarray:
    """Add circular Gaussian noise of variance signal_power_ref / 10^(snr_db/10)."""
    if signal_power_ref <= 0:
        raise ValueError("signal_power_ref must be positive")
    x = np.asarray(x, dtype=complex)
    if np.isinf(snr_db) and snr_db > 0:
        return x.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    var = signal_power_ref / 10 ** (snr_db / 10)
    return x + np.sqrt(var) * _cn(rng, x.shape)


def rician_pdf(r, sigma_sq: float, a_los: float) -> np.ndarray:
    """Envelope density r/s^2 exp(-(r^2 + A^2) / 2s^2) I0(rA/s^2).

    Reduces to the Rayleigh density when ``a_los == 0``.
    """
    r = np.asarray(r, dtype=float)
    if sigma_sq <= 0 or a_los < 0 or np.any(r < 0):
        raise ValueError("need r >= 0, sigma_sq > 0, a_los >= 0")
    z = r * a_los / sigma_sq
    # i0e(z) = exp(-z) I0(z) keeps the product finite for large z
    return r / sigma_sq * np.exp(-((r - a_los) ** 2) / (2 * sigma_sq)) * i0e(z)


def estimate_k_factor(gains) -> float:
    """Moment-based Rician K estimate from complex tap samples."""
    p = np.abs(np.asarray(gains)) ** 2
    gamma = p.var() / p.mean() ** 2
    if gamma >= 1:
        return 0.0
    root = math.sqrt(1 - gamma)
    return root / (1 - root)

"""End-to-end 2x1 link, Monte Carlo BER/CIR measurement and sweeps.

Transmit chain per frame::

    bits -> randomize -> conv_encode -> interleave (per OFDM symbol) -> map
         -> pilots + mirror-pair modulation -> Alamouti over symbol pairs
         -> IFFT + CP per antenna -> SUI channel -> CFO -> AWGN

and the reverse at the single-antenna receiver. The receiver knows the
frequency response of each frame and the common phase rotation of the
CFO that is left after (optional) pilot-based correction, so the only
CFO impairment it suffers is inter-carrier interference.

SNR is the per-subcarrier Es/N0: unit received energy per loaded bin
over the noise variance of one FFT output bin.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import bits as fec
from .cfo_est import CfoEstimationError, estimate_cfo
from .channel import (
    FLAT_RAYLEIGH,
    ChannelRealization,
    add_awgn,
    apply_channel,
    realize_channel,
    static_channel,
    sui_profile,
)
from .ici import (
    _cir_db,
    _leakage,
    demodulate_cancelling,
    insert_pilots,
    modulate_cancelling,
    pilot_sequence,
    scheme_for,
)
from .mapping import MODULATIONS, constellation, map_bits
from .ofdm import PILOT, PILOT_MIRROR, add_cp, apply_cfo, assemble_symbol, fft, ifft, strip_cp, wimax_allocation
from .stbc import ChannelGains, stbc_combine, stbc_encode, stbc_ml_index

log = logging.getLogger(__name__)

CHANNELS = ("ideal", "awgn", "rayleigh") + tuple(f"sui{i}" for i in range(1, 7))
CP_FRACTIONS = (Fraction(1, 4), Fraction(1, 8), Fraction(1, 16), Fraction(1, 32))
INTERLEAVER_COLS = 16
CSV_COLUMNS = (
    "scheme", "modulation", "channel", "epsilon", "snr_db", "bit_errors", "bits_total",
    "ber", "measured_cir_db", "mean_cfo_est", "rms_cfo_err", "seed",
)


class ConfigError(ValueError):
    """Invalid link configuration (CLI exit code 2)."""


class NumericalError(RuntimeError):
    """A run produced non-finite results (CLI exit code 3)."""


@dataclass(frozen=True)
class LinkConfig:
    scheme: str = "pascs"
    modulation: str = "qam16"
    channel: str = "sui1"
    epsilon: float = 0.2
    cfo_correction: bool = True
    snr_grid_db: tuple[float, ...] = tuple(range(0, 22, 2))
    n_frames: int = 100
    cp_fraction: Fraction = Fraction(1, 4)
    sample_rate_hz: float = 4e6
    n_fft: int = 512
    n_used: int = 256
    symbols_per_frame: int = 48
    carrier_hz: float = 5e9  # metadata only
    seed: int = 42
    chunk_frames: int = 50

    def __post_init__(self):
        object.__setattr__(self, "cp_fraction", Fraction(self.cp_fraction).limit_denominator(64))
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        self.validate()

    def validate(self):
        if self.scheme not in ("standard", "scm", "pascs"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.modulation not in MODULATIONS:
            raise ConfigError(f"unknown modulation {self.modulation!r}")
        if self.channel not in CHANNELS:
            raise ConfigError(f"unknown channel {self.channel!r}")
        if self.cp_fraction not in CP_FRACTIONS:
            raise ConfigError(f"cp_fraction must be one of 1/4, 1/8, 1/16, 1/32, got {self.cp_fraction}")
        if self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")
        if self.symbols_per_frame < 2 or self.symbols_per_frame % 2:
            raise ConfigError("symbols_per_frame must be a positive even number (Alamouti pairs)")
        if not abs(self.epsilon) < 0.5:
            raise ConfigError("|epsilon| must be below 0.5")
        if not self.snr_grid_db:
            raise ConfigError("snr grid is empty")
        if self.channel.startswith("sui"):
            prof = sui_profile(int(self.channel[3:]))
            delay = int(np.rint(prof.max_delay_s() * self.sample_rate_hz))
            if delay > self.cp_len:
                raise ConfigError(
                    f"{prof.name.upper()} spans {delay} samples at {self.sample_rate_hz / 1e6:g} MHz "
                    f"but the cyclic prefix is only {self.cp_len}"
                )

    @property
    def cp_len(self) -> int:
        return int(self.n_fft * self.cp_fraction)

    @property
    def symbol_len(self) -> int:
        return self.n_fft + self.cp_len

    @property
    def frame_len(self) -> int:
        return self.symbols_per_frame * self.symbol_len


@dataclass
class PointResult:
    snr_db: float
    epsilon: float
    bit_errors: int
    bits_total: int
    measured_cir_db: float = float("nan")
    mean_cfo_est: float = float("nan")
    rms_cfo_err: float = float("nan")
    wall_seconds: float = 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total


@dataclass
class RunResult:
    config: LinkConfig
    points: list[PointResult] = field(default_factory=list)
    payload_bits_per_frame: int = 0

    @property
    def throughput_bps(self) -> float:
        """Payload rate at 200 frames per second."""
        return self.payload_bits_per_frame * 200.0

    def ber(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])

    def rows(self):
        c = self.config
        for p in self.points:
            yield {
                "scheme": c.scheme, "modulation": c.modulation, "channel": c.channel,
                "epsilon": p.epsilon, "snr_db": p.snr_db, "bit_errors": p.bit_errors,
                "bits_total": p.bits_total, "ber": p.ber, "measured_cir_db": p.measured_cir_db,
                "mean_cfo_est": p.mean_cfo_est, "rms_cfo_err": p.rms_cfo_err, "seed": c.seed,
            }


def write_csv(results, stream) -> None:
    """Write one row per (run, point) in the fixed column order."""
    if isinstance(results, RunResult):
        results = [results]
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for res in results:
        for row in res.rows():
            w.writerow([_fmt(row[k]) for k in CSV_COLUMNS])


def to_csv(results) -> str:
    buf = io.StringIO()
    write_csv(results, buf)
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _snr_key(snr_db: float) -> int:
    return int(round(snr_db * 1000)) & 0xFFFFFFFF


def _streams(seed: int, snr_db: float, frame: int):
    """Independent (bits, channel, noise) generators for one frame."""
    ss = np.random.SeedSequence(seed, spawn_key=(_snr_key(snr_db), frame))
    return [np.random.default_rng(s) for s in ss.spawn(3)]


class Link:
    """Precomputed geometry for one configuration."""

    def __init__(self, cfg: LinkConfig):
        self.cfg = cfg
        self.plan = wimax_allocation(cfg.n_fft, cfg.n_used)
        self.scheme = scheme_for(cfg.scheme, self.plan)
        self.const = constellation(cfg.modulation)
        self.carried = self.plan.primary_data if self.scheme.mirrored else self.plan.data_indices
        self.n_cbps = len(self.carried) * self.const.bits_per_symbol
        if self.n_cbps % INTERLEAVER_COLS:
            raise ConfigError("coded bits per symbol must be a multiple of 16")
        self.n_coded = self.n_cbps * cfg.symbols_per_frame
        self.n_info = self.n_coded // 2 - fec.WIMAX_CODEC.tail_bits
        self.pilots = pilot_sequence(len(self.plan.primary_pilot)) if cfg.scheme == "pascs" else None
        roles = self.plan.roles(mirrored=self.scheme.mirrored)
        self.pilot_bins = np.flatnonzero((roles == PILOT) | (roles == PILOT_MIRROR)) if self.pilots is not None else np.empty(0, int)

    # -- transmitter -------------------------------------------------------
    def encode(self, payload: np.ndarray) -> np.ndarray:
        """Payload bits (F, n_info) -> constellation symbols (F, S, n_carried)."""
        cfg = self.cfg
        coded = fec.conv_encode(fec.randomize(payload))
        coded = coded.reshape(len(payload), cfg.symbols_per_frame, self.n_cbps)
        return map_bits(fec.interleave(coded, self.n_cbps // INTERLEAVER_COLS, INTERLEAVER_COLS), self.const)

    def subcarriers(self, syms: np.ndarray) -> np.ndarray:
        """Loaded bins (F, S, N) after pilot insertion and cancelling modulation."""
        if not self.scheme.mirrored:
            return assemble_symbol(syms, np.zeros(self.plan.n_pilot), self.plan).values
        pil = self.pilots if self.pilots is not None else np.zeros(len(self.plan.primary_pilot))
        return modulate_cancelling(insert_pilots(syms, pil, self.plan), self.scheme).values

    def antenna_grid(self, X: np.ndarray) -> np.ndarray:
        """Alamouti over consecutive symbol pairs -> (F, 2, S, N), 1/sqrt(2) per antenna.

        Pilot bins skip the space-time code and go out unchanged from both
        antennas so they repeat in every symbol.
        """
        pair = stbc_encode(X[:, 0::2], X[:, 1::2])
        out = np.empty((X.shape[0], 2) + X.shape[1:], dtype=complex)
        out[:, 0, 0::2], out[:, 1, 0::2] = pair.slot1_tx
        out[:, 0, 1::2], out[:, 1, 1::2] = pair.slot2_tx
        if len(self.pilot_bins):
            out[..., self.pilot_bins] = X[:, None][..., self.pilot_bins]
        return out / np.sqrt(2)

    def modulate(self, grid: np.ndarray) -> np.ndarray:
        """(F, 2, S, N) -> time samples (F, 2, frame_len)."""
        t = add_cp(ifft(grid), self.cfg.cp_len)
        return t.reshape(t.shape[:2] + (-1,))

    # -- receiver ----------------------------------------------------------
    def demodulate(self, rx: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        sym = rx.reshape(rx.shape[:-1] + (cfg.symbols_per_frame, cfg.symbol_len))
        return fft(strip_cp(sym, cfg.cp_len))

    def window_starts(self) -> np.ndarray:
        cfg = self.cfg
        return np.arange(cfg.symbols_per_frame) * cfg.symbol_len + cfg.cp_len

    def common_phase(self, residual: np.ndarray) -> np.ndarray:
        """(F, S) desired-bin gain of each FFT window for a residual CFO per frame."""
        N = self.cfg.n_fft
        c0 = _leakage(residual, N)
        return c0[:, None] * np.exp(2j * np.pi * residual[:, None] * self.window_starts()[None, :] / N)

    @cached_property
    def _pilot_dft(self) -> np.ndarray:
        n = np.arange(self.cfg.n_fft)
        return np.exp(-2j * np.pi * np.outer(n, self.pilot_bins) / self.cfg.n_fft)

    def pilot_bins_rx(self, rx: np.ndarray) -> np.ndarray:
        """Post-FFT pilot bins (F, S, n_pilot) without transforming every bin."""
        cfg = self.cfg
        sym = rx.reshape(rx.shape[:-1] + (cfg.symbols_per_frame, cfg.symbol_len))
        return strip_cp(sym, cfg.cp_len) @ self._pilot_dft

    def estimate(self, P: np.ndarray) -> np.ndarray:
        """Per-frame CFO estimate from the pilots of all consecutive symbol pairs."""
        out = np.zeros(len(P))
        for f in range(len(P)):
            try:
                out[f] = estimate_cfo(P[f, :-1], P[f, 1:], self.cfg.symbol_len, self.cfg.n_fft).epsilon_hat
            except CfoEstimationError:
                log.debug("frame %d: pilot correlation vanished, keeping 0", f)
        return out

    def detect(self, Y: np.ndarray, H: np.ndarray) -> np.ndarray:
        """Equalized post-FFT bins (F, S, N) + responses (F, 2, N) -> coded bits (F, n_coded)."""
        h = ChannelGains(H[:, 0, None, :] / np.sqrt(2), H[:, 1, None, :] / np.sqrt(2))
        s1, s2 = stbc_combine(Y[:, 0::2], Y[:, 1::2], h)
        comb = np.empty_like(Y)
        comb[:, 0::2], comb[:, 1::2] = s1, s2
        alpha = h.alpha_sq[:, 0]
        d = demodulate_cancelling(comb, self.scheme, self.carried)
        a = alpha[..., self.carried]
        if self.scheme.mirrored:
            a = 0.5 * (a + alpha[..., self.cfg.n_fft - 1 - self.carried])
        idx = stbc_ml_index(d, a[:, None, :], self.const)
        hard = self.const.labels()[idx].reshape(len(Y), self.cfg.symbols_per_frame, self.n_cbps)
        return fec.deinterleave(hard, self.n_cbps // INTERLEAVER_COLS, INTERLEAVER_COLS).reshape(len(Y), -1)

    # -- channel -----------------------------------------------------------
    def realize(self, rng: np.random.Generator) -> ChannelRealization:
        cfg = self.cfg
        if cfg.channel in ("ideal", "awgn"):
            return static_channel(2, cfg.frame_len, cfg.sample_rate_hz)
        prof = FLAT_RAYLEIGH if cfg.channel == "rayleigh" else sui_profile(int(cfg.channel[3:]))
        return realize_channel(prof, 2, cfg.frame_len, cfg.sample_rate_hz, "block", rng)

    @cached_property
    def payload_bits(self) -> int:
        return self.n_info


def _run_chunk(link: Link, snr_db: float, frames: range):
    cfg = link.cfg
    N = cfg.n_fft
    streams = [_streams(cfg.seed, snr_db, f) for f in frames]
    payload = np.stack([s[0].integers(0, 2, link.n_info, dtype=np.uint8) for s in streams])
    chans = [link.realize(s[1]) for s in streams]

    tx = link.modulate(link.antenna_grid(link.subcarriers(link.encode(payload))))
    rx = np.stack([apply_channel(tx[i], ch) for i, ch in enumerate(chans)])
    rx = apply_cfo(rx, cfg.epsilon, N)
    noisy = cfg.channel != "ideal"
    if noisy:
        rx = np.stack([add_awgn(rx[i], snr_db, 1.0 / N, s[2]) for i, s in enumerate(streams)])

    est = None
    residual = np.full(len(frames), cfg.epsilon)
    if link.pilots is not None:
        est = link.estimate(link.pilot_bins_rx(rx))
        if cfg.cfo_correction:
            rx = rx * np.exp(-2j * np.pi * est[:, None] * np.arange(rx.shape[-1]) / N)
            residual = cfg.epsilon - est
    Y = link.demodulate(rx) / link.common_phase(residual)[..., None]

    H = np.stack([ch.frequency_response(N)[:, 0, :] for ch in chans])
    coded_hat = link.detect(Y, H)
    decoded = fec.randomize(fec.viterbi_decode(coded_hat))
    errors, total = fec.count_bit_errors(payload, decoded)
    return errors, total, est


def run_link(cfg: LinkConfig) -> RunResult:
    """Monte Carlo BER over ``cfg.snr_grid_db``; deterministic given the seed."""
    link = Link(cfg)
    result = RunResult(cfg, payload_bits_per_frame=link.n_info)
    cir = measure_cir(cfg, [cfg.epsilon])[0]
    for snr in cfg.snr_grid_db:
        t0 = time.perf_counter()
        errors = total = 0
        ests = []
        for start in range(0, cfg.n_frames, cfg.chunk_frames):
            frames = range(start, min(start + cfg.chunk_frames, cfg.n_frames))
            e, t, est = _run_chunk(link, snr, frames)
            errors += e
            total += t
            if est is not None:
                ests.append(est)
        point = PointResult(snr, cfg.epsilon, errors, total, measured_cir_db=cir)
        if ests:
            est = np.concatenate(ests)
            point.mean_cfo_est = float(est.mean())
            point.rms_cfo_err = float(np.sqrt(np.mean((est - cfg.epsilon) ** 2)))
        point.wall_seconds = time.perf_counter() - t0
        if not np.isfinite(point.ber):
            raise NumericalError(f"non-finite BER at {snr} dB")
        log.info("%s %s %s eps=%g snr=%g: ber=%.3e (%d/%d) in %.1fs", cfg.scheme, cfg.modulation,
                 cfg.channel, cfg.epsilon, snr, point.ber, errors, total, point.wall_seconds)
        result.points.append(point)
    return result


def measure_cir(cfg: LinkConfig, epsilon_grid, n_symbols: int = 960, seed: int | None = None) -> list[float]:
    """Noiseless single-antenna CIR of the configured scheme per CFO value.

    Random unit-power QPSK data (plus the fixed pilots for pascs) is sent
    over an ideal channel with the CFO phase running across symbols. The
    desired gain of each carried bin is found by correlating decisions
    with the known data; whatever is left over is interference.
    """
    link = Link(replace(cfg, channel="ideal", cfo_correction=False))
    N, S = cfg.n_fft, cfg.symbols_per_frame
    n_frames = -(-n_symbols // S)
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    qpsk = constellation(4)
    data = qpsk.points[rng.integers(0, 4, (n_frames, S, len(link.carried)))]
    X = link.subcarriers(data)
    tx = add_cp(ifft(X), cfg.cp_len).reshape(n_frames, -1)
    out = []
    for eps in epsilon_grid:
        if abs(eps) >= 0.5:
            raise ConfigError("|epsilon| must be below 0.5")
        Y = link.demodulate(apply_cfo(tx, eps, N))
        Y = Y * np.exp(-2j * np.pi * eps * link.window_starts() / N)[:, None]
        d = demodulate_cancelling(Y, link.scheme, link.carried)
        g = np.sum(d * np.conj(data), axis=(0, 1)) / np.sum(np.abs(data) ** 2, axis=(0, 1))
        wanted = g * data
        out.append(_cir_db(float(np.sum(np.abs(wanted) ** 2)), float(np.sum(np.abs(d - wanted) ** 2))))
    return out


def _row_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(0x5EE9, index)).generate_state(1, np.uint64)[0] >> 1)


def sweep(cfg_base: LinkConfig, axis: str, values) -> list[RunResult]:
    """One run per value along ``axis`` (snr, epsilon or scheme).

    SNR rows are seeded by their SNR value (see ``run_link``). Epsilon rows
    get seeds derived from the base seed and the row index. Scheme rows
    keep the base seed so they see the same payload, channel and noise
    draws and compare as matched pairs.
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep values are empty")
    if axis == "snr":
        return [run_link(replace(cfg_base, snr_grid_db=(v,))) for v in values]
    if axis == "epsilon":
        return [run_link(replace(cfg_base, epsilon=float(v), seed=_row_seed(cfg_base.seed, i)))
                for i, v in enumerate(values)]
    if axis == "scheme":
        return [run_link(replace(cfg_base, scheme=v)) for v in values]
    raise ConfigError(f"unknown sweep axis {axis!r}")


CONFIG_KEYS = {f.name for f in fields(LinkConfig)}

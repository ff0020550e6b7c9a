"""Pilot-based maximum-likelihood CFO estimation and correction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ofdm import apply_cfo


class CfoEstimationError(RuntimeError):
    """The pilot cross-correlation vanished, so no phase can be read off."""


@dataclass(frozen=True)
class CfoEstimate:
    epsilon_hat: float
    n_pilots_used: int


def estimate_cfo(pilots_sym_i, pilots_sym_i1, inter_symbol_samples: int, n_fft: int) -> CfoEstimate:
    """Fractional CFO from the rotation of repeated pilots.

    The received pilots of two FFT windows ``inter_symbol_samples`` apart
    differ by ``exp(j 2 pi eps inter_symbol_samples / n_fft)``, so

        eps_hat = angle(sum conj(P_i) * P_i1) / (2 pi) * n_fft / inter_symbol_samples

    Inputs may be any matching shape; all entries are pooled into one sum
    (e.g. every consecutive symbol pair of a frame).
    """
    a = np.asarray(pilots_sym_i, dtype=complex)
    b = np.asarray(pilots_sym_i1, dtype=complex)
    if a.shape != b.shape or a.size == 0:
        raise ValueError("pilot sequences must be nonempty and of equal shape")
    if inter_symbol_samples < n_fft:
        raise ValueError("FFT windows must be at least n_fft samples apart")
    acc = np.sum(np.conj(a) * b)
    if not np.isfinite(acc) or abs(acc) <= 1e-300:
        raise CfoEstimationError("pilot cross-correlation is zero")
    eps = np.arctan2(acc.imag, acc.real) / (2 * np.pi) * (n_fft / inter_symbol_samples)
    return CfoEstimate(float(eps), int(a.size))


def correct_cfo(x, estimate: CfoEstimate, n_fft: int, start: int = 0) -> np.ndarray:
    """Counter-rotate by the estimate; leaves a residual of eps - eps_hat."""
    return apply_cfo(x, -estimate.epsilon_hat, n_fft, start)

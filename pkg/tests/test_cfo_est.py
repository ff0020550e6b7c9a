import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wimax_ici.cfo_est import CfoEstimate, CfoEstimationError, correct_cfo, estimate_cfo
from wimax_ici.ofdm import add_cp, apply_cfo, fft, ifft, strip_cp, wimax_allocation
from wimax_ici.ici import pilot_sequence

PLAN = wimax_allocation()


def _pilot_only_rx(eps, cp, n_sym=2, gain=1.0):
    """Post-FFT pilot bins of n_sym repeated pilot-only symbols."""
    n = 512
    X = np.zeros(n, complex)
    p = pilot_sequence(30)
    X[PLAN.primary_pilot] = p
    X[PLAN.mirror(PLAN.primary_pilot)] = -p
    t = np.tile(add_cp(ifft(X), cp), n_sym) * gain
    t = apply_cfo(t, eps, n).reshape(n_sym, n + cp)
    return fft(strip_cp(t, cp))[:, PLAN.pilot_indices]


@pytest.mark.parametrize("eps", [0.0, 0.2, -0.37])
def test_noiseless_no_cp_exact(eps):
    P = _pilot_only_rx(eps, 0)
    assert estimate_cfo(P[0], P[1], 512, 512).epsilon_hat == pytest.approx(eps, abs=1e-9)


@pytest.mark.parametrize("cp", [16, 32, 64, 128])
def test_cp_correction_removes_bias(cp):
    P = _pilot_only_rx(0.2, cp)
    est = estimate_cfo(P[0], P[1], 512 + cp, 512)
    assert est.epsilon_hat == pytest.approx(0.2, abs=1e-9)
    assert est.n_pilots_used == 60
    # without the correction the estimate is scaled by (N + CP) / N
    naive = estimate_cfo(P[0], P[1], 512, 512).epsilon_hat
    assert naive == pytest.approx(0.2 * (512 + cp) / 512, abs=1e-9)


@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10), st.floats(-0.4, 0.4))
def test_common_scaling_invariant(g, eps):
    P = _pilot_only_rx(eps, 64)
    a = estimate_cfo(P[0], P[1], 576, 512).epsilon_hat
    b = estimate_cfo(g * P[0], g * P[1], 576, 512).epsilon_hat
    assert a == pytest.approx(b, abs=1e-9)
    assert abs(a) <= 0.5


def test_pooled_pairs():
    P = _pilot_only_rx(0.13, 64, n_sym=6)
    assert estimate_cfo(P[:-1], P[1:], 576, 512).epsilon_hat == pytest.approx(0.13, abs=1e-9)


def test_failure_is_distinct_from_zero():
    with pytest.raises(CfoEstimationError):
        estimate_cfo(np.zeros(4), np.ones(4), 512, 512)
    assert estimate_cfo(np.ones(4), np.ones(4), 512, 512).epsilon_hat == 0.0
    with pytest.raises(ValueError):
        estimate_cfo(np.ones(3), np.ones(4), 512, 512)
    with pytest.raises(ValueError):
        estimate_cfo(np.ones(3), np.ones(3), 100, 512)


def test_correction_leaves_residual(rng):
    x = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
    y = correct_cfo(apply_cfo(x, 0.3, 512), CfoEstimate(0.25, 60), 512)
    np.testing.assert_allclose(y, apply_cfo(x, 0.05, 512), atol=1e-12)
    np.testing.assert_array_equal(correct_cfo(x, CfoEstimate(0.0, 60), 512), x)


def test_pilot_phases_flat_after_correction(rng):
    # 20 dB per-bin SNR, correct with the estimate, residual phase across a symbol pair stays small
    cp = 128
    P = _pilot_only_rx(0.2, cp)
    noise = 0.1 * (rng.standard_normal(P.shape) + 1j * rng.standard_normal(P.shape)) / np.sqrt(2)
    est = estimate_cfo(P[0] + noise[0], P[1] + noise[1], 512 + cp, 512)
    rot = 2 * np.pi * (0.2 - est.epsilon_hat) * (512 + cp) / 512
    assert abs(rot) < 0.07

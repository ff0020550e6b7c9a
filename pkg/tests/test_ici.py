import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wimax_ici.ici import (
    CIR_CAP_DB,
    CancellationScheme,
    combined_coefficients,
    demodulate_cancelling,
    ici_coefficients,
    insert_pilots,
    modulate_cancelling,
    pilot_sequence,
    scheme_for,
    theoretical_cir,
)
from wimax_ici.ofdm import DATA, DATA_MIRROR, PILOT, SubcarrierFrame, apply_cfo, fft, ifft, wimax_allocation

PLAN = wimax_allocation()


def _tone_oracle(n, eps):
    """FFT bins of a unit-amplitude tone at bin 0 shifted by eps."""
    x = np.exp(2j * np.pi * eps * np.arange(n) / n) / n
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def test_zero_cfo_is_identity():
    w = ici_coefficients(64, 0.0)
    assert w(0) == pytest.approx(1)
    assert np.abs(w(np.arange(1, 64))).max() < 1e-12


@pytest.mark.parametrize("n", [8, 64, 512])
@pytest.mark.parametrize("eps", [0.05, 0.2, 0.4, -0.3])
def test_matches_shifted_tone(n, eps):
    w = ici_coefficients(n, eps)
    bins = _tone_oracle(n, eps)
    # bin j of a tone on bin 0 is w(0 - j)
    np.testing.assert_allclose(w(-np.arange(n)), bins, atol=1e-9)


@given(st.sampled_from([8, 16, 64, 512]), st.floats(-0.45, 0.45))
def test_power_conserved_and_peak_at_zero(n, eps):
    w = ici_coefficients(n, eps)
    mags = np.abs(w(np.arange(n)))
    assert np.sum(mags**2) == pytest.approx(1, abs=1e-9)
    assert mags.argmax() == 0


@given(st.floats(-0.45, 0.45), st.integers(-511, 511))
def test_magnitude_symmetry(eps, m):
    assert abs(ici_coefficients(512, eps)(m)) == pytest.approx(abs(ici_coefficients(512, -eps)(-m)), abs=1e-12)


def test_bad_inputs():
    with pytest.raises(ValueError):
        ici_coefficients(100, 0.1)
    with pytest.raises(ValueError):
        ici_coefficients(64, 1.0)
    with pytest.raises(ValueError):
        CancellationScheme("pascs", 1)
    with pytest.raises(ValueError):
        CancellationScheme("scm", 4)
    with pytest.raises(ValueError):
        CancellationScheme("other")


def test_mirror_of_first_bin():
    n = 512
    roles = np.zeros(n, np.int8)
    roles[0] = DATA
    values = np.zeros(n, complex)
    values[0] = 0.3 - 0.7j
    out = modulate_cancelling(SubcarrierFrame(values, roles), CancellationScheme("scm"))
    assert out.values[n - 1] == -values[0]
    assert out.roles[n - 1] == DATA_MIRROR


def test_standard_is_identity_and_energy_doubles(rng):
    data = rng.standard_normal(96) + 1j * rng.standard_normal(96)
    frame = insert_pilots(data, pilot_sequence(30), PLAN)
    same = modulate_cancelling(frame, CancellationScheme("standard"))
    np.testing.assert_array_equal(same.values, frame.values)
    mod = modulate_cancelling(frame, scheme_for("pascs", PLAN))
    assert np.sum(np.abs(mod.values) ** 2) == pytest.approx(2 * np.sum(np.abs(frame.values) ** 2))


def test_occupied_mirror_rejected():
    roles = np.zeros(16, np.int8)
    roles[[2, 13]] = DATA
    with pytest.raises(ValueError):
        modulate_cancelling(SubcarrierFrame(np.ones(16, complex), roles), CancellationScheme("scm"))


def test_pilot_insertion():
    frame = insert_pilots(np.zeros(96), np.ones(30), PLAN)
    assert np.sum(frame.roles == PILOT) == 30
    mod = modulate_cancelling(frame, scheme_for("pascs", PLAN))
    assert np.sum(np.abs(mod.values) ** 2) == pytest.approx(60)
    assert len(PLAN.pilot_indices) == 60
    with pytest.raises(ValueError):
        insert_pilots(np.zeros(95), np.ones(30), PLAN)
    p = pilot_sequence(30)
    np.testing.assert_allclose(np.abs(p), 1)
    np.testing.assert_array_equal(p, pilot_sequence(30))


def test_demodulation_exact_without_cfo(rng):
    data = rng.standard_normal(96) + 1j * rng.standard_normal(96)
    scheme = scheme_for("pascs", PLAN)
    frame = modulate_cancelling(insert_pilots(data, pilot_sequence(30), PLAN), scheme)
    rx = SubcarrierFrame(fft(ifft(frame.values)), frame.roles)
    np.testing.assert_allclose(demodulate_cancelling(rx, scheme), data, atol=1e-12)
    zero = SubcarrierFrame(np.zeros(512, complex), frame.roles)
    assert not demodulate_cancelling(zero, scheme).any()
    with pytest.raises(ValueError):
        demodulate_cancelling(rx.values, scheme)


def test_single_pair_residual_matches_expansion():
    n, eps, r = 512, 0.2, 40
    a = 0.6 + 0.8j
    values = np.zeros(n, complex)
    values[r], values[n - 1 - r] = a, -a
    y = fft(apply_cfo(ifft(values), eps, n))
    w = ici_coefficients(n, eps)
    d = demodulate_cancelling(y, CancellationScheme("scm"), [r])[0]
    # (Y[r] - Y[N-1-r]) / 2 with Y[j] = a w(r-j) - a w(N-1-r-j)
    m = n - 1 - 2 * r
    expected = a * (2 * w(0) - w(-m) - w(m)) / 2
    assert d == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("n", [8, 16])
@pytest.mark.parametrize("eps", [0.1, 0.35])
def test_demodulation_matches_time_domain_oracle(n, eps, rng):
    src = np.arange(1, n // 2 - 1)
    values = np.zeros(n, complex)
    values[src] = rng.standard_normal(len(src)) + 1j * rng.standard_normal(len(src))
    values[n - 1 - src] = -values[src]
    t = np.fft.ifft(values) * np.exp(2j * np.pi * eps * np.arange(n) / n)
    oracle = np.fft.fft(t)
    oracle = 0.5 * (oracle[src] - oracle[n - 1 - src])
    got = demodulate_cancelling(fft(apply_cfo(ifft(values), eps, n)), CancellationScheme("scm"), src)
    np.testing.assert_allclose(got, oracle, atol=1e-9)


@pytest.mark.parametrize("kind", ["standard", "scm", "pascs"])
def test_cir_capped_at_zero_cfo(kind):
    assert theoretical_cir(512, 0.0, scheme_for(kind, PLAN), PLAN).cir_db == CIR_CAP_DB


def test_cir_breakdown_consistent():
    b = theoretical_cir(512, 0.2, scheme_for("pascs", PLAN), PLAN)
    assert min(b.signal_power, b.ici_data_power, b.ici_pilot_power) > 0
    assert b.cir_db == pytest.approx(10 * np.log10(b.signal_power / (b.ici_data_power + b.ici_pilot_power)))
    assert theoretical_cir(512, 0.2, scheme_for("scm", PLAN), PLAN).ici_pilot_power == 0


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.15, 0.2, 0.25, 0.3])
def test_cancellation_beats_standard(eps):
    std = theoretical_cir(512, eps, scheme_for("standard", PLAN), PLAN).cir_db
    pascs = theoretical_cir(512, eps, scheme_for("pascs", PLAN), PLAN).cir_db
    scm = theoretical_cir(512, eps, scheme_for("scm", PLAN), PLAN).cir_db
    assert pascs > std + 10
    # pilots add interferers, so pascs sits a little under scm
    assert std < pascs < scm


def test_standard_cir_reference_value():
    # frozen value; measure_cir cross-checks it by simulation in test_sim
    assert theoretical_cir(512, 0.2, scheme_for("standard", PLAN), PLAN).cir_db == pytest.approx(10.0, abs=0.1)


def test_combined_coefficients_shapes():
    c = combined_coefficients(512, 0.2, PLAN)
    assert c.decision_bin == 64
    assert len(c.raw) == len(c.modulated) == len(c.demodulated) == len(c.offsets) == 125
    assert np.abs(c.demodulated).max() < np.abs(c.modulated).max()
    with pytest.raises(ValueError):
        combined_coefficients(512, 0.2, PLAN, decision_bin=300)

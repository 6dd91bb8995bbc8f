import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal

from mmwave_link import phy
from mmwave_link.link import transmit_spectrum, LinkConfig
from oracles import dbpsk_ber

SPS = 8
FS = 875e6 * SPS


def _reference_stream(n, seed=0):
    rng = np.random.default_rng(seed)
    d = rng.integers(0, 2, n).astype(np.uint8)
    b = phy.diff_encode(np.concatenate([[0], d]))
    return d, phy.modulate(b, SPS)


def test_diff_encode_hand_example():
    assert phy.diff_encode([1, 0, 1, 1], 0).tolist() == [1, 1, 0, 1]


@pytest.mark.parametrize("initial", [0, 1])
def test_diff_encode_zeros_hold_initial(initial):
    assert set(phy.diff_encode(np.zeros(20, np.uint8), initial).tolist()) == {initial}


@given(st.lists(st.integers(0, 1), max_size=200), st.integers(0, 1))
def test_diff_decode_inverts_encode(bits, initial):
    assert phy.diff_decode(phy.diff_encode(bits, initial), initial).tolist() == bits


def test_stream_validation():
    with pytest.raises(ValueError):
        phy.IqStream(np.zeros(4, complex), samples_per_symbol=3)
    with pytest.raises(ValueError):
        phy.modulate([0, 1], samples_per_symbol=2)
    iq = phy.modulate([0, 1, 0], SPS)
    assert iq.sample_rate == pytest.approx(7e9)


def test_unfiltered_nrz_levels():
    tx = phy.TxConfig(bandwidth_hz=None)
    x = phy.modulate([0, 0, 0], SPS, tx).samples
    assert np.array_equal(x, np.ones(24, complex))
    x = phy.modulate([1, 0], SPS, tx).samples
    assert x.real.tolist() == [-1.0] * 8 + [1.0] * 8


def test_average_power_is_unity():
    _, iq = _reference_stream(200_000, seed=1)
    assert np.mean(np.abs(iq.samples) ** 2) == pytest.approx(1.0, abs=0.05)


def test_demod_delay_matches_one_bit():
    cfg = phy.DemodConfig()
    assert cfg.delay_seconds() == pytest.approx(1.143e-9, abs=1e-12)
    assert round(cfg.delay_seconds() * 1e9, 2) == 1.14


def test_lpf_dc_gain_and_cutoff_ordering():
    cfg = phy.DemodConfig()
    assert cfg.lpf_cutoff_hz < FS / 2
    sos = signal.butter(cfg.lpf_order, cfg.lpf_cutoff_hz, fs=FS, output="sos")
    _, h = signal.sosfreqz(sos, worN=[0.0], fs=FS)
    assert abs(abs(h[0]) - 1) < 0.01
    # and the implementation passes DC unchanged
    demod = phy.DiffDemodulator(phy.TxConfig(), phy.DemodConfig(matched_filter=False, equalizer_taps=0))
    y = demod.process(np.ones(4000, complex))
    assert y[-1] == pytest.approx(1.0, rel=0.01)


def test_nrz_spectrum_nulls_at_symbol_rate():
    # discrete NRZ pulse: |sum_k exp(-j 2 pi f k / fs)| vanishes at f = symbol rate
    f = 875e6
    k = np.arange(SPS)
    assert abs(np.exp(-2j * np.pi * f * k / FS).sum()) < 1e-9


def test_designed_spectrum_20db_down_beyond_1ghz():
    # analytic PSD of random NRZ through the transmit Butterworth
    tx = phy.TxConfig()
    f = np.linspace(0, FS / 2, 20001)
    k = np.arange(SPS)
    pulse = np.abs(np.exp(-2j * np.pi * np.outer(f, k) / FS).sum(axis=1)) ** 2
    sos = signal.butter(tx.filter_order, tx.bandwidth_hz, fs=FS, output="sos")
    _, h = signal.sosfreqz(sos, worN=f, fs=FS)
    psd = pulse * np.abs(h) ** 2
    rel = 10 * np.log10(psd / psd.max() + 1e-300)
    assert rel[f >= 1e9].max() <= -20.0


def test_measured_spectrum_at_1p2ghz():
    f, p = transmit_spectrum(LinkConfig(), seed=3)
    for edge in (-1.2e9, 1.2e9):
        assert p[np.argmin(np.abs(f - edge))] <= -20.0


def test_noiseless_identity_1e5_bits():
    d, iq = _reference_stream(100_000, seed=2)
    dec = phy.decide(phy.diff_demodulate(iq))
    assert np.array_equal(dec[1:], d)


@settings(max_examples=10, deadline=None)
@given(st.floats(-np.pi, np.pi))
def test_phase_rotation_invariance(theta):
    d, iq = _reference_stream(5000, seed=4)
    ref = phy.decide(phy.diff_demodulate(iq))
    rot = phy.decide(phy.diff_demodulate(iq.with_samples(iq.samples * np.exp(1j * theta))))
    assert np.array_equal(ref, rot)


def test_slow_phase_drift_tolerated():
    d, iq = _reference_stream(50_000, seed=5)
    ramp = np.exp(1j * 0.01 / SPS * np.arange(len(iq.samples)))
    dec = phy.decide(phy.diff_demodulate(iq.with_samples(iq.samples * ramp)))
    assert np.array_equal(dec[1:], d)


def test_awgn_calibration_at_6db():
    from mmwave_link.channel import ChannelConfig, apply_channel
    from dataclasses import replace
    d, iq = _reference_stream(1_000_000, seed=6)
    rx = apply_channel(iq, replace(ChannelConfig.identity(), ebn0_db=6.0), rng_seed=6)
    ber = np.mean(phy.decide(phy.diff_demodulate(rx))[1:] != d)
    assert dbpsk_ber(6.0) / 2 <= ber <= 2 * dbpsk_ber(6.0)


def _oversampled(iq):
    return phy.DiffDemodulator().process(iq.samples)


def test_timing_recovery_tracks_known_phase():
    _, iq = _reference_stream(4000, seed=7)
    base = phy.recover_timing(_oversampled(iq))
    assert base == phy.nominal_latency() % SPS
    for p in range(SPS):
        shifted = iq.with_samples(np.concatenate([np.zeros(p, complex), iq.samples]))
        assert phy.recover_timing(_oversampled(shifted)) == (base + p) % SPS


def test_timing_recovery_scale_invariant_and_guarded():
    _, iq = _reference_stream(4000, seed=8)
    y = _oversampled(iq)
    assert phy.recover_timing(y) == phy.recover_timing(0.01 * y) == phy.recover_timing(50 * y)
    with pytest.raises(ValueError):
        phy.recover_timing(np.zeros(8 * 1000))
    with pytest.raises(ValueError):
        phy.recover_timing(y[: 8 * 100])


def test_timing_recovery_under_noise():
    from mmwave_link.channel import ChannelConfig, apply_channel
    from dataclasses import replace
    _, iq = _reference_stream(20_000, seed=9)
    clean = phy.recover_timing(_oversampled(iq))
    noisy = apply_channel(iq, replace(ChannelConfig.identity(), ebn0_db=15.0), rng_seed=9)
    got = phy.recover_timing(_oversampled(noisy))
    assert min((got - clean) % SPS, (clean - got) % SPS) <= 1


def test_decision_offset_override():
    d, iq = _reference_stream(3000, seed=10)
    phase = phy.nominal_latency() % SPS
    soft = phy.diff_demodulate(iq, phy.DemodConfig(decision_offset=phase))
    assert np.array_equal(phy.decide(soft)[1:], d)


def test_eye_shapes_and_constant_input():
    eye = phy.eye_diagram(np.full(800, 0.3), SPS, 100)
    assert eye.shape == (100, SPS)
    assert np.all(eye == eye[0])
    with pytest.raises(ValueError):
        phy.eye_diagram(np.zeros(10), SPS, 2)


def test_noiseless_eye_is_open():
    _, iq = _reference_stream(3000, seed=11)
    y = _oversampled(iq)
    lat = phy.nominal_latency()
    start = lat + 100 * SPS - SPS // 2
    eye = phy.eye_diagram(y, SPS, 2000, start)
    assert phy.eye_opening(eye, SPS // 2) > 0


def test_matched_filter_unit_dc_gain():
    assert phy._matched_taps(phy.TxConfig()).sum() == pytest.approx(1.0)


def test_equalizer_removes_transmit_isi():
    tx = phy.TxConfig()
    q = np.convolve(phy.tx_pulse(tx), phy._matched_taps(tx))
    peak = int(np.argmax(q))
    before = q[peak % SPS::SPS]
    after_full = np.convolve(q, phy._equalizer(tx, True, 15))
    p2 = int(np.argmax(after_full))
    after = after_full[p2 % SPS::SPS]
    isi = lambda s: (np.abs(s).sum() - np.abs(s).max()) / np.abs(s).max()
    assert isi(after) < 0.01 < isi(before)


def test_equalizer_off_and_validation():
    with pytest.raises(ValueError):
        phy.DemodConfig(equalizer_taps=-1)
    d, iq = _reference_stream(5000, seed=12)
    soft = phy.diff_demodulate(iq, phy.DemodConfig(equalizer_taps=0))
    assert np.array_equal(phy.decide(soft)[1:], d)
    # no transmit filter: nothing to equalize
    dm = phy.DiffDemodulator(phy.TxConfig(bandwidth_hz=None))
    assert dm._eq is None

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foa_enhance.dsp import (AudioBuffer, StftConfig, fft_convolve, fractional_delay, istft,
                             n_frames_for, resample, shift, stft)

from conftest import buf

CONFIGS = [StftConfig(), StftConfig(512, 256, "hann"), StftConfig(256, 64, "sqrt-hann"),
           StftConfig(256, 128, "hann"), StftConfig(64, 64, "rectangular"),
           StftConfig(128, 32, "rectangular")]


def direct_convolve(a, b):
    out = np.zeros(len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        out[i:i + len(b)] += ai * np.asarray(b)
    return out


def test_audio_buffer_validation():
    with pytest.raises(ValueError):
        AudioBuffer([0.0, np.nan], 16000)
    with pytest.raises(ValueError):
        AudioBuffer([0.0], 0)
    with pytest.raises(ValueError):
        AudioBuffer([0.0], 16000.5)
    b = AudioBuffer([1, 2, 3], 8000)
    assert b.samples.dtype == np.float64 and not b.samples.flags.writeable
    assert b.duration_s == 3 / 8000


def test_stft_config_rejects_non_cola_and_bad_sizes():
    with pytest.raises(ValueError, match="overlap-add"):
        StftConfig(512, 384, "hann")
    with pytest.raises(ValueError):
        StftConfig(500, 250)
    with pytest.raises(ValueError):
        StftConfig(512, 1024)
    with pytest.raises(ValueError):
        StftConfig(512, 256, "blackman")


def test_bin_center_cosine_concentrates_in_one_bin():
    cfg = StftConfig(256, 256, "rectangular")
    k = 20
    n = np.arange(256 * 8)
    spec = stft(buf(np.cos(2 * np.pi * k * n / 256)), cfg)
    # Interior frames see whole periods; edge frames include reflect padding.
    mag = np.abs(spec.bins[1:-1])
    assert np.all(np.argmax(mag, axis=1) == k)
    off = np.delete(mag, k, axis=1)
    assert np.max(off) < 1e-9 * np.max(mag)


def test_zero_signal_gives_zero_spectrogram_and_back():
    spec = stft(buf(np.zeros(1000)))
    assert not np.any(spec.bins)
    out = istft(spec)
    assert len(out) == 1000 and not np.any(out.samples)


def test_white_noise_round_trip_hann(rng):
    x = buf(rng.standard_normal(16000))
    y = istft(stft(x, StftConfig(512, 256, "hann")))
    assert np.max(np.abs(y.samples - x.samples)) < 1e-10


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: f"{c.window}-{c.fft_size}-{c.hop_size}")
def test_round_trip_all_lengths(cfg):
    rng = np.random.default_rng(cfg.fft_size + cfg.hop_size)
    for length in list(range(1, 40)) + list(rng.integers(40, 5 * cfg.fft_size + 1, 30)):
        x = buf(rng.standard_normal(length))
        spec = stft(x, cfg)
        assert spec.n_frames == n_frames_for(length, cfg)
        assert spec.bins.shape[1] == cfg.fft_size // 2 + 1
        y = istft(spec)
        assert len(y) == length
        assert np.max(np.abs(y.samples - x.samples)) < 1e-9


def test_halved_magnitude_is_minus_6db(rng):
    x = buf(rng.standard_normal(8000))
    spec = stft(x)
    y = istft(spec.with_bins(spec.bins * 0.5))
    ratio_db = 10 * np.log10(np.sum(y.samples ** 2) / np.sum(x.samples ** 2))
    assert ratio_db == pytest.approx(-6.0206, abs=1e-6)


def test_parseval_per_frame(rng):
    cfg = StftConfig(128, 128, "rectangular")
    x = rng.standard_normal(128 * 10)
    spec = stft(buf(x), cfg)
    padded = np.pad(x, 64, mode="reflect")
    padded = np.pad(padded, (0, spec.n_frames * 128 - padded.size))
    frames = padded.reshape(spec.n_frames, 128)
    weights = np.full(cfg.n_bins, 2.0)
    weights[[0, -1]] = 1.0
    spectral = (np.abs(spec.bins) ** 2 * weights).sum(axis=1) / 128
    np.testing.assert_allclose(spectral, (frames ** 2).sum(axis=1), rtol=1e-6)


def test_fft_convolve_examples():
    np.testing.assert_allclose(fft_convolve(buf([1, 2, 3]), [1]).samples, [1, 2, 3], atol=1e-12)
    np.testing.assert_allclose(fft_convolve(buf([1, 2]), [3, 4]).samples, [3, 10, 8], atol=1e-12)


def test_fft_convolve_long_random(rng):
    a, b = rng.standard_normal(1000), rng.standard_normal(257)
    got = fft_convolve(buf(a), b).samples
    ref = direct_convolve(a, b)
    assert np.linalg.norm(got - ref) / np.linalg.norm(ref) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 2048), st.integers(1, 2048), st.integers(0, 2 ** 32 - 1))
def test_fft_convolve_matches_direct(na, nb, seed):
    r = np.random.default_rng(seed)
    a, b = r.standard_normal(na), r.standard_normal(nb)
    ref = np.convolve(a, b)
    got = fft_convolve(buf(a), b).samples
    assert np.linalg.norm(got - ref) <= 1e-9 * np.linalg.norm(ref)


def test_fft_convolve_rejects_empty():
    with pytest.raises(ValueError):
        fft_convolve(buf([1.0]), [])


def test_resample_identity():
    x = buf(np.arange(10.0))
    assert resample(x, 16000) == x


def test_resample_tone_16k_to_10k():
    t = np.arange(16000) / 16000
    y = resample(buf(np.sin(2 * np.pi * 1000 * t)), 10000)
    assert y.sample_rate_hz == 10000 and len(y) == 10000
    mid = y.samples[1000:9000]
    tt = np.arange(1000, 9000) / 10000
    # Least-squares fit of a 1 kHz sinusoid: amplitude within 1 %, no residual.
    basis = np.stack([np.sin(2 * np.pi * 1000 * tt), np.cos(2 * np.pi * 1000 * tt)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, mid, rcond=None)
    assert np.hypot(*coef) == pytest.approx(1.0, rel=0.01)
    assert np.max(np.abs(basis @ coef - mid)) < 0.01


def test_resample_dc():
    y = resample(buf(np.ones(16000)), 10000).samples
    assert np.max(np.abs(y[200:-200] - 1.0)) < 1e-3


def test_resample_there_and_back_band_limited(rng):
    # Band-limited to 3 kHz, well inside the 10 kHz Nyquist.
    spec = np.fft.rfft(rng.standard_normal(32000))
    spec[np.fft.rfftfreq(32000, 1 / 16000) > 3000] = 0
    x = np.fft.irfft(spec, 32000)
    back = resample(resample(buf(x), 10000), 16000).samples
    core = slice(800, -800)
    err = np.linalg.norm(back[core] - x[core]) / np.linalg.norm(x[core])
    assert err < 0.01


def test_shift_and_fractional_delay(rng):
    x = np.arange(1.0, 6.0)
    np.testing.assert_array_equal(shift(x, 2), [3, 4, 5, 0, 0])
    np.testing.assert_array_equal(shift(x, -2), [0, 0, 1, 2, 3])
    np.testing.assert_array_equal(shift(x, 7), np.zeros(5))
    sig = np.zeros(256)
    sig[100] = 1.0
    np.testing.assert_allclose(fractional_delay(buf(sig), 7).samples, np.roll(sig, 7), atol=1e-12)

import numpy as np
import pytest

from foa_enhance.dsp import StftConfig, stft
from foa_enhance.enhance import enhance_multichannel_spectra
from foa_enhance.metrics import (StoiError, dbfs, icld_icpd_deviation, remove_silent_frames,
                                 stoi, stoi_window, third_octave_matrix)
from foa_enhance.scene import BFormatScene, Direction, encode_plane_wave
from foa_enhance.signals import make_noise, speech_like

from conftest import RATE, buf, noise_at_snr
from stoi_reference import stoi_reference

# Reference-oracle score for speech_like(3 s, seed 7) plus seed-11 white noise at 0 dB.
FROZEN_STOI_0DB = 0.7953280988137406


def white_at(clean, snr_db, seed):
    return clean + noise_at_snr(clean, np.random.default_rng(seed).standard_normal(clean.size),
                                snr_db)


def test_window_is_matlab_hanning():
    n = np.arange(1, 257)
    np.testing.assert_allclose(stoi_window(), 0.5 - 0.5 * np.cos(2 * np.pi * n / 257), atol=1e-15)


def test_third_octave_matrix():
    matrix, centres = third_octave_matrix()
    assert matrix.shape == (15, 257)
    np.testing.assert_allclose(centres, 150 * 2 ** (np.arange(15) / 3))
    freqs = np.arange(257) * 10000 / 512
    for k, c in enumerate(centres):
        inside = (freqs >= c * 2 ** (-1 / 6)) & (freqs < c * 2 ** (1 / 6))
        np.testing.assert_array_equal(matrix[k] == 1, inside)
    assert matrix.sum(axis=0).max() == 1  # bands never overlap


def test_stoi_self_is_one(speech):
    assert stoi(speech, speech).value == pytest.approx(1.0, abs=1e-6)


def test_stoi_matches_frozen_oracle_value(speech):
    y = white_at(speech.samples, 0.0, 11)
    assert stoi(speech, buf(y)).value == pytest.approx(FROZEN_STOI_0DB, abs=1e-3)


@pytest.mark.parametrize("seed,kind,snr", [(1, "white", -5), (2, "babble", 0), (3, "tonal", 5),
                                           (4, "white", 20)])
def test_stoi_matches_reference(seed, kind, snr):
    r = np.random.default_rng(seed)
    s = speech_like(3.0, RATE, r).samples
    y = s + noise_at_snr(s, make_noise(kind, 3.0, RATE, r).samples, snr)
    assert stoi(buf(s), buf(y)).value == pytest.approx(stoi_reference(s, y, RATE), abs=1e-3)


def test_stoi_monotonic_in_snr(speech):
    noise = np.random.default_rng(5).standard_normal(len(speech))
    scores = [stoi(speech, buf(speech.samples + noise_at_snr(speech.samples, noise, snr))).value
              for snr in (-5, 0, 5, 10, 20)]
    assert all(b > a for a, b in zip(scores, scores[1:]))


def test_stoi_scale_invariance(speech):
    y = buf(white_at(speech.samples, 5.0, 3))
    base = stoi(speech, y).value
    assert stoi(speech, y.with_samples(7.5 * y.samples)).value == pytest.approx(base, abs=1e-9)
    both = stoi(speech.with_samples(0.2 * speech.samples), y.with_samples(0.2 * y.samples))
    assert both.value == pytest.approx(base, abs=1e-9)


def test_stoi_trims_to_shorter(speech):
    y = white_at(speech.samples, 5.0, 3)
    a = stoi(speech, buf(np.concatenate([y, np.ones(5000)]))).value
    assert a == pytest.approx(stoi(speech, buf(y)).value, abs=1e-12)


def test_stoi_errors(speech):
    with pytest.raises(StoiError, match="rate"):
        stoi(speech, buf(speech.samples, 8000))
    with pytest.raises(StoiError, match="silent"):
        stoi(buf(np.zeros(16000)), buf(np.ones(16000)))
    with pytest.raises(StoiError, match="30"):
        stoi(speech.with_samples(speech.samples[:4000]), speech.with_samples(speech.samples[:4000]))


def test_silent_frames_are_removed():
    x = np.zeros(10000)
    x[3000:7000] = np.random.default_rng(0).standard_normal(4000)
    c, d = remove_silent_frames(x, x.copy())
    assert c.size < x.size and np.array_equal(c, d)


def _scene(seed, snr_db=5.0):
    r = np.random.default_rng(seed)
    sc = encode_plane_wave(speech_like(2.0, RATE, r), Direction(70, 15)).as_array()
    noise = r.standard_normal(sc.shape)
    noise *= np.sqrt(np.sum(sc[0] ** 2) / np.sum(noise[0] ** 2) / 10 ** (snr_db / 10))
    return BFormatScene.from_array(sc + noise, RATE)


def test_dbfs_full_scale_sine():
    cfg = StftConfig()
    k = 32
    x = np.sin(2 * np.pi * k * np.arange(8192) / cfg.fft_size)
    levels = dbfs(stft(buf(x), cfg))
    # The negative-frequency image leaks through the window sidelobes by a few 1e-4 dB.
    assert np.median(levels[2:-2, k]) == pytest.approx(0.0, abs=1e-2)


def test_deviation_of_identical_scenes_is_zero():
    sc = _scene(1)
    dev = icld_icpd_deviation(sc, sc)
    assert dev.icld_rms_db == 0.0 and dev.icpd_rms_rad == 0.0 and dev.active_bin_count > 0


def test_per_channel_and_shared_mask_deviation():
    sc = _scene(2)
    per = icld_icpd_deviation(sc, enhance_multichannel_spectra(sc, "per-channel"))
    assert per.icpd_rms_rad < 1e-9
    assert per.icld_rms_db > 0.01  # independent masks do change level differences
    shared = icld_icpd_deviation(sc, enhance_multichannel_spectra(sc, "shared-mask"))
    assert shared.icld_rms_db < 1e-9 and shared.icpd_rms_rad < 1e-9


def test_deviation_symmetric_under_channel_order():
    sc = _scene(3)
    after = BFormatScene.from_array(_scene(4).as_array(), RATE)
    perm = [2, 0, 3, 1]
    a = icld_icpd_deviation(sc, after)
    b = icld_icpd_deviation(BFormatScene.from_array(sc.as_array()[perm], RATE),
                            BFormatScene.from_array(after.as_array()[perm], RATE))
    assert a.icld_rms_db == pytest.approx(b.icld_rms_db, rel=1e-12)
    assert a.icpd_rms_rad == pytest.approx(b.icpd_rms_rad, rel=1e-12)
    assert a.active_bin_count == b.active_bin_count


def test_deviation_errors():
    sc = _scene(5)
    silent = BFormatScene.from_array(np.zeros((4, len(sc))), RATE)
    with pytest.raises(ValueError, match="no bins"):
        icld_icpd_deviation(silent, silent)
    short = BFormatScene.from_array(sc.as_array()[:, :1000], RATE)
    with pytest.raises(ValueError, match="shape"):
        icld_icpd_deviation(sc, short)
    with pytest.raises(TypeError):
        icld_icpd_deviation(sc, [1, 2])

"""Objective scores: STOI and inter-channel level/phase deviation."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import resample_poly

from .dsp import AudioBuffer, Spectrogram, StftConfig, stft
from .scene import BFormatScene

STOI_RATE_HZ = 10000
STOI_FRAME = 256
STOI_HOP = 128
STOI_NFFT = 512
STOI_BANDS = 15
STOI_MIN_FREQ = 150.0
STOI_SEGMENT = 30
STOI_BETA_DB = -15.0
STOI_DYN_RANGE_DB = 40.0
EPS = np.finfo(np.float64).eps


class StoiError(ValueError):
    pass


@dataclass(frozen=True)
class StoiScore:
    value: float

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class SpatialDeviation:
    icld_rms_db: float
    icpd_rms_rad: float
    active_bin_count: int


def stoi_window() -> np.ndarray:
    # Symmetric Hann without its zero endpoints (MATLAB ``hanning(256)``).
    return np.hanning(STOI_FRAME + 2)[1:-1]


def third_octave_matrix(rate_hz: int = STOI_RATE_HZ, nfft: int = STOI_NFFT,
                        n_bands: int = STOI_BANDS, min_freq: float = STOI_MIN_FREQ
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Bin-grouping matrix (bands x bins) and band centre frequencies.

    Band k has centre ``min_freq * 2**(k/3)``; a bin belongs to it when its
    frequency lies in ``[centre * 2**(-1/6), centre * 2**(1/6))``.
    """
    freqs = np.arange(nfft // 2 + 1) * rate_hz / nfft
    centres = min_freq * 2.0 ** (np.arange(n_bands) / 3.0)
    lo = centres * 2.0 ** (-1.0 / 6.0)
    hi = centres * 2.0 ** (1.0 / 6.0)
    matrix = ((freqs[None, :] >= lo[:, None]) & (freqs[None, :] < hi[:, None])).astype(float)
    return matrix, centres


def to_stoi_rate(signal: AudioBuffer) -> np.ndarray:
    """Resample to 10 kHz with the Kaiser (beta 5) polyphase design of MATLAB ``resample``.

    The silent-frame threshold is a hard cut, so scores are sensitive to the
    anti-aliasing filter; this design keeps them comparable with published STOI.
    """
    ratio = Fraction(STOI_RATE_HZ, signal.sample_rate_hz)
    x = signal.samples
    if ratio != 1:
        x = resample_poly(x, ratio.numerator, ratio.denominator)
    n_out = int(round(len(signal) * STOI_RATE_HZ / signal.sample_rate_hz))
    return np.pad(x, (0, max(0, n_out - x.size)))[:n_out]


def _frames(x: np.ndarray) -> np.ndarray:
    if x.size < STOI_FRAME:
        return np.zeros((0, STOI_FRAME))
    return sliding_window_view(x, STOI_FRAME)[::STOI_HOP]


def remove_silent_frames(clean: np.ndarray, degraded: np.ndarray
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Drop frames more than 40 dB below the loudest clean frame and overlap-add the rest."""
    win = stoi_window()
    cf = _frames(clean) * win
    df = _frames(degraded) * win
    if cf.shape[0] == 0:
        raise StoiError("signal shorter than one STOI frame")
    energies = 20.0 * np.log10(np.linalg.norm(cf, axis=1) + EPS)
    if not np.any(np.linalg.norm(cf, axis=1) > 0):
        raise StoiError("clean signal is entirely silent")
    keep = energies > np.max(energies) - STOI_DYN_RANGE_DB
    cf, df = cf[keep], df[keep]
    n_out = (cf.shape[0] - 1) * STOI_HOP + STOI_FRAME
    c_out = np.zeros(n_out)
    d_out = np.zeros(n_out)
    for i in range(cf.shape[0]):
        c_out[i * STOI_HOP:i * STOI_HOP + STOI_FRAME] += cf[i]
        d_out[i * STOI_HOP:i * STOI_HOP + STOI_FRAME] += df[i]
    return c_out, d_out


def band_envelopes(x: np.ndarray) -> np.ndarray:
    """One-third-octave band magnitudes, shape (bands, frames)."""
    spec = np.fft.rfft(_frames(x) * stoi_window(), STOI_NFFT, axis=1)
    matrix, _ = third_octave_matrix()
    return np.sqrt(matrix @ (np.abs(spec) ** 2).T)


def stoi(clean: AudioBuffer, degraded: AudioBuffer) -> StoiScore:
    """Short-time objective intelligibility of ``degraded`` against ``clean``.

    Both signals are trimmed to the shorter length before scoring.
    """
    if clean.sample_rate_hz != degraded.sample_rate_hz:
        raise StoiError(f"sample rates differ: {clean.sample_rate_hz} vs "
                        f"{degraded.sample_rate_hz} Hz")
    n = min(len(clean), len(degraded))
    x = to_stoi_rate(clean.with_samples(clean.samples[:n]))
    y = to_stoi_rate(degraded.with_samples(degraded.samples[:n]))
    x, y = remove_silent_frames(x, y)
    x_env = band_envelopes(x)
    y_env = band_envelopes(y)
    n_frames = x_env.shape[1]
    if n_frames < STOI_SEGMENT:
        raise StoiError(f"only {n_frames} active frames; STOI needs at least {STOI_SEGMENT}")
    # (bands, segments, 30)
    xs = sliding_window_view(x_env, STOI_SEGMENT, axis=1)
    ys = sliding_window_view(y_env, STOI_SEGMENT, axis=1)
    alpha = np.linalg.norm(xs, axis=2, keepdims=True) / (
        np.linalg.norm(ys, axis=2, keepdims=True) + EPS)
    clip = 1.0 + 10.0 ** (-STOI_BETA_DB / 20.0)
    y_clipped = np.minimum(alpha * ys, xs * clip)
    xc = xs - xs.mean(axis=2, keepdims=True)
    yc = y_clipped - y_clipped.mean(axis=2, keepdims=True)
    xc /= np.linalg.norm(xc, axis=2, keepdims=True) + EPS
    yc /= np.linalg.norm(yc, axis=2, keepdims=True) + EPS
    return StoiScore(float(np.mean(np.sum(xc * yc, axis=2))))


def _spectra(scene, config: StftConfig) -> list[Spectrogram]:
    if isinstance(scene, BFormatScene):
        return [stft(c, config) for c in scene.channels]
    specs = list(scene)
    if len(specs) != 4 or not all(isinstance(s, Spectrogram) for s in specs):
        raise TypeError("expected a BFormatScene or four Spectrograms")
    return specs


def dbfs(spec: Spectrogram) -> np.ndarray:
    """Bin level in dBFS: a full-scale sinusoid peaks at 0 dBFS in its bin."""
    ref = np.sum(spec.config.analysis) / 2.0
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.abs(spec.bins) / ref)


def icld_icpd_deviation(before, after, config: StftConfig | None = None,
                        floor_dbfs: float = -80.0) -> SpatialDeviation:
    """RMS change of inter-channel level and phase differences, pooled over the
    six channel pairs and every bin where both channels exceed ``floor_dbfs``
    before and after.

    ``before``/``after`` are scenes (analysed with ``config``) or lists of
    four spectrograms, e.g. an enhancer's own output spectra.
    """
    config = config or StftConfig()
    sb, sa = _spectra(before, config), _spectra(after, config)
    if any(b.bins.shape != a.bins.shape for b, a in zip(sb, sa)):
        raise ValueError("before and after scenes differ in shape")
    levels_b = [dbfs(s) for s in sb]
    levels_a = [dbfs(s) for s in sa]
    icld_dev, icpd_dev = [], []
    for i, j in combinations(range(4), 2):
        active = ((levels_b[i] > floor_dbfs) & (levels_b[j] > floor_dbfs)
                  & (levels_a[i] > floor_dbfs) & (levels_a[j] > floor_dbfs))
        if not np.any(active):
            continue
        icld_in = levels_b[i][active] - levels_b[j][active]
        icld_out = levels_a[i][active] - levels_a[j][active]
        icld_dev.append(icld_out - icld_in)
        phase_in = np.angle(sb[i].bins[active] * np.conj(sb[j].bins[active]))
        phase_out = np.angle(sa[i].bins[active] * np.conj(sa[j].bins[active]))
        icpd_dev.append(np.angle(np.exp(1j * (phase_out - phase_in))))
    if not icld_dev:
        raise ValueError(f"no bins above {floor_dbfs} dBFS in any channel pair")
    icld = np.concatenate(icld_dev)
    icpd = np.concatenate(icpd_dev)
    return SpatialDeviation(float(np.sqrt(np.mean(icld ** 2))),
                            float(np.sqrt(np.mean(icpd ** 2))), int(icld.size))

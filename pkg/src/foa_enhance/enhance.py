"""Speech enhancers.

SISO: a spectral gain applied to the STFT magnitude, resynthesised with the
unmodified noisy phase. Run per channel it leaves inter-channel phase alone.

MISO: normalized cross-correlation alignment followed by delay-and-sum; the
output is mono, so all spatial cues are gone.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from .dsp import AudioBuffer, Spectrogram, StftConfig, istft, shift, stft
from .scene import BFormatScene

MODES = ("per-channel", "shared-mask")


@dataclass(frozen=True)
class MaskParams:
    noise_percentile: float = 0.2
    floor_gain: float = 0.05
    oversubtraction: float = 1.5
    smoothing_frames: int = 2

    def __post_init__(self):
        if not 0.0 < self.noise_percentile < 1.0:
            raise ValueError("noise_percentile must be in (0, 1)")
        if not 0.0 <= self.floor_gain <= 1.0:
            raise ValueError("floor_gain must be in [0, 1]")
        if self.oversubtraction < 1.0:
            raise ValueError("oversubtraction must be >= 1")
        if int(self.smoothing_frames) != self.smoothing_frames or self.smoothing_frames < 0:
            raise ValueError("smoothing_frames must be a non-negative integer")


@dataclass(frozen=True)
class BeamformerParams:
    window_ms: float = 16.0
    max_lag_samples: int = 32
    ref_channel: int = 0
    normalize: bool = False

    def __post_init__(self):
        if self.window_ms <= 0:
            raise ValueError("window_ms must be positive")
        if int(self.max_lag_samples) != self.max_lag_samples or self.max_lag_samples <= 0:
            raise ValueError("max_lag_samples must be a positive integer")
        if self.ref_channel < 0:
            raise ValueError("ref_channel must be a channel index")

    def window_samples(self, rate_hz: int) -> int:
        n = int(round(self.window_ms * rate_hz / 1000.0))
        if self.max_lag_samples >= n:
            raise ValueError(f"max_lag_samples ({self.max_lag_samples}) must be smaller than "
                             f"the {n}-sample NCC window")
        return n


class DegenerateChannelWarning(UserWarning):
    pass


def estimate_noise_psd(spec: Spectrogram, params: MaskParams | None = None) -> np.ndarray:
    """Per-bin noise power: the ``noise_percentile`` quantile of |Y|^2 over frames."""
    params = params or MaskParams()
    if spec.n_frames < 5:
        raise ValueError(f"noise estimation needs at least 5 frames, got {spec.n_frames}")
    return np.quantile(np.abs(spec.bins) ** 2, params.noise_percentile, axis=0)


def compute_mask(spec: Spectrogram, noise_psd, params: MaskParams | None = None) -> np.ndarray:
    params = params or MaskParams()
    noise_psd = np.asarray(noise_psd, dtype=np.float64)
    if noise_psd.shape != (spec.bins.shape[1],):
        raise ValueError(f"noise PSD shape {noise_psd.shape} does not match "
                         f"{spec.bins.shape[1]} frequency bins")
    power = np.abs(spec.bins) ** 2
    noise = np.broadcast_to(noise_psd, power.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(noise > 0, noise / power, 0.0)
    raw = np.maximum(0.0, 1.0 - params.oversubtraction * ratio)
    mask = np.clip(raw, params.floor_gain, 1.0)
    return smooth_frames(mask, int(params.smoothing_frames))


def _causal_mean(mask: np.ndarray, length: int) -> np.ndarray:
    # Mean of frames t-length+1..t; shorter windows at the start.
    csum = np.cumsum(mask, axis=0)
    out = csum.copy()
    out[length:] -= csum[:-length]
    counts = np.minimum(np.arange(1, mask.shape[0] + 1), length)
    return out / counts[:, None]


def smooth_frames(mask: np.ndarray, length: int) -> np.ndarray:
    """Zero-phase moving average along frames: a causal ``length``-frame mean
    followed by the same mean run backwards. ``length`` 0 or 1 is a no-op."""
    if length <= 1 or mask.shape[0] < 2:
        return mask
    forward = _causal_mean(mask, length)
    return _causal_mean(forward[::-1], length)[::-1]


def apply_mask(spec: Spectrogram, mask: np.ndarray) -> Spectrogram:
    """Masked magnitude recombined with the original phase.

    A real non-negative gain scales both parts of each bin equally, which
    leaves the phase untouched.
    """
    return spec.with_bins(mask * spec.bins)


def enhance_siso_spectrogram(signal: AudioBuffer, params: MaskParams | None = None,
                             config: StftConfig | None = None,
                             noise_psd=None) -> tuple[Spectrogram, np.ndarray]:
    """STFT-domain SISO enhancement; returns the enhanced spectrogram and its mask."""
    params = params or MaskParams()
    spec = stft(signal, config)
    if noise_psd is None:
        noise_psd = estimate_noise_psd(spec, params)
    mask = compute_mask(spec, noise_psd, params)
    return apply_mask(spec, mask), mask


def enhance_siso(signal: AudioBuffer, params: MaskParams | None = None,
                 config: StftConfig | None = None, noise_psd=None) -> AudioBuffer:
    enhanced, _ = enhance_siso_spectrogram(signal, params, config, noise_psd)
    return istft(enhanced)


def enhance_multichannel_spectra(scene: BFormatScene, mode: str = "per-channel",
                                 params: MaskParams | None = None,
                                 config: StftConfig | None = None,
                                 jobs: int = 1) -> list[Spectrogram]:
    """Enhanced STFTs of W, X, Y, Z (the spectra that get resynthesised)."""
    params = params or MaskParams()
    if mode == "per-channel":
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=min(jobs, 4)) as pool:
                results = list(pool.map(
                    lambda c: enhance_siso_spectrogram(c, params, config)[0], scene.channels))
            return results
        return [enhance_siso_spectrogram(c, params, config)[0] for c in scene.channels]
    if mode == "shared-mask":
        specs = [stft(c, config) for c in scene.channels]
        mask = compute_mask(specs[0], estimate_noise_psd(specs[0], params), params)
        return [apply_mask(s, mask) for s in specs]
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def enhance_multichannel(scene: BFormatScene, mode: str = "per-channel",
                         params: MaskParams | None = None, config: StftConfig | None = None,
                         jobs: int = 1) -> BFormatScene:
    """Enhance a B-format scene channel by channel (``per-channel``) or with the
    W-channel mask applied to all four channels (``shared-mask``)."""
    specs = enhance_multichannel_spectra(scene, mode, params, config, jobs)
    return BFormatScene(*(istft(s) for s in specs))


@dataclass(frozen=True)
class Alignment:
    delays: tuple[int, ...]
    flagged: tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.flagged


def ncc_curves(channels, params: BeamformerParams | None = None) -> np.ndarray:
    """NCC against the reference, summed over non-overlapping windows.

    Returns an array of shape (channels, 2*max_lag + 1); entry ``[i, L + l]``
    scores channel ``i`` at lag ``l``, i.e. ``c_i[n + l]`` against ``ref[n]``.
    """
    params = params or BeamformerParams()
    arrays = [np.asarray(c.samples if isinstance(c, AudioBuffer) else c, dtype=np.float64)
              for c in channels]
    if len(arrays) < 2:
        raise ValueError("alignment needs at least two channels")
    n = arrays[0].size
    if any(a.size != n for a in arrays):
        raise ValueError("channels must have equal length")
    rate = channels[0].sample_rate_hz if isinstance(channels[0], AudioBuffer) else 16000
    win = params.window_samples(rate)
    lag = int(params.max_lag_samples)
    if not 0 <= params.ref_channel < len(arrays):
        raise ValueError(f"ref_channel {params.ref_channel} out of range")
    n_win = n // win
    if n_win == 0:
        raise ValueError(f"signal shorter than one {win}-sample NCC window")
    ref = arrays[params.ref_channel][:n_win * win].reshape(n_win, win)
    ref_energy = np.sum(ref ** 2, axis=1)
    seg_len = win + 2 * lag
    nfft = sp_fft.next_fast_len(seg_len, real=True)
    ref_spec = np.conj(np.fft.rfft(ref, nfft, axis=1))
    starts = np.arange(n_win) * win
    curves = np.zeros((len(arrays), 2 * lag + 1))
    for i, chan in enumerate(arrays):
        padded = np.pad(chan, (lag, lag + win))
        segs = padded[starts[:, None] + np.arange(seg_len)[None, :]]
        num = np.fft.irfft(ref_spec * np.fft.rfft(segs, nfft, axis=1), nfft, axis=1)
        num = num[:, :2 * lag + 1]
        csum = np.concatenate([np.zeros((n_win, 1)), np.cumsum(segs ** 2, axis=1)], axis=1)
        offs = np.arange(2 * lag + 1)
        energy = csum[:, offs + win] - csum[:, offs]
        denom = np.sqrt(np.maximum(ref_energy[:, None] * energy, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            ncc = np.where(denom > 1e-20, num / denom, 0.0)
        curves[i] = ncc.sum(axis=0)
    return curves


def ncc_align(channels, params: BeamformerParams | None = None) -> Alignment:
    """Integer delay per channel maximising the summed NCC with the reference.

    A channel whose curve is identically zero (silence) gets delay 0 and is
    listed in ``Alignment.flagged``.
    """
    params = params or BeamformerParams()
    curves = ncc_curves(channels, params)
    lag = int(params.max_lag_samples)
    delays, flagged = [], []
    for i, curve in enumerate(curves):
        if i == params.ref_channel:
            delays.append(0)
            if not np.any(curve):
                flagged.append(i)
            continue
        if not np.any(curve):
            delays.append(0)
            flagged.append(i)
            continue
        delays.append(int(np.argmax(curve)) - lag)
    if flagged:
        warnings.warn(f"degenerate (silent) channels {flagged}; delay set to 0",
                      DegenerateChannelWarning, stacklevel=2)
    return Alignment(tuple(delays), tuple(flagged))


def delay_sum_beamform(channels, delays) -> AudioBuffer:
    """Advance each channel by its delay (zero fill) and average."""
    if len(channels) != len(delays):
        raise ValueError("one delay per channel is required")
    n = len(channels[0])
    if any(len(c) != n for c in channels):
        raise ValueError("channels must have equal length")
    acc = np.zeros(n)
    for chan, d in zip(channels, delays):
        acc += shift(chan.samples, int(d))
    return AudioBuffer(acc / len(channels), channels[0].sample_rate_hz)


def filter_sum_beamform(channels, params: BeamformerParams | None = None) -> AudioBuffer:
    """Polarity/gain matching plus NCC-aligned delay-and-sum.

    Each channel gets a scalar weight, the least-squares gain of its aligned
    version onto the reference, so that anti-phase or weak channels add
    coherently (maximum-ratio combining for uncorrelated noise). The output
    is scaled so the reference's coherent component passes at unit gain.
    """
    params = params or BeamformerParams()
    ref = channels[params.ref_channel].samples
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        # Nothing to match against: plain average (all-zero input gives all-zero output).
        warnings.warn("reference channel is silent; averaging without alignment",
                      DegenerateChannelWarning, stacklevel=2)
        return delay_sum_beamform(channels, [0] * len(channels))
    curves = ncc_curves(channels, params)
    lag = int(params.max_lag_samples)
    # Pick lag and polarity together from the strongest |NCC| peak; B-format
    # velocity channels can be anti-phase with W.
    delays, polarity = [], []
    for i, curve in enumerate(curves):
        k = int(np.argmax(np.abs(curve)))
        if i == params.ref_channel or not np.any(curve):
            delays.append(0)
            polarity.append(1.0)
        else:
            delays.append(k - lag)
            polarity.append(1.0 if curve[k] >= 0 else -1.0)
    flipped = [c.with_samples(p * c.samples) for c, p in zip(channels, polarity)]
    weights = np.array([np.dot(ref, shift(c.samples, d)) / ref_energy
                        for c, d in zip(flipped, delays)])
    weights = np.maximum(weights, 0.0)
    weighted = [c.with_samples(w * c.samples) for c, w in zip(flipped, weights)]
    out = delay_sum_beamform(weighted, delays)
    out = out.with_samples(out.samples * len(channels) / float(np.sum(weights ** 2)))
    if params.normalize:
        peak = np.max(np.abs(out.samples))
        if peak > 0:
            out = out.with_samples(0.99 * out.samples / peak)
    return out


def enhance_miso(scene: BFormatScene, params: BeamformerParams | None = None) -> AudioBuffer:
    """Mono estimate from all four channels (W is the default reference)."""
    return filter_sum_beamform(list(scene.channels), params)

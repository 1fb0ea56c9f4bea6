"""Numeric primitives: STFT/ISTFT, FFT convolution, resampling, delays.

All internal math is float64. Signals travel as :class:`AudioBuffer`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sp_fft
from scipy import signal as sp_signal

WINDOWS = ("rectangular", "hann", "sqrt-hann")


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """A mono sampled signal."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).reshape(-1)
        if int(self.sample_rate_hz) != self.sample_rate_hz or self.sample_rate_hz <= 0:
            raise ValueError(f"sample rate must be a positive integer, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, AudioBuffer):
            return NotImplemented
        return (self.sample_rate_hz == other.sample_rate_hz
                and np.array_equal(self.samples, other.samples))

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def with_samples(self, samples) -> "AudioBuffer":
        return AudioBuffer(samples, self.sample_rate_hz)


def _windows(name: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Analysis and synthesis windows for ``name``.

    ``hann`` analyses with a periodic Hann and synthesises with a flat
    window; ``sqrt-hann`` uses the square root of the periodic Hann on
    both sides. Either way the analysis*synthesis product is a Hann.
    """
    if name == "rectangular":
        return np.ones(n), np.ones(n)
    hann = sp_signal.get_window("hann", n, fftbins=True)
    if name == "hann":
        return hann, np.ones(n)
    if name == "sqrt-hann":
        root = np.sqrt(hann)
        return root, root
    raise ValueError(f"unknown window {name!r}; expected one of {WINDOWS}")


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 512
    hop_size: int = 256
    window: str = "sqrt-hann"
    analysis: np.ndarray = field(init=False, repr=False, compare=False)
    synthesis: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, hop = self.fft_size, self.hop_size
        if n <= 0 or n & (n - 1):
            raise ValueError(f"fft_size must be a positive power of two, got {n}")
        if not 0 < hop <= n:
            raise ValueError(f"hop_size must be in [1, fft_size], got {hop}")
        wa, ws = _windows(self.window, n)
        if not _is_cola(wa * ws, hop):
            raise ValueError(
                f"window {self.window!r} with hop {hop} violates constant overlap-add")
        wa.setflags(write=False)
        ws.setflags(write=False)
        object.__setattr__(self, "analysis", wa)
        object.__setattr__(self, "synthesis", ws)

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    def to_dict(self) -> dict:
        return {"fft_size": self.fft_size, "hop_size": self.hop_size, "window": self.window}


def _is_cola(product: np.ndarray, hop: int, rtol: float = 1e-10) -> bool:
    n = product.shape[0]
    padded = np.zeros(-(-n // hop) * hop)
    padded[:n] = product
    sums = padded.reshape(-1, hop).sum(axis=0)
    return bool(np.ptp(sums) <= rtol * np.max(np.abs(sums)) and np.max(sums) > 0)


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Complex STFT, ``bins[frame, frequency]``."""

    bins: np.ndarray
    config: StftConfig
    source_rate_hz: int
    source_length: int

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.ndim != 2 or bins.shape[1] != self.config.n_bins:
            raise ValueError(
                f"expected (frames, {self.config.n_bins}) bins, got shape {bins.shape}")
        if not np.all(np.isfinite(bins)):
            raise ValueError("spectrogram entries must be finite")
        object.__setattr__(self, "bins", bins)

    @property
    def n_frames(self) -> int:
        return self.bins.shape[0]

    @property
    def frequencies_hz(self) -> np.ndarray:
        return np.arange(self.config.n_bins) * self.source_rate_hz / self.config.fft_size

    def with_bins(self, bins) -> "Spectrogram":
        return Spectrogram(bins, self.config, self.source_rate_hz, self.source_length)


def n_frames_for(length: int, config: StftConfig) -> int:
    """Frame count for a signal of ``length`` samples.

    The signal is reflect-padded by ``fft_size // 2`` at both ends, so the
    padding totals ``fft_size`` and the count is ``ceil((length + fft_size) / hop)``.
    """
    return -(-(length + config.fft_size) // config.hop_size)


def stft(signal: AudioBuffer, config: StftConfig | None = None) -> Spectrogram:
    config = config or StftConfig()
    x = signal.samples
    if x.size == 0:
        raise ValueError("cannot transform an empty signal")
    n, hop = config.fft_size, config.hop_size
    frames_n = n_frames_for(x.size, config)
    padded = np.pad(x, n // 2, mode="reflect")
    total = (frames_n - 1) * hop + n
    padded = np.pad(padded, (0, total - padded.size))
    frames = sliding_window_view(padded, n)[::hop]
    bins = np.fft.rfft(frames * config.analysis, axis=1)
    return Spectrogram(bins, config, signal.sample_rate_hz, x.size)


def istft(spec: Spectrogram) -> AudioBuffer:
    config = spec.config
    n, hop = config.fft_size, config.hop_size
    frames = np.fft.irfft(spec.bins, n=n, axis=1) * config.synthesis
    total = (spec.n_frames - 1) * hop + n
    out = np.zeros(total)
    envelope = np.zeros(total)
    weight = config.analysis * config.synthesis
    for k in range(spec.n_frames):
        out[k * hop:k * hop + n] += frames[k]
        envelope[k * hop:k * hop + n] += weight
    start = n // 2
    stop = start + spec.source_length
    if stop > total:
        raise ValueError("spectrogram has too few frames for its source length")
    env = envelope[start:stop]
    if np.any(env <= 1e-12):
        raise ValueError("overlap-add envelope vanishes inside the signal")
    return AudioBuffer(out[start:stop] / env, spec.source_rate_hz)


def fft_convolve(a: AudioBuffer, b) -> AudioBuffer:
    """Full linear convolution of ``a`` with the taps ``b``."""
    taps = np.asarray(b.samples if isinstance(b, AudioBuffer) else b, dtype=np.float64).reshape(-1)
    if len(a) == 0 or taps.size == 0:
        raise ValueError("convolution operands must be non-empty")
    out_len = len(a) + taps.size - 1
    nfft = sp_fft.next_fast_len(out_len, real=True)
    spectrum = np.fft.rfft(a.samples, nfft) * np.fft.rfft(taps, nfft)
    return AudioBuffer(np.fft.irfft(spectrum, nfft)[:out_len], a.sample_rate_hz)


@lru_cache(maxsize=16)
def _resampling_filter(up: int, down: int) -> np.ndarray:
    # Kaiser design: cutoff just below the lower Nyquist, 100 dB stopband.
    nyq = 1.0 / max(up, down)
    cutoff = 0.95 * nyq
    width = 0.1 * nyq
    numtaps, beta = sp_signal.kaiserord(100.0, width)
    numtaps |= 1
    return sp_signal.firwin(numtaps, cutoff, window=("kaiser", beta))


def resample(signal: AudioBuffer, target_rate_hz: int) -> AudioBuffer:
    """Rational polyphase resampling to ``target_rate_hz``.

    Output length is ``round(len * target / source)``.
    """
    if int(target_rate_hz) != target_rate_hz or target_rate_hz <= 0:
        raise ValueError(f"target rate must be a positive integer, got {target_rate_hz}")
    source = signal.sample_rate_hz
    if target_rate_hz == source:
        return signal
    ratio = Fraction(int(target_rate_hz), source)
    up, down = ratio.numerator, ratio.denominator
    taps = _resampling_filter(up, down)
    y = sp_signal.resample_poly(signal.samples, up, down, window=taps)
    out_len = int(round(len(signal) * target_rate_hz / source))
    if y.size < out_len:
        y = np.pad(y, (0, out_len - y.size))
    return AudioBuffer(y[:out_len], int(target_rate_hz))


def fractional_delay(signal: AudioBuffer, delay_samples: float) -> AudioBuffer:
    """Delay by a possibly fractional number of samples (band-limited, zero-padded FFT shift).

    Output keeps the input length; the circular wrap is pushed into padding
    that is cropped afterwards.
    """
    n = len(signal)
    pad = int(np.ceil(abs(delay_samples))) + 64
    nfft = sp_fft.next_fast_len(n + 2 * pad, real=True)
    x = np.zeros(nfft)
    x[pad:pad + n] = signal.samples
    freqs = np.fft.rfftfreq(nfft)
    shifted = np.fft.irfft(np.fft.rfft(x) * np.exp(-2j * np.pi * freqs * delay_samples), nfft)
    return signal.with_samples(shifted[pad:pad + n])


def shift(samples: np.ndarray, offset: int) -> np.ndarray:
    """Integer shift with zero fill: ``out[n] = samples[n + offset]``."""
    out = np.zeros_like(samples)
    n = samples.shape[0]
    if offset >= 0:
        if offset < n:
            out[:n - offset] = samples[offset:]
    elif -offset < n:
        out[-offset:] = samples[:n + offset]
    return out

"""Synthetic source signals for fixtures.

``speech_like`` produces a syllabic harmonic signal with formant-shaped
spectra, pauses and a few unvoiced bursts. It is not speech, but it has the
envelope statistics that intelligibility and noise-floor estimators key on.
"""
from __future__ import annotations

import numpy as np

from .dsp import AudioBuffer

NOISE_TYPES = ("white", "babble", "tonal")


def _formant_envelope(freqs: np.ndarray, formants, bandwidths) -> np.ndarray:
    env = np.zeros_like(freqs)
    for fc, bw in zip(formants, bandwidths):
        env += 1.0 / (1.0 + ((freqs - fc) / bw) ** 2)
    tilt = 1.0 / np.sqrt(1.0 + (freqs / 500.0) ** 2)
    return env * tilt


def _voiced(n: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    f0_start = rng.uniform(90.0, 220.0)
    f0 = np.linspace(f0_start, f0_start * rng.uniform(0.8, 1.2), n)
    f0 *= 1.0 + 0.01 * np.sin(2 * np.pi * 5.0 * np.arange(n) / rate)
    phase = 2 * np.pi * np.cumsum(f0) / rate
    formants = (rng.uniform(300, 900), rng.uniform(900, 2500), rng.uniform(2400, 3500))
    bandwidths = (rng.uniform(60, 120), rng.uniform(80, 160), rng.uniform(120, 220))
    n_harm = int(0.45 * rate / f0.max())
    k = np.arange(1, n_harm + 1)
    amps = _formant_envelope(k * np.mean(f0), formants, bandwidths)
    offsets = rng.uniform(0, 2 * np.pi, n_harm)
    return (amps[:, None] * np.sin(k[:, None] * phase[None, :] + offsets[:, None])).sum(axis=0)


def _unvoiced(n: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal(n)
    spec = np.fft.rfft(noise)
    f = np.fft.rfftfreq(n, 1.0 / rate)
    lo = rng.uniform(2000, 3500)
    spec *= np.exp(-0.5 * ((f - (lo + 1500)) / 1200.0) ** 2)
    return np.fft.irfft(spec, n)


def speech_like(duration_s: float, rate_hz: int, rng: np.random.Generator,
                peak: float = 0.5) -> AudioBuffer:
    n_total = int(round(duration_s * rate_hz))
    out = np.zeros(n_total)
    pos = int(rng.uniform(0.1, 0.25) * rate_hz)
    while pos < n_total:
        n = int(rng.uniform(0.12, 0.35) * rate_hz)
        n = min(n, n_total - pos)
        if n < int(0.03 * rate_hz):
            break
        unvoiced = rng.uniform() < 0.2
        burst = _unvoiced(n, rate_hz, rng) if unvoiced else _voiced(n, rate_hz, rng)
        burst /= np.max(np.abs(burst)) + 1e-12
        ramp = min(n // 4, int(0.03 * rate_hz))
        env = np.ones(n)
        env[:ramp] = np.sin(0.5 * np.pi * np.arange(ramp) / ramp) ** 2
        env[n - ramp:] = env[:ramp][::-1]
        level = rng.uniform(0.3, 1.0) * (0.5 if unvoiced else 1.0)
        out[pos:pos + n] += level * env * burst
        pos += n + int(rng.uniform(0.04, 0.25) * rate_hz)
    out *= peak / (np.max(np.abs(out)) + 1e-12)
    return AudioBuffer(out, rate_hz)


def white_noise(duration_s: float, rate_hz: int, rng: np.random.Generator) -> AudioBuffer:
    return AudioBuffer(rng.standard_normal(int(round(duration_s * rate_hz))), rate_hz)


def babble(duration_s: float, rate_hz: int, rng: np.random.Generator,
           talkers: int = 12) -> AudioBuffer:
    """Sum of circularly shifted independent speech-like talkers."""
    n = int(round(duration_s * rate_hz))
    out = np.zeros(n)
    for _ in range(talkers):
        talker = speech_like(duration_s, rate_hz, rng).samples
        out += np.roll(talker, int(rng.integers(0, n)))
    return AudioBuffer(out, rate_hz)


def tonal(duration_s: float, rate_hz: int, rng: np.random.Generator,
          tones: int = 3) -> AudioBuffer:
    """A few steady sinusoids with slow amplitude modulation (hum, whine, alarms)."""
    n = int(round(duration_s * rate_hz))
    t = np.arange(n) / rate_hz
    out = np.zeros(n)
    for _ in range(tones):
        f = rng.uniform(250.0, 3000.0)
        am = 1.0 + 0.3 * np.sin(2 * np.pi * rng.uniform(0.5, 3.0) * t + rng.uniform(0, 2 * np.pi))
        out += am * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    return AudioBuffer(out, rate_hz)


def make_noise(kind: str, duration_s: float, rate_hz: int,
               rng: np.random.Generator) -> AudioBuffer:
    if kind == "white":
        return white_noise(duration_s, rate_hz, rng)
    if kind == "babble":
        return babble(duration_s, rate_hz, rng)
    if kind == "tonal":
        return tonal(duration_s, rate_hz, rng)
    raise ValueError(f"unknown noise type {kind!r}; expected one of {NOISE_TYPES}")

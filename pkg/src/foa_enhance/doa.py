"""Direction-of-arrival estimation and angular error arithmetic.

Errors are signed as estimate minus truth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from .dsp import AudioBuffer, StftConfig, stft
from .scene import BFormatScene, Direction, cartesian_to_spherical, spherical_to_cartesian

SPEED_OF_SOUND = 343.0
DEFAULT_BAND_HZ = (200.0, 6000.0)
PHAT_EPS = 1e-12


class NoEstimateError(ValueError):
    """Raised when the input carries no directional energy."""


@dataclass(frozen=True)
class DoaEstimate:
    direction: Direction
    confidence: float


@dataclass(frozen=True)
class AngularError:
    d_azimuth_deg: float
    d_elevation_deg: float
    great_circle_deg: float

    @property
    def abs_d_elevation_deg(self) -> float:
        return abs(self.d_elevation_deg)


def intensity_vector(scene: BFormatScene, config: StftConfig | None = None,
                     band_hz: tuple[float, float] = DEFAULT_BAND_HZ) -> tuple[np.ndarray, float]:
    """Summed Re{conj(W) [X, Y, Z]} over the band, and the summed |W|^2."""
    lo, hi = band_hz
    nyquist = scene.sample_rate_hz / 2.0
    if not 0.0 <= lo < hi <= nyquist:
        raise ValueError(f"band {band_hz} Hz must satisfy 0 <= lo < hi <= {nyquist}")
    specs = [stft(c, config) for c in scene.channels]
    freqs = specs[0].frequencies_hz
    sel = (freqs >= lo) & (freqs <= hi)
    w = specs[0].bins[:, sel]
    vec = np.array([np.sum(np.real(np.conj(w) * s.bins[:, sel])) for s in specs[1:]])
    return vec, float(np.sum(np.abs(w) ** 2))


def pseudo_intensity_doa(scene: BFormatScene, config: StftConfig | None = None,
                         band_hz: tuple[float, float] = DEFAULT_BAND_HZ) -> DoaEstimate:
    vec, w_energy = intensity_vector(scene, config, band_hz)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0 or w_energy == 0.0:
        raise NoEstimateError("zero intensity vector: scene is silent in the analysis band")
    return DoaEstimate(cartesian_to_spherical(*vec), norm / w_energy)


def gcc_phat(a: AudioBuffer, b: AudioBuffer, max_lag_s: float,
             refine: bool = False) -> tuple[float, float]:
    """TDOA of ``b`` relative to ``a`` (positive when ``b`` lags) and the peak height.

    The TDOA is the lag of the largest whitened cross-correlation value, so
    integer delays come back exactly. ``refine=True`` adds a parabolic fit
    through the peak and its neighbours for sub-sample resolution.
    """
    if a.sample_rate_hz != b.sample_rate_hz:
        raise ValueError("gcc_phat inputs must share a sample rate")
    if len(a) != len(b):
        raise ValueError("gcc_phat inputs must have equal length")
    fs = a.sample_rate_hz
    n = len(a)
    max_lag = int(math.floor(max_lag_s * fs))
    if max_lag < 1 or 2 * max_lag > n:
        raise ValueError(f"max lag of {max_lag} samples does not fit a {n}-sample signal")
    if not (np.any(a.samples) and np.any(b.samples)):
        raise NoEstimateError("gcc_phat input is silent")
    nfft = sp_fft.next_fast_len(2 * n, real=True)
    cross = np.conj(np.fft.rfft(a.samples, nfft)) * np.fft.rfft(b.samples, nfft)
    cc = np.fft.irfft(cross / (np.abs(cross) + PHAT_EPS), nfft)
    window = np.concatenate([cc[-max_lag:], cc[:max_lag + 1]])
    k = int(np.argmax(window))
    peak = float(window[k])
    offset = 0.0
    if refine and 0 < k < window.size - 1:
        y0, y1, y2 = window[k - 1], window[k], window[k + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0.0:
            offset = 0.5 * (y0 - y2) / denom
    return (k - max_lag + offset) / fs, peak


def wrap_degrees(angle: float) -> float:
    """Wrap to (-180, 180]."""
    wrapped = math.fmod(angle, 360.0)
    if wrapped <= -180.0:
        wrapped += 360.0
    elif wrapped > 180.0:
        wrapped -= 360.0
    return wrapped


def angular_error(estimate: Direction, truth: Direction) -> AngularError:
    d_az = wrap_degrees(estimate.azimuth_deg - truth.azimuth_deg)
    d_el = estimate.elevation_deg - truth.elevation_deg
    u = np.array(spherical_to_cartesian(estimate))
    v = np.array(spherical_to_cartesian(truth))
    # atan2 form keeps precision at tiny angles where arccos(dot) does not.
    gc = math.degrees(math.atan2(np.linalg.norm(np.cross(u, v)), float(np.clip(u @ v, -1, 1))))
    return AngularError(d_az, d_el, gc)


def endfire_tdoa(spacing_m: float, direction: Direction, axis=(1.0, 0.0, 0.0),
                 speed_of_sound: float = SPEED_OF_SOUND) -> float:
    """Far-field TDOA of a mic displaced by ``spacing_m * axis`` relative to the origin mic.

    Negative when the displaced mic hears the source first.
    """
    u = np.array(spherical_to_cartesian(direction))
    return -spacing_m * float(np.dot(axis, u)) / speed_of_sound

"""First-order ambisonics scenes: encoding, RIR application, mixing, steering.

Conventions: channel order W, X, Y, Z; W carries ``w_gain`` (1/sqrt(2) by
default, traditional B-format). Azimuth is counterclockwise from +X in
[-180, 180), elevation is up from the horizontal plane in [-90, 90].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsp import AudioBuffer, fft_convolve
from .wavio import read_wav, write_wav

W_GAIN = 1.0 / math.sqrt(2.0)
CHANNELS = ("W", "X", "Y", "Z")


@dataclass(frozen=True)
class Direction:
    azimuth_deg: float
    elevation_deg: float

    def __post_init__(self):
        az, el = float(self.azimuth_deg), float(self.elevation_deg)
        if not (math.isfinite(az) and math.isfinite(el)):
            raise ValueError("direction angles must be finite")
        if not -180.0 <= az < 180.0:
            raise ValueError(f"azimuth {az} outside [-180, 180)")
        if not -90.0 <= el <= 90.0:
            raise ValueError(f"elevation {el} outside [-90, 90]")
        object.__setattr__(self, "azimuth_deg", az)
        object.__setattr__(self, "elevation_deg", el)

    @classmethod
    def normalized(cls, azimuth_deg: float, elevation_deg: float) -> "Direction":
        """Fold arbitrary angles into range (elevation past a pole flips the azimuth)."""
        el = (elevation_deg + 180.0) % 360.0 - 180.0
        az = azimuth_deg
        if el > 90.0:
            el, az = 180.0 - el, az + 180.0
        elif el < -90.0:
            el, az = -180.0 - el, az + 180.0
        az = (az + 180.0) % 360.0 - 180.0
        if az >= 180.0:
            az -= 360.0
        return cls(az, el)

    def unit_vector(self) -> np.ndarray:
        return np.array(spherical_to_cartesian(self))


def spherical_to_cartesian(direction: Direction) -> tuple[float, float, float]:
    az = math.radians(direction.azimuth_deg)
    el = math.radians(direction.elevation_deg)
    return (math.cos(az) * math.cos(el), math.sin(az) * math.cos(el), math.sin(el))


def cartesian_to_spherical(x: float, y: float, z: float) -> Direction:
    norm = math.sqrt(x * x + y * y + z * z)
    if norm == 0.0 or not math.isfinite(norm):
        raise ValueError("cannot take the direction of a zero or non-finite vector")
    x, y, z = x / norm, y / norm, z / norm
    el = math.degrees(math.asin(max(-1.0, min(1.0, z))))
    az = math.degrees(math.atan2(y, x))
    return Direction.normalized(az, el)


@dataclass(frozen=True, eq=False)
class BFormatScene:
    w: AudioBuffer
    x: AudioBuffer
    y: AudioBuffer
    z: AudioBuffer

    def __post_init__(self):
        chans = self.channels
        if len({len(c) for c in chans}) != 1:
            raise ValueError("B-format channels must share one length")
        if len({c.sample_rate_hz for c in chans}) != 1:
            raise ValueError("B-format channels must share one sample rate")

    @property
    def channels(self) -> tuple[AudioBuffer, AudioBuffer, AudioBuffer, AudioBuffer]:
        return (self.w, self.x, self.y, self.z)

    @property
    def sample_rate_hz(self) -> int:
        return self.w.sample_rate_hz

    def __len__(self) -> int:
        return len(self.w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BFormatScene):
            return NotImplemented
        return all(a == b for a, b in zip(self.channels, other.channels))

    def as_array(self) -> np.ndarray:
        return np.stack([c.samples for c in self.channels])

    @classmethod
    def from_array(cls, array, sample_rate_hz: int) -> "BFormatScene":
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] != 4:
            raise ValueError(f"expected a (4, n) array, got shape {array.shape}")
        return cls(*(AudioBuffer(row, sample_rate_hz) for row in array))

    def map(self, fn) -> "BFormatScene":
        return BFormatScene(*(fn(c) for c in self.channels))

    def scaled(self, gain: float) -> "BFormatScene":
        return BFormatScene.from_array(self.as_array() * gain, self.sample_rate_hz)


@dataclass(frozen=True, eq=False)
class RirSet:
    h_w: np.ndarray
    h_x: np.ndarray
    h_y: np.ndarray
    h_z: np.ndarray
    rate_hz: int

    def __post_init__(self):
        taps = [np.array(h, dtype=np.float64).reshape(-1) for h in self.taps]
        if len({t.size for t in taps}) != 1 or taps[0].size < 1:
            raise ValueError("RIR channels must be non-empty and of equal length")
        if not all(np.all(np.isfinite(t)) for t in taps):
            raise ValueError("RIR taps must be finite")
        if self.rate_hz <= 0:
            raise ValueError("RIR rate must be positive")
        for name, t in zip(("h_w", "h_x", "h_y", "h_z"), taps):
            t.setflags(write=False)
            object.__setattr__(self, name, t)

    @property
    def taps(self):
        return (self.h_w, self.h_x, self.h_y, self.h_z)

    def __len__(self) -> int:
        return self.h_w.size


def encode_plane_wave(mono: AudioBuffer, direction: Direction,
                      w_gain: float = W_GAIN) -> BFormatScene:
    if len(mono) == 0:
        raise ValueError("cannot encode an empty signal")
    ux, uy, uz = spherical_to_cartesian(direction)
    s = mono.samples
    return BFormatScene(mono.with_samples(w_gain * s), mono.with_samples(ux * s),
                        mono.with_samples(uy * s), mono.with_samples(uz * s))


def apply_rir(mono: AudioBuffer, rir: RirSet) -> BFormatScene:
    if mono.sample_rate_hz != rir.rate_hz:
        raise ValueError(f"rate mismatch: signal {mono.sample_rate_hz} Hz, RIR {rir.rate_hz} Hz")
    return BFormatScene(*(fft_convolve(mono, h) for h in rir.taps))


def _pad_to(scene: BFormatScene, length: int) -> np.ndarray:
    arr = scene.as_array()
    return np.pad(arr, ((0, 0), (0, length - arr.shape[1])))


def snr_gain(speech: BFormatScene, noise: BFormatScene, snr_db: float) -> float:
    """Noise gain that puts the W-channel SNR (over the overlap) at ``snr_db``."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    overlap = min(len(speech), len(noise))
    e_speech = float(np.sum(speech.w.samples[:overlap] ** 2))
    e_noise = float(np.sum(noise.w.samples[:overlap] ** 2))
    if e_noise == 0.0:
        raise ValueError("noise W channel is silent; no finite SNR is reachable")
    return math.sqrt(e_speech / (e_noise * 10.0 ** (snr_db / 10.0)))


def mix_scene(speech: BFormatScene, noise: BFormatScene, snr_db: float) -> BFormatScene:
    """speech + g*noise, shorter scene zero-padded at the tail. ``snr_db=inf`` returns speech."""
    if speech.sample_rate_hz != noise.sample_rate_hz:
        raise ValueError("speech and noise scenes have different sample rates")
    g = snr_gain(speech, noise, snr_db)
    length = max(len(speech), len(noise))
    if g == 0.0:
        return BFormatScene.from_array(_pad_to(speech, length), speech.sample_rate_hz)
    mixed = _pad_to(speech, length) + g * _pad_to(noise, length)
    return BFormatScene.from_array(mixed, speech.sample_rate_hz)


def steer_to_mono(scene: BFormatScene, direction: Direction, pattern_p: float = 0.5,
                  w_gain: float = W_GAIN) -> AudioBuffer:
    """Virtual first-order microphone p*omni + (1-p)*dipole aimed at ``direction``."""
    if not 0.0 <= pattern_p <= 1.0:
        raise ValueError(f"pattern_p must be in [0, 1], got {pattern_p}")
    ux, uy, uz = spherical_to_cartesian(direction)
    w, x, y, z = (c.samples for c in scene.channels)
    m = pattern_p * (w / w_gain) + (1.0 - pattern_p) * (ux * x + uy * y + uz * z)
    return AudioBuffer(m, scene.sample_rate_hz)


def synthetic_rir(direction: Direction, rate_hz: int, rng: np.random.Generator, *,
                  rt60_s: float = 0.3, drr_db: float = 6.0, length_s: float | None = None,
                  w_gain: float = W_GAIN) -> RirSet:
    """Direct plane-wave tap at t=0 plus an exponentially decaying tail.

    Each tail tap arrives from a direction drawn uniformly on the sphere, so
    the tail is diffuse. The tail is scaled so that the W-channel direct to
    reverberant energy ratio equals ``drr_db``.
    """
    length_s = length_s if length_s is not None else rt60_s
    n = max(2, int(round(length_s * rate_hz)))
    start = max(1, int(round(0.0025 * rate_hz)))
    t = np.arange(n) / rate_hz
    amp = rng.standard_normal(n) * np.exp(-3.0 * math.log(10.0) * t / rt60_s)
    amp[:start] = 0.0
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    tail = np.stack([w_gain * amp, amp * v[:, 0], amp * v[:, 1], amp * v[:, 2]])
    tail_energy = float(np.sum(tail[0] ** 2))
    direct_energy = w_gain ** 2
    if tail_energy > 0:
        tail *= math.sqrt(direct_energy / (tail_energy * 10.0 ** (drr_db / 10.0)))
    gains = (w_gain, *spherical_to_cartesian(direction))
    tail[:, 0] += gains
    return RirSet(*tail, rate_hz=rate_hz)


def read_scene(path) -> BFormatScene:
    chans = read_wav(path)
    if len(chans) != 4:
        raise ValueError(f"{path}: expected 4 channels (W, X, Y, Z), found {len(chans)}")
    return BFormatScene(*chans)


def write_scene(path, scene: BFormatScene, bit_depth: int = 16) -> None:
    write_wav(path, scene.channels, scene.sample_rate_hz, bit_depth)


def load_rir(path) -> RirSet:
    chans = read_wav(path)
    if len(chans) != 4:
        raise ValueError(f"{path}: RIR file must have 4 channels, found {len(chans)}")
    return RirSet(*(c.samples for c in chans), rate_hz=chans[0].sample_rate_hz)


def diffuse_scene(sources, w_gain: float = W_GAIN) -> BFormatScene:
    """Isotropic noise field from four independent mono sources.

    For an isotropic field the B-format channels are mutually uncorrelated
    with power ``w_gain**2`` on W and 1/3 on each of X, Y, Z per unit source
    power; each source is scaled to that share.
    """
    if len(sources) != 4:
        raise ValueError("a diffuse field needs four independent sources")
    arr = np.stack([s.samples for s in sources])
    arr[0] *= w_gain
    arr[1:] /= math.sqrt(3.0)
    return BFormatScene.from_array(arr, sources[0].sample_rate_hz)

"""Run configuration (a single JSON document; every field optional)."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from ..doa import DEFAULT_BAND_HZ, SPEED_OF_SOUND
from ..dsp import StftConfig
from ..enhance import BeamformerParams, MaskParams
from ..signals import NOISE_TYPES

PIPELINES = ("noisy-baseline", "siso-per-channel", "siso-shared-mask", "miso-delay-sum")
NOISE_FIELDS = ("diffuse", "directional")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_directions: int = 4
    snrs_db: tuple[float, ...] = (0.0, 5.0, 10.0)
    duration_s: float = 3.0
    sample_rate_hz: int = 16000
    rt60_s: float = 0.3
    drr_db: float = 10.0
    noise_types: tuple[str, ...] = NOISE_TYPES
    noise_field: str = "diffuse"
    mic_b: bool = True
    mic_spacing_m: float = 0.2
    max_abs_elevation_deg: float = 45.0

    def __post_init__(self):
        if self.n_directions < 1:
            raise ConfigError("synth.n_directions must be >= 1")
        if not self.snrs_db:
            raise ConfigError("synth.snrs_db must not be empty")
        if self.duration_s <= 0 or self.sample_rate_hz <= 0:
            raise ConfigError("synth duration and sample rate must be positive")
        unknown = set(self.noise_types) - set(NOISE_TYPES)
        if unknown or not self.noise_types:
            raise ConfigError(f"synth.noise_types must be drawn from {NOISE_TYPES}")
        if self.noise_field not in NOISE_FIELDS:
            raise ConfigError(f"synth.noise_field must be one of {NOISE_FIELDS}")


@dataclass(frozen=True)
class RunConfig:
    stft: StftConfig = field(default_factory=StftConfig)
    mask: MaskParams = field(default_factory=MaskParams)
    beamformer: BeamformerParams = field(default_factory=BeamformerParams)
    pipelines: tuple[str, ...] = PIPELINES
    pattern_p: float = 0.5
    floor_dbfs: float = -80.0
    doa_band_hz: tuple[float, float] = DEFAULT_BAND_HZ
    gcc_max_lag_s: float = 0.001
    speed_of_sound: float = SPEED_OF_SOUND
    jobs: int = 1
    seed: int = 0
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self):
        bad = [p for p in self.pipelines if p not in PIPELINES]
        if bad or not self.pipelines:
            raise ConfigError(f"unknown pipelines {bad}; expected a subset of {PIPELINES}")
        if len(set(self.pipelines)) != len(self.pipelines):
            raise ConfigError("pipelines must not repeat")
        if not 0.0 <= self.pattern_p <= 1.0:
            raise ConfigError("pattern_p must be in [0, 1]")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    def to_dict(self) -> dict:
        return {
            "stft": self.stft.to_dict(),
            "mask": asdict(self.mask),
            "beamformer": asdict(self.beamformer),
            "pipelines": list(self.pipelines),
            "pattern_p": self.pattern_p,
            "floor_dbfs": self.floor_dbfs,
            "doa_band_hz": list(self.doa_band_hz),
            "gcc_max_lag_s": self.gcc_max_lag_s,
            "speed_of_sound": self.speed_of_sound,
            "jobs": self.jobs,
            "seed": self.seed,
            "synth": {k: list(v) if isinstance(v, tuple) else v
                      for k, v in asdict(self.synth).items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        try:
            if "stft" in kwargs:
                kwargs["stft"] = StftConfig(**_section(kwargs["stft"], "stft"))
            if "mask" in kwargs:
                kwargs["mask"] = MaskParams(**_section(kwargs["mask"], "mask"))
            if "beamformer" in kwargs:
                kwargs["beamformer"] = BeamformerParams(**_section(kwargs["beamformer"],
                                                                   "beamformer"))
            if "synth" in kwargs:
                synth = _section(kwargs["synth"], "synth")
                for key in ("snrs_db", "noise_types"):
                    if key in synth:
                        synth[key] = tuple(synth[key])
                kwargs["synth"] = SynthConfig(**synth)
            for key in ("pipelines", "doa_band_hz"):
                if key in kwargs:
                    kwargs[key] = tuple(kwargs[key])
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes) if changes else self


def _section(value, name: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return dict(value)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)

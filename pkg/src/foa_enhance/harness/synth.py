"""Deterministic synthetic dataset: reverberant B-format scenes plus manifest."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..doa import endfire_tdoa
from ..dsp import AudioBuffer, fractional_delay
from ..scene import (BFormatScene, Direction, apply_rir, diffuse_scene, snr_gain,
                     synthetic_rir, write_scene)
from ..signals import make_noise, speech_like
from ..wavio import write_wav
from .config import RunConfig, SynthConfig

PEAK = 0.9


def draw_directions(cfg: SynthConfig, seed: int) -> list[Direction]:
    rng = np.random.default_rng([seed, 0xD1])
    limit = math.sin(math.radians(cfg.max_abs_elevation_deg))
    out = []
    for _ in range(cfg.n_directions):
        az = rng.uniform(-180.0, 180.0)
        el = math.degrees(math.asin(rng.uniform(-limit, limit)))
        out.append(Direction.normalized(az, el))
    return out


def _noise_scene(kind: str, cfg: SynthConfig, n: int, rng: np.random.Generator,
                 source_dir: Direction) -> tuple[BFormatScene, Direction | None]:
    rate = cfg.sample_rate_hz
    if cfg.noise_field == "diffuse":
        srcs = [make_noise(kind, n / rate, rate, rng) for _ in range(4)]
        return diffuse_scene([s.with_samples(s.samples[:n]) for s in srcs]), None
    # Directional: keep the interferer at least 60 degrees from the talker.
    while True:
        az = rng.uniform(-180.0, 180.0)
        el = math.degrees(math.asin(rng.uniform(-0.5, 0.5)))
        noise_dir = Direction.normalized(az, el)
        if np.dot(noise_dir.unit_vector(), source_dir.unit_vector()) < 0.5:
            break
    mono = make_noise(kind, n / rate, rate, rng)
    rir = synthetic_rir(noise_dir, rate, rng, rt60_s=cfg.rt60_s, drr_db=cfg.drr_db)
    scene = apply_rir(mono, rir)
    return BFormatScene.from_array(scene.as_array()[:, :n], rate), noise_dir


def _delayed(scene: BFormatScene, delay_samples: float) -> BFormatScene:
    return scene.map(lambda c: fractional_delay(c, delay_samples))


def render_entry(index: int, direction: Direction, snr_db: float, cfg: SynthConfig,
                 seed: int) -> dict:
    """Build one scene; returns its components (unnormalized) for writing or checking."""
    rng = np.random.default_rng([seed, index])
    rate = cfg.sample_rate_hz
    kind = cfg.noise_types[index % len(cfg.noise_types)]
    speech = speech_like(cfg.duration_s, rate, rng)
    rir = synthetic_rir(direction, rate, rng, rt60_s=cfg.rt60_s, drr_db=cfg.drr_db)
    speech_a = apply_rir(speech, rir)
    n = len(speech_a)
    noise_a, noise_dir = _noise_scene(kind, cfg, n, rng, direction)
    gain = snr_gain(speech_a, noise_a, snr_db)
    noise_a = noise_a.scaled(gain)
    result = {"kind": kind, "speech": speech, "speech_a": speech_a, "noise_a": noise_a,
              "noise_dir": noise_dir, "gain": gain}
    if cfg.mic_b:
        shift_s = endfire_tdoa(cfg.mic_spacing_m, direction)
        speech_b = _delayed(speech_a, shift_s * rate)
        if noise_dir is None:
            noise_b, _ = _noise_scene(kind, cfg, n, rng, direction)
            noise_b = noise_b.scaled(snr_gain(speech_b, noise_b, snr_db))
        else:
            noise_b = _delayed(noise_a, endfire_tdoa(cfg.mic_spacing_m, noise_dir) * rate)
        result.update(speech_b=speech_b, noise_b=noise_b, tdoa_ab_s=shift_s)
    return result


def _mix(speech: BFormatScene, noise: BFormatScene) -> np.ndarray:
    return speech.as_array() + noise.as_array()


def synth_fixtures(config: RunConfig | SynthConfig | None, out_dir, seed: int = 0) -> Path:
    """Write scenes, targets, component stems and ``manifest.json`` to ``out_dir``.

    Entries enumerate directions x SNRs; noise types cycle over entries.
    Returns the manifest path.
    """
    if isinstance(config, RunConfig):
        cfg = config.synth
    else:
        cfg = config or SynthConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rate = cfg.sample_rate_hz
    manifest = []
    for di, direction in enumerate(draw_directions(cfg, seed)):
        for si, snr in enumerate(cfg.snrs_db):
            index = di * len(cfg.snrs_db) + si
            eid = f"scene_{index:03d}"
            parts = render_entry(index, direction, snr, cfg, seed)
            mix_a = _mix(parts["speech_a"], parts["noise_a"])
            peak = np.max(np.abs(mix_a))
            if cfg.mic_b:
                mix_b = _mix(parts["speech_b"], parts["noise_b"])
                peak = max(peak, np.max(np.abs(mix_b)))
            scale = PEAK / peak
            write_scene(out / f"{eid}_mic_a.wav",
                        BFormatScene.from_array(mix_a * scale, rate))
            write_scene(out / f"{eid}_speech_a.wav", parts["speech_a"].scaled(scale), 32)
            write_scene(out / f"{eid}_noise_a.wav", parts["noise_a"].scaled(scale), 32)
            target = parts["speech"].samples
            write_wav(out / f"{eid}_target.wav",
                      [AudioBuffer(target * PEAK / np.max(np.abs(target)), rate)])
            entry = {
                "id": eid,
                "mic_a": f"{eid}_mic_a.wav",
                "target": f"{eid}_target.wav",
                "doa_sph": [direction.azimuth_deg, direction.elevation_deg],
                "snr_db": snr,
                "noise_type": parts["kind"],
                "components": {"speech_a": f"{eid}_speech_a.wav",
                               "noise_a": f"{eid}_noise_a.wav"},
            }
            if cfg.mic_b:
                write_scene(out / f"{eid}_mic_b.wav",
                            BFormatScene.from_array(mix_b * scale, rate))
                entry["mic_b"] = f"{eid}_mic_b.wav"
                entry["tdoa_ab_s"] = parts["tdoa_ab_s"]
            manifest.append(entry)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path

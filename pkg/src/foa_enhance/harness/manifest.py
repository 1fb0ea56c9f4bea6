"""Dataset manifest: a JSON array of entries.

Each entry has ``id``, ``mic_a`` (4-channel WAV), ``target`` (mono WAV) and
optionally ``mic_b`` (4-channel WAV) and one of ``doa_xyz`` ([x, y, z]) or
``doa_sph`` ([azimuth_deg, elevation_deg]). Relative paths resolve against
the manifest's directory. Any other keys are kept in ``meta``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..scene import Direction, cartesian_to_spherical
from ..wavio import WavError, read_wav_info

REQUIRED = ("id", "mic_a", "target")
KNOWN = ("id", "mic_a", "mic_b", "target", "doa_xyz", "doa_sph")


class ManifestError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid manifest:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    mic_a: Path
    target: Path
    mic_b: Path | None = None
    doa_truth: Direction | None = None
    meta: dict = field(default_factory=dict, compare=False)


def _parse_doa(raw: dict, eid: str, problems: list[str]) -> Direction | None:
    if "doa_xyz" in raw and "doa_sph" in raw:
        problems.append(f"{eid}: give doa_xyz or doa_sph, not both")
        return None
    try:
        if "doa_xyz" in raw:
            x, y, z = (float(v) for v in raw["doa_xyz"])
            return cartesian_to_spherical(x, y, z)
        if "doa_sph" in raw:
            az, el = (float(v) for v in raw["doa_sph"])
            if not (math.isfinite(az) and math.isfinite(el)) or abs(el) > 90.0:
                raise ValueError("elevation must lie in [-90, 90]")
            return Direction.normalized(az, el)
    except (TypeError, ValueError) as exc:
        problems.append(f"{eid}: bad DOA ({exc})")
    return None


def _check_files(entry: ManifestEntry, problems: list[str]) -> None:
    rates = set()
    for key, expected in (("mic_a", 4), ("mic_b", 4), ("target", 1)):
        path = getattr(entry, key)
        if path is None:
            continue
        if not path.is_file():
            problems.append(f"{entry.id}: {key} file not found: {path}")
            continue
        try:
            info = read_wav_info(path)
        except WavError as exc:
            problems.append(f"{entry.id}: {key}: {exc}")
            continue
        if info.channels != expected:
            problems.append(f"{entry.id}: {key} has {info.channels} channels, "
                            f"expected {expected}")
        rates.add(info.sample_rate_hz)
    if len(rates) > 1:
        problems.append(f"{entry.id}: inconsistent sample rates {sorted(rates)}")


def parse_manifest(data, base_dir: Path, check_files: bool = True) -> list[ManifestEntry]:
    if not isinstance(data, list):
        raise ManifestError(["manifest must be a JSON array of entries"])
    problems: list[str] = []
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for i, raw in enumerate(data):
        if not isinstance(raw, dict):
            problems.append(f"entry #{i}: not an object")
            continue
        eid = raw.get("id")
        label = eid if isinstance(eid, str) and eid else f"entry #{i}"
        missing = [k for k in REQUIRED if k not in raw]
        if missing:
            problems.append(f"{label}: missing field(s) {missing}")
            continue
        if not isinstance(eid, str) or not eid:
            problems.append(f"{label}: id must be a non-empty string")
            continue
        if eid in seen:
            problems.append(f"{eid}: duplicate id")
            continue
        seen.add(eid)
        paths = {}
        for key in ("mic_a", "mic_b", "target"):
            value = raw.get(key)
            if value is None:
                continue
            if not isinstance(value, str):
                problems.append(f"{eid}: {key} must be a path string")
                continue
            paths[key] = (base_dir / value) if not Path(value).is_absolute() else Path(value)
        if "mic_a" not in paths or "target" not in paths:
            continue
        entry = ManifestEntry(eid, paths["mic_a"], paths["target"], paths.get("mic_b"),
                              _parse_doa(raw, eid, problems),
                              {k: v for k, v in raw.items() if k not in KNOWN})
        if check_files:
            _check_files(entry, problems)
        entries.append(entry)
    if problems:
        raise ManifestError(problems)
    return entries


def load_manifest(path, check_files: bool = True) -> list[ManifestEntry]:
    """Parse and validate a manifest; all offending entries are reported at once."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError([f"cannot read manifest {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ManifestError([f"manifest {path} is not valid JSON: {exc}"]) from exc
    return parse_manifest(data, path.parent, check_files)

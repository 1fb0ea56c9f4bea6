"""Batch evaluation of SISO and MISO pipelines over a manifest."""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..doa import angular_error, gcc_phat, pseudo_intensity_doa
from ..enhance import DegenerateChannelWarning, enhance_miso, enhance_multichannel
from ..metrics import icld_icpd_deviation, stoi
from ..scene import CHANNELS, BFormatScene, read_scene, steer_to_mono
from ..wavio import read_wav
from .config import RunConfig
from .manifest import ManifestEntry

log = logging.getLogger(__name__)

AGGREGATE_METRICS = ("stoi_mono", "stoi_w", "great_circle_deg", "icld_rms_db", "icpd_rms_rad")


@dataclass
class Record:
    entry_id: str
    pipeline: str
    status: str = "ok"
    error: str | None = None
    stoi_channels: dict | None = None
    stoi_mono: float | None = None
    doa: dict | None = None
    truth: dict | None = None
    angular_error: dict | None = None
    spatial: dict | None = None
    tdoa_ab_s: float | None = None

    def metric(self, name: str) -> float | None:
        if self.status != "ok":
            return None
        if name == "stoi_mono":
            return self.stoi_mono
        if name == "stoi_w":
            return None if self.stoi_channels is None else self.stoi_channels["W"]
        if name == "great_circle_deg":
            return None if self.angular_error is None else self.angular_error["great_circle_deg"]
        if name in ("icld_rms_db", "icpd_rms_rad"):
            return None if self.spatial is None else self.spatial[name]
        raise KeyError(name)


@dataclass
class EvalReport:
    records: list[Record]
    aggregates: dict
    entries_processed: int
    entries_failed: int
    config: dict = field(default_factory=dict)
    generated_at: str | None = None

    def to_dict(self) -> dict:
        return {
            "generated_at": self.generated_at,
            "config": self.config,
            "summary": {"entries_processed": self.entries_processed,
                        "entries_failed": self.entries_failed},
            "records": [asdict(r) for r in self.records],
            "aggregates": self.aggregates,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(records=[Record(**r) for r in data["records"]],
                   aggregates=data["aggregates"],
                   entries_processed=data["summary"]["entries_processed"],
                   entries_failed=data["summary"]["entries_failed"],
                   config=data.get("config", {}),
                   generated_at=data.get("generated_at"))


def summarize(values) -> dict:
    vals = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if vals.size == 0:
        return {"count": 0, "mean": None, "median": None, "q1": None, "q3": None}
    q1, median, q3 = np.percentile(vals, [25, 50, 75])
    return {"count": int(vals.size), "mean": float(np.mean(vals)), "median": float(median),
            "q1": float(q1), "q3": float(q3)}


def aggregate(records: list[Record], pipelines) -> dict:
    out = {}
    for pipeline in pipelines:
        rows = [r for r in records if r.pipeline == pipeline]
        out[pipeline] = {m: summarize(r.metric(m) for r in rows) for m in AGGREGATE_METRICS}
    return out


def _scene_metrics(record: Record, before: BFormatScene, after: BFormatScene,
                   target, entry: ManifestEntry, config: RunConfig) -> None:
    record.stoi_channels = {name: stoi(target, chan).value
                            for name, chan in zip(CHANNELS, after.channels)}
    est = pseudo_intensity_doa(after, config.stft, config.doa_band_hz)
    record.doa = {"azimuth_deg": est.direction.azimuth_deg,
                  "elevation_deg": est.direction.elevation_deg,
                  "confidence": est.confidence}
    if entry.doa_truth is not None:
        record.angular_error = asdict(angular_error(est.direction, entry.doa_truth))
    dev = icld_icpd_deviation(before, after, config.stft, config.floor_dbfs)
    record.spatial = asdict(dev)
    mono = steer_to_mono(after, est.direction, config.pattern_p)
    record.stoi_mono = stoi(target, mono).value


def evaluate_entry(entry: ManifestEntry, config: RunConfig) -> list[Record]:
    """All configured pipelines for one entry. Raises on unreadable inputs."""
    scene = read_scene(entry.mic_a)
    target_chans = read_wav(entry.target)
    if len(target_chans) != 1:
        raise ValueError(f"target has {len(target_chans)} channels, expected 1")
    target = target_chans[0]
    if target.sample_rate_hz != scene.sample_rate_hz:
        raise ValueError("target and mic_a sample rates differ")
    tdoa = None
    if entry.mic_b is not None:
        scene_b = read_scene(entry.mic_b)
        if len(scene_b) != len(scene) or scene_b.sample_rate_hz != scene.sample_rate_hz:
            raise ValueError("mic_b does not match mic_a in length or rate")
        tdoa, _ = gcc_phat(scene.w, scene_b.w, config.gcc_max_lag_s)
    truth = None
    if entry.doa_truth is not None:
        truth = {"azimuth_deg": entry.doa_truth.azimuth_deg,
                 "elevation_deg": entry.doa_truth.elevation_deg}
    records = []
    for pipeline in config.pipelines:
        rec = Record(entry.id, pipeline, truth=truth, tdoa_ab_s=tdoa)
        if pipeline == "miso-delay-sum":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateChannelWarning)
                mono = enhance_miso(scene, config.beamformer)
            rec.stoi_mono = stoi(target, mono).value
        else:
            if pipeline == "noisy-baseline":
                after = scene
            else:
                mode = "per-channel" if pipeline == "siso-per-channel" else "shared-mask"
                after = enhance_multichannel(scene, mode, config.mask, config.stft)
            _scene_metrics(rec, scene, after, target, entry, config)
        records.append(rec)
    return records


def _safe_evaluate(args) -> tuple[list[Record], str | None]:
    entry, config = args
    try:
        return evaluate_entry(entry, config), None
    except Exception as exc:  # fail-soft: one bad entry must not abort the batch
        message = f"{type(exc).__name__}: {exc}"
        return [Record(entry.id, p, status="failed", error=message)
                for p in config.pipelines], message


def run_eval(entries: list[ManifestEntry], config: RunConfig | None = None) -> EvalReport:
    config = config or RunConfig()
    ordered = sorted(entries, key=lambda e: e.id)
    work = [(e, config) for e in ordered]
    if config.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_safe_evaluate, work))
    else:
        results = [_safe_evaluate(w) for w in work]
    records: list[Record] = []
    failed = 0
    for entry, (recs, err) in zip(ordered, results):
        if err is not None:
            failed += 1
            log.warning("entry %s failed: %s", entry.id, err)
        records.extend(recs)
    cfg = config.to_dict()
    cfg.pop("jobs")
    return EvalReport(records, aggregate(records, config.pipelines),
                      entries_processed=len(ordered) - failed, entries_failed=failed,
                      config=cfg)

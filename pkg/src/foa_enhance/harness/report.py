"""Report serialisation: CSV (one row per entry and pipeline) and JSON."""
from __future__ import annotations

import csv
import io
import json
import os
from datetime import datetime, timezone
from pathlib import Path

from .evaluate import AGGREGATE_METRICS, EvalReport, Record

CSV_COLUMNS = (
    "entry_id", "pipeline", "status", "error",
    "stoi_mono", "stoi_w", "stoi_x", "stoi_y", "stoi_z",
    "doa_azimuth_deg", "doa_elevation_deg", "doa_confidence",
    "truth_azimuth_deg", "truth_elevation_deg",
    "d_azimuth_deg", "d_elevation_deg", "great_circle_deg",
    "icld_rms_db", "icpd_rms_rad", "active_bin_count", "tdoa_ab_s",
)
AGGREGATE_COLUMNS = ("pipeline", "metric", "count", "mean", "median", "q1", "q3")
FORMATS = ("csv", "json")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def record_row(rec: Record) -> dict:
    row = dict.fromkeys(CSV_COLUMNS)
    row.update(entry_id=rec.entry_id, pipeline=rec.pipeline, status=rec.status,
               error=rec.error, stoi_mono=rec.stoi_mono, tdoa_ab_s=rec.tdoa_ab_s)
    if rec.stoi_channels:
        for ch, value in rec.stoi_channels.items():
            row[f"stoi_{ch.lower()}"] = value
    if rec.doa:
        row.update(doa_azimuth_deg=rec.doa["azimuth_deg"],
                   doa_elevation_deg=rec.doa["elevation_deg"],
                   doa_confidence=rec.doa["confidence"])
    if rec.truth:
        row.update(truth_azimuth_deg=rec.truth["azimuth_deg"],
                   truth_elevation_deg=rec.truth["elevation_deg"])
    if rec.angular_error:
        row.update(rec.angular_error)
    if rec.spatial:
        row.update(rec.spatial)
    return row


def records_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in report.records:
        row = record_row(rec)
        writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def aggregates_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(AGGREGATE_COLUMNS)
    for pipeline, metrics in report.aggregates.items():
        for metric in AGGREGATE_METRICS:
            stats = metrics[metric]
            writer.writerow([pipeline, metric] + [_cell(stats[k]) for k in AGGREGATE_COLUMNS[2:]])
    return buf.getvalue()


def report_json(report: EvalReport, timestamp: str | None = None) -> str:
    data = report.to_dict()
    data["generated_at"] = timestamp
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def _write(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    try:
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def emit_report(report: EvalReport, fmt: str, path, table: str = "records") -> Path:
    """Write ``report`` as CSV or JSON.

    JSON carries records, aggregates and a ``generated_at`` UTC timestamp (the
    only non-deterministic key). CSV writes either the per-record table or the
    aggregate table.
    """
    if fmt == "json":
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        _write(path, report_json(report, stamp))
    elif fmt == "csv":
        if table == "records":
            _write(path, records_csv(report))
        elif table == "aggregates":
            _write(path, aggregates_csv(report))
        else:
            raise ValueError(f"unknown table {table!r}")
    else:
        raise ValueError(f"unknown report format {fmt!r}; expected one of {FORMATS}")
    return Path(path)


def load_report(path) -> EvalReport:
    with open(path, encoding="utf-8") as f:
        return EvalReport.from_dict(json.load(f))


def read_records_csv(path) -> list[dict]:
    """Parse a records CSV back into dicts with floats where numeric."""
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        for raw in csv.DictReader(f):
            row = {}
            for key, value in raw.items():
                if value == "":
                    row[key] = None
                elif key in ("entry_id", "pipeline", "status", "error"):
                    row[key] = value
                elif key == "active_bin_count":
                    row[key] = int(value)
                else:
                    row[key] = float(value)
            rows.append(row)
    return rows

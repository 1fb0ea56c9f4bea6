"""Command line entry point: ``foa-enhance [global flags] <command> ...``.

Exit codes: 0 when every entry was processed, 2 when some entries failed (the
report is still written), 1 on fatal errors such as a bad config or manifest.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .doa import NoEstimateError, gcc_phat, pseudo_intensity_doa
from .enhance import enhance_miso, enhance_multichannel
from .harness.config import ConfigError, RunConfig, load_config
from .harness.evaluate import run_eval
from .harness.manifest import ManifestError, load_manifest
from .harness.report import emit_report, load_report
from .harness.synth import synth_fixtures
from .metrics import StoiError, stoi
from .scene import read_scene, write_scene
from .wavio import WavError, read_wav, write_wav

log = logging.getLogger("foa_enhance")

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


def _emit_rows(rows: list[dict], fmt: str, out) -> None:
    if fmt == "json":
        json.dump(rows if len(rows) != 1 else rows[0], out, indent=2)
        out.write("\n")
        return
    writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def cmd_synth(args, config: RunConfig) -> int:
    path = synth_fixtures(config, args.outdir, seed=config.seed)
    n = len(json.loads(path.read_text(encoding="utf-8")))
    print(f"wrote {n} entries to {path}")
    return EXIT_OK


def cmd_enhance(args, config: RunConfig) -> int:
    scene = read_scene(args.input)
    if args.mode == "miso":
        write_wav(args.output, [enhance_miso(scene, config.beamformer)], bit_depth=args.bit_depth)
    else:
        out = enhance_multichannel(scene, args.mode, config.mask, config.stft, jobs=config.jobs)
        write_scene(args.output, out, bit_depth=args.bit_depth)
    return EXIT_OK


def cmd_doa(args, config: RunConfig) -> int:
    scene = read_scene(args.input)
    est = pseudo_intensity_doa(scene, config.stft, config.doa_band_hz)
    row = {"azimuth_deg": est.direction.azimuth_deg,
           "elevation_deg": est.direction.elevation_deg,
           "confidence": est.confidence}
    if args.mic_b:
        other = read_scene(args.mic_b)
        tdoa, peak = gcc_phat(scene.w, other.w, config.gcc_max_lag_s)
        row.update(tdoa_ab_s=tdoa, gcc_peak=peak)
    _emit_rows([row], args.format, sys.stdout)
    return EXIT_OK


def cmd_score(args, config: RunConfig) -> int:
    clean = read_wav(args.clean)
    if len(clean) != 1:
        raise ValueError(f"{args.clean}: clean reference must be mono")
    rows = [{"channel": i, "stoi": stoi(clean[0], chan).value}
            for i, chan in enumerate(read_wav(args.degraded))]
    _emit_rows(rows, args.format, sys.stdout)
    return EXIT_OK


def cmd_eval(args, config: RunConfig) -> int:
    # File-level problems become per-entry failures; only schema errors are fatal.
    entries = load_manifest(args.manifest, check_files=False)
    report = run_eval(entries, config)
    emit_report(report, args.format, args.out, table=args.table)
    print(f"processed {report.entries_processed}, failed {report.entries_failed}; "
          f"report written to {args.out}")
    return EXIT_PARTIAL if report.entries_failed else EXIT_OK


def cmd_report(args, config: RunConfig) -> int:
    report = load_report(args.report)
    emit_report(report, args.format, args.out, table=args.table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="foa-enhance",
                                description="SISO vs MISO enhancement of B-format scenes.")
    p.add_argument("--config", type=Path, help="JSON run config (all fields optional)")
    p.add_argument("--seed", type=int, help="seed for fixture synthesis")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--format", choices=("csv", "json"), default="json",
                   help="output format (default: json)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic fixture set and manifest")
    s.add_argument("outdir", type=Path)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("enhance", help="enhance one 4-channel B-format WAV")
    s.add_argument("input", type=Path)
    s.add_argument("output", type=Path)
    s.add_argument("--mode", choices=("per-channel", "shared-mask", "miso"),
                   default="per-channel")
    s.add_argument("--bit-depth", type=int, choices=(16, 32), default=16)
    s.set_defaults(func=cmd_enhance)

    s = sub.add_parser("doa", help="pseudo-intensity DOA of a B-format WAV")
    s.add_argument("input", type=Path)
    s.add_argument("--mic-b", type=Path, help="second array; adds the GCC-PHAT W-channel TDOA")
    s.set_defaults(func=cmd_doa)

    s = sub.add_parser("score", help="STOI of every channel of DEGRADED against CLEAN")
    s.add_argument("clean", type=Path)
    s.add_argument("degraded", type=Path)
    s.set_defaults(func=cmd_score)

    for name, helptext, first in (("eval", "run all pipelines over a manifest", "manifest"),
                                  ("report", "re-emit a JSON report as CSV or JSON", "report")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument(first, type=Path)
        s.add_argument("--out", type=Path, required=True)
        s.add_argument("--table", choices=("records", "aggregates"), default="records",
                       help="CSV table to write (ignored for JSON)")
        s.set_defaults(func=cmd_eval if name == "eval" else cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config) if args.config else RunConfig()
        config = config.with_overrides(seed=args.seed, jobs=args.jobs)
        return args.func(args, config)
    except (ConfigError, ManifestError, WavError, StoiError, NoEstimateError,
            OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())

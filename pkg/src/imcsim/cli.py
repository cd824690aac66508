"""Command-line entry point: ``imcsim <subcommand>``.

Exit codes: 0 success, 1 validation error, 2 runtime/solver error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .demo import FixtureError, demo_mlp
from .experiments import rows_to_csv, run_experiments, summarize
from .interconnect import ideal_wire_model
from .mvm import bit_slice
from .solver import SolverError
from .wagonn import wagonn_remap
from .weightfile import WeightFile, WeightFileError, read_xbw, write_xbw

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _config(path: str | None) -> ExperimentConfig:
    return load_config(path) if path else ExperimentConfig()


def cmd_interconnect(args) -> int:
    wm = _config(args.config).wire.model()
    print(json.dumps({
        "r_per_length_ohm_per_um": wm.r_per_length,
        "r_via_ohm": wm.r_via,
        "r_segment_sram_ohm": wm.r_segment_sram,
        "r_segment_fefet_ohm": wm.r_segment_fefet,
        "r_driver_ohm": wm.r_driver,
        "r_sink_ohm": wm.r_sink,
    }, indent=2))
    return EXIT_OK


def cmd_remap(args) -> int:
    wf = read_xbw(args.weights)
    # row-sums count every stored bit, so slice first
    phys = np.concatenate(bit_slice(wf.weights, wf.bits, wf.signed), axis=1)
    _, tv = wagonn_remap(phys)
    out = np.empty_like(wf.weights)
    out[tv.dest] = wf.weights
    write_xbw(args.output, WeightFile(out, wf.bits, wf.signed))
    Path(args.tv).write_text(json.dumps(tv.tolist()) + "\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    rows, reports = run_experiments(cfg, keep_reports=args.summary is not None)
    Path(args.output).write_text(rows_to_csv(rows, deterministic=args.deterministic))
    if args.summary:
        Path(args.summary).write_text(json.dumps(summarize(reports), indent=2) + "\n")
    failed = sum(r["status"] != "ok" for r in rows)
    if failed:
        print(f"{failed} of {len(rows)} trials failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_demo(args) -> int:
    wire = ideal_wire_model() if args.ideal else None
    print(json.dumps(demo_mlp(args.fixture_dir, wire=wire), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="imcsim", description="Crossbar interconnect non-ideality simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("interconnect", help="print the wire model as JSON")
    s.add_argument("-c", "--config")
    s.set_defaults(func=cmd_interconnect)

    s = sub.add_parser("remap", help="WAGONN-remap an XBW weight file")
    s.add_argument("weights")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--tv", required=True, help="tracking vector output (JSON array)")
    s.set_defaults(func=cmd_remap)

    s = sub.add_parser("simulate", help="run an experiment sweep to CSV")
    s.add_argument("-c", "--config", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--deterministic", action="store_true", help="omit the timestamp header")
    s.add_argument("--summary", help="also write aggregate statistics as JSON")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("demo-mlp", help="classify the MLP fixture with Baseline and Wagonn")
    s.add_argument("fixture_dir")
    s.add_argument("--ideal", action="store_true", help="zero all parasitics")
    s.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, WeightFileError, FixtureError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands: predict, scan-delta, scan-angle, density-profile,
transmission-scan.  Each takes an optional YAML config plus a few common
overrides; results are exported as CSV files and a schema-versioned JSON
summary.  Exit code 0 on success; on failure a machine-readable JSON error
goes to stderr (exit 2 for configuration problems, 1 otherwise).
"""
from __future__ import annotations

import argparse
import json
import sys

import yaml

from . import __version__
from .harness import (ConfigError, EXPERIMENTS, ExperimentConfig, dump_config,
                      export, parse_config, run_experiment)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="latticemc",
        description="Semiclassical Monte Carlo of propagation modes in a "
                    "dissipative optical lattice under a moving pump-probe modulation.")
    ap.add_argument("--version", action="version", version=f"latticemc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--seed", type=int, help="override sim.seed")
        p.add_argument("--atoms", type=int, help="override sim.n_atoms")
        p.add_argument("--out", help="override output.dir")
        p.add_argument("--workers", type=int, help="override output.workers")
        p.add_argument("--dump-snapshots", action="store_true",
                       help="also write raw snapshot CSVs (large)")
        if name == "predict":
            p.add_argument("--echo-config", action="store_true",
                           help="print the fully resolved config instead of predictions")
    return ap


def _load(args) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            data = yaml.safe_load(fh) or {}
    else:
        data = {}
    data["experiment"] = args.command
    # CLI overrides
    if args.seed is not None:
        data.setdefault("sim", {})["seed"] = args.seed
    if args.atoms is not None:
        data.setdefault("sim", {})["n_atoms"] = args.atoms
    if args.out is not None:
        data.setdefault("output", {})["dir"] = args.out
    if args.workers is not None:
        data.setdefault("output", {})["workers"] = args.workers
    if args.dump_snapshots:
        data.setdefault("output", {})["dump_snapshots"] = True
    return parse_config(data)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "predict" and getattr(args, "echo_config", False):
            sys.stdout.write(dump_config(cfg))
            return 0
        rec = run_experiment(cfg)
        written = export(rec, cfg.out_dir)
        if args.command == "predict":
            summary_path = [p for p in written if p.suffix == ".json"][0]
            sys.stdout.write(summary_path.read_text())
        else:
            for p in written:
                print(p)
        return 0
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}},
                  sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # runtime failure
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

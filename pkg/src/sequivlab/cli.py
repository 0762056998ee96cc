"""Command line entry point: ``sequivlab <subcommand> --config PATH``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .compare import compare_amplitudes
from .config import bundled_config_names, load_config
from .errors import ConfigError, SequivError
from .experiment import run
from .io import read_matrix_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_SUBSET = {
    "classical-check": ["classical-check"],
    "momentum-check": ["momentum-check"],
    "spectrum": ["spectrum"],
    "lattice": ["lattice-vs-spectral", "lprime-comparison"],
    "run": None,
}


def _summary(report):
    s = {"name": report.name, "partial": report.partial, "errors": report.errors,
         "sub_experiments": report.sub_experiments}
    sec = report.sections
    if "classical-check" in sec:
        s["classical_max_distance"] = sec["classical-check"]["max_distance"]
    for key in ("lattice-vs-spectral", "lprime-comparison"):
        if key in sec:
            s[key] = {k["label"]: {name: r["order"] for name, r in k["references"].items()}
                      for k in sec[key]["kernels"]}
    return s


def _experiment(args, only):
    config = load_config(args.config)
    if args.seed is not None:
        raw = dict(config.raw, seed=args.seed)
        config = dataclasses.replace(config, seed=args.seed, raw=raw)
    out = Path(args.out) if args.out else Path(config.output.dir)
    report = run(config, out, only=only)
    print(json.dumps(_summary(report), indent=2, sort_keys=True))
    print(f"report written to {out / 'report.json'}", file=sys.stderr)
    return EXIT_NUMERIC if report.partial else EXIT_OK


def _compare(args):
    A, ha = read_matrix_csv(args.a)
    B, hb = read_matrix_csv(args.b)
    if abs(ha["dx"] - hb["dx"]) > 1e-12 * ha["dx"]:
        raise ConfigError("matrix dumps were produced on different grids")
    mode = args.mode or ha.get("mode", "real-time")
    interior = None
    if args.interior is not None:
        if not 0 < args.interior <= 1:
            raise ConfigError("--interior must lie in (0, 1]")
        half = 0.5 * (A.shape[0] - 1)
        interior = np.abs(np.arange(A.shape[0]) - half) <= args.interior * half + 1e-12
    metrics = compare_amplitudes(A, B, mode, interior)
    print(json.dumps(metrics.as_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="sequivlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBSET:
        p = sub.add_parser(name, help=f"run the {name} experiment" if name != "run"
                           else "run the full pipeline")
        p.add_argument("--config", required=True,
                       help="config file, or one of: " + ", ".join(bundled_config_names()))
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--verbose", "-v", action="store_true")
    p = sub.add_parser("compare", help="compare two matrix dumps")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--mode", choices=("real-time", "euclidean"))
    p.add_argument("--interior", type=float,
                   help="compare only the central fraction of the nodes")
    p.add_argument("--verbose", "-v", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare":
            return _compare(args)
        return _experiment(args, _SUBSET[args.command])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, KeyError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SequivError, ValueError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

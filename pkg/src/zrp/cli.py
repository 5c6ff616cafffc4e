"""Command-line experiment runner.

Usage::

    zrp <experiment> --config <file.json> [--seed S] [--out DIR]

where ``<experiment>`` is one of hydro, cutoff, predict, coalescence,
equilibrium, exact.  The config file is a JSON document (schema in the
repo README); ``--seed``/``--out`` override the config's values.  Every
run writes CSV artifacts plus sibling ``.meta.json`` files that echo the
full configuration.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zrp",
        description="Reproducible zero-range-process experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for kind in EXPERIMENTS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's root seed")
        p.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    cfg = ExperimentConfig.from_dict(doc, kind=args.experiment,
                                     seed=args.seed, out_dir=args.out)
    result = run_experiment(cfg)
    for key, value in result.items():
        if isinstance(value, str):
            print(f"{key}: {value}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line harness: four experiment families, config file in, CSVs out.

Usage::

    multicause <experiment> --config cfg.yaml --out results/

where <experiment> is one of linear-ignorance, binary-ignorance, estimate,
positivity.  Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .experiments import (
    BinaryIgnoranceConfig,
    ConfigError,
    EstimateConfig,
    LinearIgnoranceConfig,
    NumericalFailure,
    PositivityConfig,
    run_binary_ignorance,
    run_estimate,
    run_linear_ignorance,
    run_positivity,
)

_EXPERIMENTS = {
    "linear-ignorance": (LinearIgnoranceConfig, run_linear_ignorance),
    "binary-ignorance": (BinaryIgnoranceConfig, run_binary_ignorance),
    "estimate": (EstimateConfig, run_estimate),
    "positivity": (PositivityConfig, run_positivity),
}


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        # YAML errors carry line/column marks; keep them in the message.
        raise ConfigError(f"cannot parse {path}: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping of fields")
    return raw


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="multicause",
        description="Deterministic desk-scale experiments on multi-cause ignorance regions.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in _EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="path to the YAML config file")
        sp.add_argument("--out", required=True, help="output directory for CSVs and manifest")
    args = parser.parse_args(argv)

    config_cls, runner = _EXPERIMENTS[args.experiment]
    try:
        raw = _load_config(args.config)
        cfg = config_cls.from_dict(raw)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        files = runner(cfg, Path(args.out), config_echo=raw)
    except NumericalFailure as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    for f in files:
        print(f"wrote {f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

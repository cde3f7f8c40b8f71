#!/usr/bin/env python3
"""Run all four experiments with the repo configs into out/<experiment>/.

Usage: python scripts/run_all.py [out_root]
"""

import sys
from pathlib import Path

from multicause.cli import main

ROOT = Path(__file__).resolve().parent.parent
EXPERIMENTS = {
    "linear-ignorance": "linear_ignorance.yaml",
    "binary-ignorance": "binary_ignorance.yaml",
    "estimate": "estimate.yaml",
    "positivity": "positivity.yaml",
}


def run(out_root: Path) -> int:
    for name, cfg in EXPERIMENTS.items():
        print(f"== {name} ==")
        code = main(
            [name, "--config", str(ROOT / "configs" / cfg), "--out", str(out_root / name)]
        )
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "out"
    raise SystemExit(run(out_root))

#!/usr/bin/env python3
"""Run the closed-system figure families (efficiency-vs-n, efficiency-vs-T,
effort curves, budget contours) for both step and inverse-power weights.

Usage: python scripts/run_closed_figures.py [out_dir]
"""

import sys
from pathlib import Path

from crowdcontest.experiments import load_spec, run_spec

PRESETS = [
    "closed-earliestn-step",
    "closed-earliestn-inverse",
    "closed-termination-step",
    "closed-termination-inverse",
    "closed-linear-step",
]


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results/closed")
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in PRESETS:
        print(f"== {name}")
        for path in run_spec(load_spec(name), out_dir=out_dir):
            print(f"   {path}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Run the open-system (Poisson arrival) figure families.

Usage: python scripts/run_open_figures.py [out_dir]
"""

import sys
from pathlib import Path

from crowdcontest.experiments import load_spec, run_spec

PRESETS = ["open-earliestn-step", "open-termination-step"]


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results/open")
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in PRESETS:
        print(f"== {name}")
        for path in run_spec(load_spec(name), out_dir=out_dir):
            print(f"   {path}")


if __name__ == "__main__":
    main()

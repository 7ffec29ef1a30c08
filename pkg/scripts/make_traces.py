#!/usr/bin/env python3
"""Generate every synthetic joining-time trace preset.

Usage: python scripts/make_traces.py [out_dir] [seed]
"""

import sys
from pathlib import Path

from crowdcontest.experiments import TRACE_PRESETS, gen_trace_preset


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results/traces")
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 42
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in sorted(TRACE_PRESETS):
        print(gen_trace_preset(name, seed, out_dir / f"{name}.csv"))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Generalized-CSF study: efficiency and discrimination-gain surfaces over
(u, beta, v), the gain-maximizing reward ratio per exponent, and the regime
threshold where the efficiency-optimal exponent leaves v = 1.

Usage: python scripts/run_csf_study.py [out_dir]
"""

import sys
from pathlib import Path

from crowdcontest.csf_analysis import (efficiency_vmax_beta_threshold,
                                       optimal_beta_gain)
from crowdcontest.experiments import OutputTable, load_spec, run_spec


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results/csf")
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in run_spec(load_spec("csf-gain-surface"), out_dir=out_dir):
        print(path)

    table = OutputTable(name="gain-maximizers",
                        columns=("v", "u", "beta_star"))
    for v in (0.25, 0.5, 0.75, 1.0):
        table.add(v, float("inf"), optimal_beta_gain(v))
        for u in (2.0, 8.0, 64.0):
            table.add(v, u, optimal_beta_gain(v, u=u))
    path = out_dir / "gain_maximizers.csv"
    table.write(path)
    print(path)
    print(f"efficiency regime threshold beta = "
          f"{efficiency_vmax_beta_threshold():.4f}")


if __name__ == "__main__":
    main()

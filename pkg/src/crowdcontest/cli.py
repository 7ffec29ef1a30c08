"""Command-line experiment runner.

    crowdcontest run <spec-file-or-preset> [--out-dir DIR]
    crowdcontest trace-gen <preset> <seed> <out>
    crowdcontest preset-list

Exit codes: 0 success, 2 configuration error, 3 solver failure (partial
tables are flushed with a failure marker before exiting).
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, SolverError
from .experiments import (PRESETS, TRACE_PRESETS, gen_trace_preset, load_spec,
                          run_spec)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crowdcontest",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment spec or preset")
    run_p.add_argument("spec", help="path to an INI spec file, or a preset name")
    run_p.add_argument("--out-dir", default=".", help="directory for CSV tables")

    gen_p = sub.add_parser("trace-gen", help="emit a synthetic joining-time trace")
    gen_p.add_argument("preset", help=f"one of {sorted(TRACE_PRESETS)}")
    gen_p.add_argument("seed", type=int)
    gen_p.add_argument("out", help="output trace path")

    sub.add_parser("preset-list", help="list experiment and trace presets")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            spec = load_spec(args.spec)
            paths = run_spec(spec, out_dir=args.out_dir)
            for path in paths:
                print(path)
        elif args.command == "trace-gen":
            print(gen_trace_preset(args.preset, args.seed, args.out))
        else:
            print("experiment presets:")
            for name in sorted(PRESETS):
                print(f"  {name}")
            print("trace presets:")
            for name in sorted(TRACE_PRESETS):
                print(f"  {name}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

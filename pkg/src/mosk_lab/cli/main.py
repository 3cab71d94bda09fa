"""Command-line entry point.

Usage::

    mosk-lab run <experiment> [--config FILE] [--set section.key=value]...
                 --out PATH [--format csv|svg] [--seed N]

Exit codes: 0 on success, 2 on configuration errors, 3 when a requested
energy is infeasible for the configured reservoirs.
"""

from __future__ import annotations

import argparse
import sys

from ..thermo import InfeasibleEnergyError
from .config import ConfigError
from .experiments import EXPERIMENTS, ExperimentSpec, run

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mosk-lab",
        description="Molecule-shift-keying link analysis and simulation runner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runner = sub.add_parser("run", help="execute a named experiment")
    runner.add_argument("experiment", choices=sorted(EXPERIMENTS),
                        help="which sweep to execute")
    runner.add_argument("--config", default=None, metavar="FILE",
                        help="flat 'section.key = value' configuration file")
    runner.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one configuration key")
    runner.add_argument("--out", required=True, metavar="PATH",
                        help="output file to write")
    runner.add_argument("--format", dest="fmt", choices=("csv", "svg"), default="csv")
    runner.add_argument("--seed", type=int, default=None,
                        help="master seed for simulator-backed experiments")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    spec = ExperimentSpec(
        name=args.experiment,
        config_path=args.config,
        overrides=args.overrides,
        out=args.out,
        fmt=args.fmt,
        seed=args.seed,
    )
    try:
        table = run(spec)
        table.emit(spec.out, spec.fmt)
    except ConfigError as exc:
        print(f"mosk-lab: configuration error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleEnergyError as exc:
        print(f"mosk-lab: infeasible parameter: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"mosk-lab: cannot write output: {exc}", file=sys.stderr)
        return 2
    print(f"{spec.name}: wrote {len(table.rows)} rows to {spec.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

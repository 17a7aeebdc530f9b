"""Command-line front end.

Subcommands:
  simulate <config>   run a configured simulation and write CSV artifacts
  list-scenarios      print the built-in scenario names
  verify              run the built-in invariant/property suite

Exit codes: 0 success, 2 configuration/usage error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import ConfigError, normalize_model, parse_config, validate_config
from .errors import SolverError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gnexner",
        description="1D DG solver for dispersive shallow-water waves over mobile beds")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a simulation from a config file")
    sim.add_argument("config", help="path to an INI run configuration")
    sim.add_argument("--scenario", help="override the configured scenario")
    sim.add_argument("--model", choices=["nswe", "gn", "coupled", "decoupled"],
                     help="override the model variant")
    sim.add_argument("--out-dir", help="override the output directory")
    sim.add_argument("--end-time", type=float, help="override the end time (s)")
    sim.add_argument("--dt", type=float, help="override the fixed step size (s)")
    sim.add_argument("--cfl", type=float, help="override with adaptive CFL stepping")
    sim.add_argument("--quiet", action="store_true", help="suppress progress output")

    sub.add_parser("list-scenarios", help="print the built-in scenarios")

    ver = sub.add_parser("verify", help="run the built-in property suite")
    ver.add_argument("--quiet", action="store_true", help="print only failures")
    return parser


def _apply_cli_overrides(config, args):
    updates = {}
    if args.scenario:
        from .scenarios import default_config
        base = default_config(args.scenario)
        carried = {"out_dir": config.out_dir}
        config = replace(base, **carried)
    if args.model:
        updates["model"] = normalize_model(args.model)
    if args.out_dir:
        updates["out_dir"] = args.out_dir
    if args.end_time is not None:
        updates["end_time"] = args.end_time
    if args.dt is not None and args.cfl is not None:
        raise ConfigError(["--dt and --cfl are mutually exclusive"])
    if args.dt is not None:
        updates.update(dt=args.dt, cfl=None)
    if args.cfl is not None:
        updates.update(cfl=args.cfl, dt=None)
    config = replace(config, **updates)
    validate_config(config)
    return config


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        from .scenarios import SCENARIO_NAMES
        for name in SCENARIO_NAMES:
            print(name)
        return 0

    if args.command == "verify":
        from .verify import run_all
        results = run_all()
        failures = 0
        for res in results:
            if not res.passed:
                failures += 1
            if not res.passed or not args.quiet:
                status = "PASS" if res.passed else "FAIL"
                print(f"{status}  {res.name}  ({res.detail})")
        print(f"{len(results) - failures}/{len(results)} checks passed")
        return 0 if failures == 0 else 1

    if args.command == "simulate":
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
        try:
            config = parse_config(text)
            config = _apply_cli_overrides(config, args)
        except ConfigError as exc:
            for msg in exc.messages:
                print(f"config error: {msg}", file=sys.stderr)
            return 2
        from .simulate import run
        try:
            result = run(config, quiet=args.quiet)
        except SolverError as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            return 3
        if not args.quiet:
            m = result.manifest
            print(f"completed {m['steps_total']} steps; "
                  f"water mass {m['initial_water_mass']:.6g} -> {m['final_water_mass']:.6g}")
            if config.out_dir:
                print(f"artifacts written to {config.out_dir}")
        return 0

    parser.error(f"unknown command {args.command!r}")  # pragma: no cover
    return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

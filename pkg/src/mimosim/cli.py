"""Command-line front end for the experiment registry.

Precedence for every setting is: command-line flag, then the TOML config
file's per-experiment table, then the registry default.  Exit codes: 0 on
success, 2 for configuration errors (unknown experiment/override keys,
malformed values), 3 when a Monte-Carlo precision target was requested
but not met.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .capacity import MonteCarloError
from .experiments import ExperimentSpec, InvalidConfigError, describe, experiment_ids, run, validate

_RESERVED_CONFIG_KEYS = ("seed", "trials")


def _parse_set(values) -> dict:
    out = {}
    for item in values or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise InvalidConfigError(f"--set expects key=value, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw  # bare strings (e.g. combiner=mmse)
    return out


def _load_config(path, experiment_id: str) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfigError(f"malformed TOML in {path}: {exc}") from exc
    table = data.get(experiment_id, {})
    if not isinstance(table, dict):
        raise InvalidConfigError(f"[{experiment_id}] in {path} must be a table")
    return table


def _build_spec(args) -> ExperimentSpec:
    table = _load_config(args.config, args.experiment)
    overrides = {k: v for k, v in table.items() if k not in _RESERVED_CONFIG_KEYS}
    overrides.update(_parse_set(args.set))
    seed = args.seed if args.seed is not None else table.get("seed", 42)
    trials = args.trials if args.trials is not None else table.get("trials")
    return ExperimentSpec(
        id=args.experiment,
        overrides=overrides,
        trials=trials,
        seed=int(seed),
        out_dir=getattr(args, "out", None),
    )


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimo-sim",
        description="Monte-Carlo experiments for massive MIMO with transceiver impairments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--experiment", required=True, help="experiment id (see `mimo-sim list`)")
    common.add_argument("--config", type=Path, default=None, help="TOML file with per-experiment tables")
    common.add_argument("--seed", type=int, default=None, help="root seed (unsigned 64-bit)")
    common.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials per point")
    common.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one experiment parameter (repeatable; value is JSON or a bare string)",
    )

    p_run = sub.add_parser("run", parents=[common], help="run an experiment, write CSV + PNG")
    p_run.add_argument("--out", type=Path, default=None, help="output directory (default: print CSV)")
    sub.add_parser("validate", parents=[common], help="echo the resolved configuration, no sampling")
    sub.add_parser("list", help="list registered experiments")

    return parser


def main(argv=None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        if args.command == "list":
            for exp_id in experiment_ids():
                print(f"{exp_id:20s} {describe(exp_id)}")
            return 0
        spec = _build_spec(args)
        if args.command == "validate":
            for line in validate(spec):
                print(line)
            return 0
        table = run(spec)
        if spec.out_dir is None:
            sys.stdout.write(table.to_csv())
        else:
            out = Path(spec.out_dir)
            print(f"wrote {out / (spec.id + '.csv')} and {out / (spec.id + '.png')}")
        if table.wall_time_s is not None:
            print(f"# wall time: {table.wall_time_s:.2f} s", file=sys.stderr)
        return 0
    except (InvalidConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MonteCarloError as exc:
        print(f"error: Monte-Carlo precision target not met: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())

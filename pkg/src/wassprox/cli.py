"""Command line entry point: ``wassprox run|list-scenarios|validate``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .errors import ConfigError
from .runner import load_config, run_scenario
from .scenarios import SCENARIOS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _config_error(exc):
    print(json.dumps({"error": "config", "code": exc.code, "message": str(exc)}), file=sys.stderr)
    return EXIT_CONFIG


def cmd_run(args):
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative", "bad_value")
            cfg = replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = replace(cfg, out=args.out)
    except ConfigError as exc:
        return _config_error(exc)
    try:
        status, info = run_scenario(cfg)
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    if status != EXIT_OK:
        print(json.dumps({key: info[key] for key in ("k", "error", "message")}), file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{cfg.scenario}: {info['steps']} steps written to {cfg.out}")
    return EXIT_OK


def cmd_list(args):
    for name, scenario in SCENARIOS.items():
        print(f"{name:15s} {scenario.description}")
    return EXIT_OK


def cmd_validate(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _config_error(exc)
    sys.stdout.write(cfg.to_text())
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="wassprox", description="Wasserstein proximal density propagation")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="propagate a scenario and write artifacts")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.set_defaults(func=cmd_run)

    ls = sub.add_parser("list-scenarios", help="list registered scenarios")
    ls.set_defaults(func=cmd_list)

    val = sub.add_parser("validate", help="check a config and print it with defaults filled in")
    val.add_argument("--config", required=True)
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which doubles as our config code
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

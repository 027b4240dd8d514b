"""Command-line interface: run experiments, validate configs, replay trials.

Exit codes: 0 success, 1 configuration/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigurationError
from .harness import (
    ExperimentConfig,
    RunManifest,
    config_from_dict,
    config_to_dict,
    load_config,
    replay_trial,
    run_experiment,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser that reports usage problems instead of exiting."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def default_config_path() -> Path:
    """Path of the bundled default experiment configuration."""
    return Path(str(resources.files("smoothbandit").joinpath("data/default.yaml")))


def _build_parser() -> _Parser:
    parser = _Parser(prog="smoothbandit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and persist its outputs")
    run.add_argument("--config", help="YAML config file (defaults to the bundled config)")
    run.add_argument("--seed", type=int, help="override base_seed")
    run.add_argument("--trials", type=int, help="override trial count")
    run.add_argument("--variants", help="comma-separated subset of mle,veb,useb,dseb")
    run.add_argument("--out", help="override output directory")
    run.add_argument("--parallelism", type=int, help="override worker count")

    val = sub.add_parser("validate", help="parse a config and report the result")
    val.add_argument("--config", help="YAML config file (defaults to the bundled config)")

    rep = sub.add_parser("replay", help="re-run one trial from a manifest")
    rep.add_argument("--manifest", required=True, help="manifest.json of a finished run")
    rep.add_argument("--trial", required=True, type=int, help="trial index to replay")
    rep.add_argument("--out", help="directory for the replayed rows")
    return parser


def _load(args) -> ExperimentConfig:
    path = args.config if args.config is not None else default_config_path()
    config = load_config(path)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["base_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "variants", None) is not None:
        overrides["variants"] = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    if getattr(args, "out", None) is not None:
        overrides["output_dir"] = args.out
    if getattr(args, "parallelism", None) is not None:
        overrides["parallelism"] = args.parallelism
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def cli(argv=None) -> int:
    """Entry point; returns the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help lands here with code 0
        return int(exc.code or 0)

    try:
        if args.command == "validate":
            config = _load(args)
            print(yaml.safe_dump(config_to_dict(config), sort_keys=False), end="")
            print("config ok")
            return EXIT_OK
        if args.command == "run":
            config = _load(args)
            manifest, summary = run_experiment(config)
            print(f"wrote {', '.join(sorted(manifest.outputs.values()))} to {config.output_dir}")
            return EXIT_OK
        if args.command == "replay":
            manifest_path = Path(args.manifest)
            if not manifest_path.exists():
                raise ConfigurationError(f"manifest not found: {manifest_path}")
            manifest = RunManifest.from_json(manifest_path.read_text())
            out_dir = args.out or manifest_path.parent / f"replay_trial{args.trial}"
            written = replay_trial(manifest, args.trial, out_dir)
            print("wrote " + ", ".join(str(p) for p in written))
            return EXIT_OK
        raise _UsageError(f"unknown command {args.command!r}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(cli())


if __name__ == "__main__":
    main()

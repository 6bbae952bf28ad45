"""Command-line entry point: ``covqec <mode> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import MODES, ExperimentConfig, InvariantViolation, run
from .sectors import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3

# flag name -> ExperimentConfig field
_FIELDS = {
    "n_range": "n_range", "k": "k", "t": "t", "alpha": "alpha_rule", "seeds": "seeds",
    "seed": "master_seed", "out": "output_path", "format": "output_format",
    "p": "p", "workers": "workers", "fit_window": "fit_window",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covqec",
                                     description="Random charge-conserving code experiments.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", type=Path, help="JSON file with config fields")
        p.add_argument("--n-range", dest="n_range",
                       help='"6,8,10", "20:400" or "20:400:20" (log spaced)')
        p.add_argument("--k", type=int)
        p.add_argument("--t", type=int)
        p.add_argument("--alpha", help='integer or fraction of n such as "n/2"')
        p.add_argument("--seeds", type=int)
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--p", type=float, help="per-qubit erasure probability (mixed)")
        p.add_argument("--workers", type=int)
        p.add_argument("--fit-window", dest="fit_window", type=int, nargs=2,
                       metavar=("NMIN", "NMAX"))
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if args.config is not None:
        try:
            values.update(json.loads(args.config.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if "alpha" in values:
            values["alpha_rule"] = values.pop("alpha")
    for flag, name in _FIELDS.items():
        v = getattr(args, flag)
        if v is not None:
            values[name] = v
    values["mode"] = args.mode
    if "n_range" not in values:
        raise ConfigError("--n-range is required")
    try:
        config = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(f"bad value: {exc}") from exc
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        result = run(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    path = result.write()
    if path is None:
        sys.stdout.write(result.render())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

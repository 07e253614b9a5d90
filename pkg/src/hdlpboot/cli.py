"""Command line entry point: ``hdlpboot --dgp toeplitz --d 100 --n 100 ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, HdlpbootError
from .simharness import SimConfig, resolve_workers, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

REQUIRED = ("dgp", "d", "n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hdlpboot", description="Size and power curves for l_p-norm bootstrap tests.")
    ap.add_argument("--config", help="JSON file with SimConfig fields; flags override it")
    ap.add_argument("--dgp", choices=["equicorr", "toeplitz", "banded", "t4toeplitz", "gaussian"])
    ap.add_argument("--d", type=int)
    ap.add_argument("--n", type=int)
    ap.add_argument("--B", type=int)
    ap.add_argument("--reps", type=int)
    ap.add_argument("--stat", help="l2|linf|logt|w|v|student-l2|student-linf|postsel:<p>:<B>")
    ap.add_argument("--method", help="gaussian|spherical[:s]|multiplier")
    ap.add_argument("--cov", help="naive|threshold[:lambda]|band[:k]")
    ap.add_argument("--alpha", help='comma list or "grid99"')
    ap.add_argument("--alt", help="s:delta[:support-seed]")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int, help="default: $HDLPBOOT_WORKERS or 1")
    ap.add_argument("--out", help="output path (default stdout)")
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    return ap


def config_from_args(args: argparse.Namespace) -> SimConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    for key in ("dgp", "d", "n", "B", "reps", "stat", "method", "cov", "alpha", "alt", "seed", "workers"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    missing = [k for k in REQUIRED if k not in data]
    if missing:
        raise ConfigError("missing required flags: " + ", ".join("--" + k for k in missing))
    data["workers"] = resolve_workers(data.get("workers"))
    return SimConfig.from_dict(data)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = config_from_args(args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"hdlpboot: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        curve = run_experiment(cfg)
    except ConfigError as exc:
        print(f"hdlpboot: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HdlpbootError, ArithmeticError) as exc:
        print(f"hdlpboot: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = curve.to_csv() if args.format == "csv" else curve.to_json()
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"hdlpboot: error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

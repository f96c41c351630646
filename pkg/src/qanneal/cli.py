"""Command line entry point: ``qanneal <subcommand> [--config PATH] [--out DIR] [--seed U64] [--workers K]``.

Exit codes: 0 success, 2 configuration error, 3 oracle-limit error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .harness import (KINDS, ConfigError, ExperimentConfig, OracleLimitError, audit,
                      emit_plot_data, read_summary, run_experiment)
from .records import fmt

EXIT_OK, EXIT_CONFIG, EXIT_ORACLE = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qanneal", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for kind in KINDS:
        s = sub.add_parser(kind, help=f"run a {kind} experiment from a config file")
        s.add_argument("--config", required=True, metavar="PATH")
        s.add_argument("--out", metavar="DIR")
        s.add_argument("--seed", type=_u64, metavar="U64", help="override the config seed")
        s.add_argument("--workers", type=int, default=1, metavar="K")
    s = sub.add_parser("plotdata", help="emit x/y/stderr columns from a result directory")
    s.add_argument("--out", required=True, metavar="DIR")
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--group-by", dest="group_by")
    s.add_argument("--config", metavar="PATH", help="accepted for symmetry; unused")
    s = sub.add_parser("audit", help="check a result directory against its manifest")
    s.add_argument("--out", required=True, metavar="DIR")
    s.add_argument("--config", metavar="PATH", help="also check the hash against this config")
    return p


def _print_summary(out_dir) -> None:
    cols = read_summary(out_dir)
    names = list(cols)
    print("\t".join(names))
    for row in zip(*(cols[k] for k in names)):
        print("\t".join(v if isinstance(v, str) else fmt(v) for v in row))


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    try:
        if args.command == "audit":
            problems = audit(args.out)
            if args.config:
                from .harness import ResultManifest
                from pathlib import Path

                cfg = ExperimentConfig.load(args.config)
                man = ResultManifest.load(Path(args.out) / "manifest.json")
                if cfg.config_hash() != man.config_hash:
                    problems.append("supplied config does not match the manifest hash")
            for msg in problems:
                print(msg)
            print("audit: ok" if not problems else f"audit: {len(problems)} problem(s)")
            return EXIT_OK if not problems else 1
        if args.command == "plotdata":
            for path in emit_plot_data(args.out, args.x, args.y, args.group_by):
                print(path)
            return EXIT_OK
        cfg = ExperimentConfig.load(args.config)
        if cfg.kind != args.command:
            raise ConfigError(f"config kind {cfg.kind!r} does not match subcommand {args.command!r}")
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        out = args.out or cfg.out or "results"
        man = run_experiment(cfg, out, workers=args.workers)
        print(f"config_hash\t{man.config_hash}")
        print(f"manifest\t{out}/manifest.json")
        _print_summary(out)
        return EXIT_OK
    except OracleLimitError as exc:
        print(f"oracle limit: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

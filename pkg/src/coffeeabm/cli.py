"""Command-line entry point: ``python -m coffeeabm {run,sweep,cases,show}``.

Exit codes: 0 success, 1 usage error (bad flags, unknown case), 2 config
error (unreadable or invalid config file), 3 I/O error (output not
writable).  The default output directory is taken from ``COFFEEABM_OUT``
and falls back to ``./runs``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .batch import run_batch
from .scenario import builtin_cases, get_case, sweep_composition, sweep_for

EXIT_USAGE, EXIT_CONFIG, EXIT_IO = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _resolve(target: str):
    """A built-in case label or a path to a YAML config."""
    path = Path(target)
    if path.suffix in (".yaml", ".yml") or path.exists():
        return io.load_config(path)
    try:
        return get_case(target)
    except KeyError as e:
        raise UsageError(str(e)) from None


def _apply(cfg, args):
    changes = {}
    if args.runs is not None:
        changes["replications"] = args.runs
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    try:
        return cfg.with_(**changes) if changes else cfg
    except ValueError as e:
        raise UsageError(str(e)) from None


def _batch(cfg, args):
    return run_batch(cfg, keep_frames=args.raw, workers=args.workers)


def cmd_run(args) -> int:
    cfg = _apply(_resolve(args.case), args)
    out = Path(args.out) if args.out else io.default_out_dir() / cfg.label
    stats = _batch(cfg, args)
    bundle = io.write_bundle(out, cfg, stats, raw=args.raw)
    print(bundle.ensemble)
    return 0


def cmd_sweep(args) -> int:
    base = _apply(_resolve(args.base), args)
    try:
        configs = sweep_for(base, args.kind)
    except ValueError as e:
        raise UsageError(str(e)) from None
    out = Path(args.out_dir) if args.out_dir else io.default_out_dir() / f"{base.label}-{args.kind}"
    extra = {"sweep": args.kind, "sweep_base": base.label}
    if args.kind == "full":
        extra["composition"] = sweep_composition(configs)
    dirs = []
    for cfg in configs:
        stats = _batch(cfg, args)
        bundle = io.write_bundle(out / cfg.label, cfg, stats, raw=args.raw, extra=extra)
        dirs.append(bundle.directory)
        print(bundle.ensemble)
    index = io.write_sweep_index(out / "index.csv", configs, dirs)
    print(index)
    return 0


def cmd_cases(args) -> int:
    for c in builtin_cases():
        print(f"{c.label}  {c.description}")
    return 0


def cmd_show(args) -> int:
    sys.stdout.write(io.dump_config(_resolve(args.case)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coffeeabm", description="Coffee value-chain agent-based simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def batch_flags(sp):
        sp.add_argument("--runs", type=int, help="replications (default: from config)")
        sp.add_argument("--seed", type=int, help="base seed; run i uses seed + i")
        sp.add_argument("--horizon", type=int, help="ticks per run")
        sp.add_argument("--raw", action="store_true", help="also write one wide CSV per run")
        sp.add_argument("--workers", type=int, default=1, help="worker processes")

    r = sub.add_parser("run", help="run a case or config file as a seeded ensemble")
    r.add_argument("case", help="case1..case5 or a .yaml config")
    r.add_argument("--out", help="output directory")
    batch_flags(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run every scenario of a parameter sweep")
    s.add_argument("base", help="base case label or .yaml config")
    s.add_argument("--kind", required=True, choices=("demand", "weight", "full"))
    s.add_argument("--out-dir", help="directory for the bundles and index.csv")
    batch_flags(s)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("cases", help="list the built-in cases")
    c.set_defaults(func=cmd_cases)

    sh = sub.add_parser("show", help="print a case or config as YAML")
    sh.add_argument("case")
    sh.set_defaults(func=cmd_show)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"coffeeabm: {e}", file=sys.stderr)
        return EXIT_USAGE
    except io.ConfigError as e:
        print(f"coffeeabm: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"coffeeabm: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

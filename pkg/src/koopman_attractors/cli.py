"""Command line interface: ``koopattr {run,verify-oracle,list-builtins}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, bundled_configs, load_config
from .flow import BUILTINS, builtin, candidate_names


def _resolve_config(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    bundled = bundled_configs()
    stem = p.stem if p.suffix else arg
    if stem in bundled:
        return bundled[stem]
    return p


def _cmd_run(args) -> int:
    from .runner import run

    path = _resolve_config(args.config)
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        print(f"invalid config {path}: {exc}", file=sys.stderr)
        return 2
    res = run(cfg, args.out, use_cache=not args.no_cache, threads=args.threads)
    summary = res.report["summary"]
    for key, status in sorted(summary["statuses"].items()):
        print(f"{key}: {status}")
    for e in res.report["experiments"]:
        for est in e["estimates"]:
            extra = ""
            if "hausdorff_to_reference" in est:
                extra = f"  hausdorff to {est['reference']} = {est['hausdorff_to_reference']:.4g}"
            print(f"{e['name']}/{est['label']}: {est['n_points']} points{extra}")
        for err in e["errors"]:
            print(f"{e['name']}: ERROR {err}", file=sys.stderr)
    if "oracle" in res.report:
        o = res.report["oracle"]
        print(f"oracle: {o['n_systems']} systems, {o['n_pairs']} (system, M) pairs, "
              f"{o['n_mismatches']} mismatches")
    print(f"report written to {Path(args.out) / 'report.json'}")
    return res.exit_code


def _cmd_verify_oracle(args) -> int:
    from .runner import verify_oracle

    doc, code = verify_oracle(args.systems, args.max_n, args.seed, args.out)
    o = doc["oracle"]
    for name, count in sorted(o["checks"].items()):
        unit = "systems" if name in ("minimal_sets", "ideals") else "(system, M) pairs"
        print(f"{name}: {count} {unit} checked")
    print(f"{o['n_systems']} systems, {o['n_pairs']} pairs, {o['n_mismatches']} mismatches")
    return code


def _cmd_list_builtins(args) -> int:
    for name in sorted(BUILTINS):
        _, f = builtin(name)
        print(f"{name}: {f.description}")
        print(f"    space: {f.space}; sets: {', '.join(candidate_names(f))}")
    bundled = bundled_configs()
    if bundled:
        print("bundled configs: " + ", ".join(p.name for p in bundled.values()))
    return 0


def _global_options(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--out", default=d("out"), help="output directory (default: ./out)")
    p.add_argument("--threads", type=int, default=d(None), help="worker threads")
    p.add_argument("--no-cache", action="store_true", default=d(False),
                   help="do not persist orbit summaries")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="koopattr", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(p, suppress=False)
    # global options are accepted after the subcommand as well
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    r = add("run", help="run a configuration file")
    r.add_argument("config", help="config path or bundled config name (e.g. hilmy.cfg)")
    r.set_defaults(func=_cmd_run)

    o = add("verify-oracle", help="exact proposition checks on random finite systems")
    o.add_argument("--systems", type=int, default=1000)
    o.add_argument("--max-n", type=int, default=12)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=_cmd_verify_oracle)

    b = add("list-builtins", help="list built-in flows and candidate sets")
    b.set_defaults(func=_cmd_list_builtins)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "max_n", 12) < 2 or getattr(args, "systems", 1) < 1:
        parser.error("--systems must be >= 1 and --max-n >= 2")
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

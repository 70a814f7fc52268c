"""Command-line front end: ``detoffload run | sweep | oracle-check | check-constraints | config``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import yaml

from . import __version__
from .config import SCHEMES, ConfigError, ScenarioConfig, load_config, parse_value
from .experiment import default_jobs, oracle_check, run, run_seed, sweep, write_oracle_rows, write_run
from .solvers import InstanceTooLarge

log = logging.getLogger("detoffload")


def _parse_set(items: Sequence[str]) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(item, "overrides take the form key.path=value")
        out[key.strip()] = parse_value(value)
    return out


def _seeds(args) -> tuple[int, ...] | None:
    if args.seeds is None and args.seed is None:
        return None
    start = args.seed if args.seed is not None else 0
    return tuple(range(start, start + (args.seeds or 1)))


def resolve_config(args) -> ScenarioConfig:
    overrides = _parse_set(args.set)
    seeds = _seeds(args)
    if seeds is not None:
        overrides["seeds"] = list(seeds)
    if getattr(args, "scheme", None):
        overrides["scheme"] = args.scheme
    return load_config(args.config, overrides)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML scenario file; omitted fields keep the built-in defaults")
    p.add_argument("--seed", type=int, help="first master seed (default 0)")
    p.add_argument("--seeds", type=int, metavar="N", help="number of consecutive seeds")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field, e.g. --set tasks.task_count=35 (repeatable)")
    p.add_argument("--quiet", action="store_true", help="only print errors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="detoffload", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve, simulate and score one scenario over its seeds")
    _common(p)
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--out", type=Path, help="directory for metrics.csv and the other tables")
    p.add_argument("--trace", action="store_true", help="also write the per-slot engine trace")

    p = sub.add_parser("sweep", help="run the Cartesian product of task counts, SINRs and schemes")
    _common(p)
    p.add_argument("--tasks", type=int, nargs="+", help="task counts")
    p.add_argument("--sinr", type=float, nargs="+", help="parent-link mean SINRs in dB")
    p.add_argument("--schemes", nargs="+", choices=SCHEMES, help="schemes to compare")
    p.add_argument("--axis", action="append", default=[], metavar="KEY=V1,V2",
                   help="any other config field to sweep (repeatable)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--jobs", type=int, default=1, help=f"worker processes (this machine has {default_jobs()})")
    p.add_argument("--trace", action="store_true")

    p = sub.add_parser("oracle-check", help="compare the GA against exhaustive search on small instances")
    _common(p)
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--out", type=Path, help="write oracle.csv here")

    p = sub.add_parser("check-constraints", help="simulate with engine assertions on and report every constraint")
    _common(p)
    p.add_argument("--scheme", choices=SCHEMES)

    p = sub.add_parser("config", help="print the resolved configuration as YAML")
    _common(p)
    p.add_argument("--scheme", choices=SCHEMES)
    return parser


def sweep_axes(args) -> dict:
    axes = {}
    if args.tasks:
        axes["tasks.task_count"] = args.tasks
    if args.sinr:
        axes["topology.parent_sinr_db"] = args.sinr
    if args.schemes is not None:
        axes["scheme"] = args.schemes
    for item in args.axis:
        key, sep, values = item.partition("=")
        if not sep:
            raise ConfigError(item, "sweep axes take the form key.path=v1,v2")
        axes[key] = [parse_value(v) for v in values.split(",") if v.strip()]
    return axes


def _print_summary(res) -> None:
    agg = res.aggregate
    print(f"fingerprint {res.fingerprint}  scheme {res.config.scheme}  seeds {len(res.outcomes)}")
    for key in ("satisfied_ratio", "comm_saturation", "compute_saturation", "makespan", "budget_below_0.6"):
        print(f"  {key:<20} {agg[key + '_mean']:.4f} +/- {agg[key + '_std']:.4f}")


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    res = run(cfg, trace=args.trace)
    if args.out:
        write_run(res, args.out, trace=args.trace)
        log.info("wrote %s", args.out)
    if not args.quiet:
        _print_summary(res)
    return 0


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    status = sweep(cfg, sweep_axes(args), args.out, jobs=args.jobs, trace=args.trace)
    failed = {fp: err for fp, err in status.items() if err}
    for fp, err in failed.items():
        log.error("cell %s failed: %s", fp, err)
    if not args.quiet:
        print(f"{len(status) - len(failed)} of {len(status)} cells complete; tables in {args.out}")
    return 1 if failed else 0


def cmd_oracle(args) -> int:
    cfg = resolve_config(args)
    rows = oracle_check(cfg)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        write_oracle_rows(rows, args.out / "oracle.csv")
    better = [r for r in rows if r.ga_fitness < r.oracle_fitness - 1e-9 and r.exact]
    if not args.quiet:
        print("seed,oracle_fitness,ga_fitness,match,exact")
        for r in rows:
            print(f"{r.seed},{r.oracle_fitness!r},{r.ga_fitness!r},{r.match},{r.exact}")
        print(f"matched {sum(r.match for r in rows)} of {len(rows)}")
    if better:
        log.error("GA beat the exact oracle on seeds %s", [r.seed for r in better])
    return 1 if better else 0


def cmd_check(args) -> int:
    cfg = resolve_config(args).replace(**{"engine.check": True})
    ok = True
    for seed in cfg.seeds:
        report = run_seed(cfg, seed).constraints
        ok &= report.passed
        if not args.quiet:
            print(json.dumps({"seed": seed, **report.to_dict()}))
    return 0 if ok else 1


def cmd_config(args) -> int:
    print(yaml.safe_dump(resolve_config(args).to_dict(), sort_keys=False), end="")
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "oracle-check": cmd_oracle,
            "check-constraints": cmd_check, "config": cmd_config}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InstanceTooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    mortarcontact run <config.ini> [--no-stab] [--multiplier p0|nodal] [--output DIR]
    mortarcontact bench <name>     [--no-stab] [--multiplier p0|nodal] [--output DIR]
    mortarcontact infsup <config.ini> [--output DIR]
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .analysis import InfSupReport, infsup_sweep
from .benchmarks import CASE_NAMES, run_benchmark
from .config import parse_infsup_config, parse_run_config
from .errors import MortarContactError
from .io import write_csv
from .mortar import face_pair_table
from .solver import run_simulation


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-stab", action="store_true", help="disable interface stabilization")
    p.add_argument("--multiplier", choices=("p0", "nodal"), default=None,
                   help="multiplier space (default: per-face constant)")
    p.add_argument("--output", metavar="DIR", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mortarcontact",
        description="Mortar finite elements for frictional contact on non-conforming hexahedral meshes",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation from a config file")
    p_run.add_argument("config", help="INI problem description")
    _add_common(p_run)
    p_run.add_argument("--dump-face-pairs", action="store_true",
                       help="also write the mortar face-pair tables")

    p_bench = sub.add_parser("bench", help="run a packaged benchmark case")
    p_bench.add_argument("name", choices=CASE_NAMES)
    _add_common(p_bench)

    p_inf = sub.add_parser("infsup", help="numerical inf-sup sweep from a config file")
    p_inf.add_argument("config", help="INI sweep description")
    p_inf.add_argument("--output", metavar="DIR", default=None, help="output directory")
    return parser


def _cmd_run(args) -> int:
    cfg = parse_run_config(args.config)
    if args.no_stab:
        cfg.options.stabilization = False
    if args.multiplier is not None:
        cfg.options.multiplier = args.multiplier
    outdir = Path(args.output) if args.output else cfg.output_dir
    model = cfg.build()
    result = run_simulation(model, output_dir=outdir)
    if args.dump_face_pairs and outdir is not None:
        for k, binding in enumerate(model.bindings):
            header, rows = face_pair_table(binding.asm)
            name = cfg.interface_names[k]
            write_csv(outdir / f"face_pairs_{name}.csv", header, rows)
    last = result.steps[-1]
    counts = ", ".join(f"{k}={v}" for k, v in last.regime_counts.items())
    print(f"completed {len(result.steps)} load step(s); final regimes: {counts}")
    if outdir is not None:
        print(f"outputs written to {outdir}")
    return 0


def _cmd_bench(args) -> int:
    stabilization = False if args.no_stab else None
    report = run_benchmark(
        args.name,
        output_dir=args.output,
        stabilization=stabilization,
        multiplier=args.multiplier,
    )
    print(report.text())
    return 0 if report.passed else 1


def _cmd_infsup(args) -> int:
    cfg = parse_infsup_config(args.config)
    outdir = Path(args.output) if args.output else cfg.output_dir
    report = infsup_sweep(cfg.pairs)
    header, rows = report.rows()
    for line in [" ".join(header)] + [" ".join(str(v) for v in r) for r in rows]:
        print(line)
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        write_csv(outdir / "infsup.csv", header, rows)
        print(f"outputs written to {outdir}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return _cmd_infsup(args)
    except MortarContactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

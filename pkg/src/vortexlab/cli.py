"""Command-line front end for the experiment pipeline.

Subcommands:

    run        all five stages (or one, via --stage)
    simulate   trajectories + solver checks
    diagnose   convergence diagnostics from stored trajectories
    verify     weak-form residuals; with --trajectory, verify a stored file
    kernels    evaluate the kernel columns on a CSV pair list
    report     aggregate stage outputs into summary.json and figures

Exit codes: 0 when the work succeeded and, for run/report, every acceptance
check passed; 1 when a summary was produced but some check failed; 2 on any
error (bad config, missing inputs, invalid data).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .config import default_config, load_config
from .errors import StageError
from .pipeline import STAGES, run, verify_trajectory_file, write_kernel_csv

# every library error derives from one of these; OSError covers unreadable
# or unwritable paths handed over on the command line
_CLI_ERRORS = (ValueError, ArithmeticError, StageError, OSError)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vortexlab",
        description="Vanishing-viscosity experiments on the unit disk.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH",
                       help="JSON config file (defaults apply when omitted)")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (default: config output_dir)")
        p.add_argument("--workers", metavar="N", type=int, default=1,
                       help="concurrent per-family jobs within a stage")
        p.add_argument("--seed", metavar="S", type=int, default=None,
                       help="override the test-field battery seed")

    p_run = sub.add_parser("run", help="execute the staged pipeline")
    common(p_run)
    p_run.add_argument("--stage", metavar="NAME", choices=STAGES, default=None,
                       help="run a single stage instead of all five")

    for name, help_text in (
        ("simulate", "evolve the family trajectories and write solver checks"),
        ("diagnose", "convergence diagnostics against the sheet limit"),
        ("verify", "weak-form residual verification"),
        ("report", "aggregate artifacts into summary.json and figures"),
    ):
        p = sub.add_parser(name, help=help_text)
        common(p)
        if name == "verify":
            p.add_argument("--trajectory", metavar="PATH", default=None,
                           help="verify a stored trajectory file and print the JSON")

    p_k = sub.add_parser("kernels", help="kernel table for a CSV pair list")
    p_k.add_argument("--pairs", metavar="PATH", required=True,
                     help="input CSV with columns x1,x2,y1,y2")
    p_k.add_argument("--out", metavar="DIR", default=".",
                     help="directory for kernels.csv")
    return parser


def _load(args):
    cfg = load_config(args.config) if args.config else default_config()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, battery_seed=int(args.seed))
    out_dir = args.out if args.out else cfg.output_dir
    return cfg, out_dir


def _summary_exit(out_dir: str) -> int:
    path = os.path.join(out_dir, "summary.json")
    with open(path, "r", encoding="ascii") as fh:
        summary = json.load(fh)
    for crit in summary["criteria"]:
        state = "pass" if crit["pass"] else "FAIL"
        print(f"  [{state}] {crit['id']:2d} {crit['name']}")
    print("all criteria passed" if summary["all_pass"] else "some criteria FAILED")
    return 0 if summary["all_pass"] else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "kernels":
            out_path = os.path.join(args.out, "kernels.csv")
            rows = write_kernel_csv(args.pairs, out_path)
            print(f"wrote {rows} rows to {out_path}")
            return 0

        cfg, out_dir = _load(args)

        if args.command == "verify" and args.trajectory:
            doc = verify_trajectory_file(cfg, args.trajectory)
            print(json.dumps(doc, indent=2, sort_keys=True))
            return 0

        if args.command == "run":
            stages = (args.stage,) if args.stage else None
        else:
            stages = (args.command,)
        manifest = run(cfg, out_dir, workers=args.workers, stages=stages)
        for name in (stages or STAGES):
            info = manifest["stages"][name]
            print(f"stage {name}: {info['seconds']}s, {len(info['files'])} files")
        ran_report = stages is None or "report" in stages
        if ran_report:
            return _summary_exit(out_dir)
        return 0
    except _CLI_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

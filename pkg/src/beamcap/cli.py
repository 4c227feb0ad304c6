"""Command-line entry point: ``beamcap <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import experiments as ex
from .capacity import capacity
from .codec import SCHEMES, simulate_error_rate
from .model import ModelParams

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def _int_list(text):
    try:
        return ex.parse_int_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _jobs_default():
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _grid_args(p, M="16", B="2", L="1"):
    p.add_argument("--M", type=_int_list, default=_int_list(M), help=f"beam counts, e.g. 16 or 4,8,16 (default {M})")
    p.add_argument("--B", type=_int_list, default=_int_list(B), help=f"peak budgets, list or lo:hi (default {B})")
    p.add_argument("--L", type=_int_list, default=_int_list(L), help=f"block lengths, list or lo:hi (default {L})")


def _output_args(p, mode="formula"):
    p.add_argument("--mode", default=mode, choices=ex.MODES + ("all",), help=f"evaluation route (default {mode})")
    p.add_argument("--blocks", type=int, default=100_000, help="Monte Carlo blocks per point (default 100000)")
    p.add_argument("--seed", type=int, default=None, help=f"seed (default ${ex.SEED_ENV} or 0)")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", default="csv", choices=("csv", "json"), help="output format (default csv)")
    p.add_argument("--jobs", type=int, default=_jobs_default(), help="worker processes (default: available CPUs)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="beamcap", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("capacity", help="evaluate one or more grid points")
    _grid_args(p, L="1")
    _output_args(p)

    p = sub.add_parser("sweep", help="grid sweep to CSV/JSON")
    _grid_args(p, L="1:64")
    _output_args(p)

    for name, preset in (("figure1", ex.FIGURE1), ("figure2", ex.FIGURE2)):
        p = sub.add_parser(name, help=f"preset sweep M={preset['M']} B={preset['B_peak']} L=1..64")
        _output_args(p)

    p = sub.add_parser("simulate", help="codec Monte Carlo: block error rate and bits/use")
    p.add_argument("--M", type=int, default=16, help="beams (default 16)")
    p.add_argument("--B", type=int, default=2, help="peak budget (default 2)")
    p.add_argument("--L", type=int, default=32, help="block length (default 32)")
    p.add_argument("--K", type=int, default=16, help="list-decoded message bits (default 16)")
    p.add_argument("--blocks", type=int, default=1000, help="blocks (default 1000)")
    p.add_argument("--scheme", default="full", choices=SCHEMES, help="codec scheme (default full)")
    p.add_argument("--seed", type=int, default=None, help=f"seed (default ${ex.SEED_ENV} or 0)")
    p.add_argument("--jobs", type=int, default=_jobs_default(), help="worker processes")
    p.add_argument("--out", default=None, help="output JSON file (default stdout)")

    p = sub.add_parser("certify", help="run the invariant suite, JSON report")
    p.add_argument("--M", type=_int_list, default=ex.DEFAULT_CERT_GRID["M"], help="beam counts (default 2,4,6,8)")
    p.add_argument("--B", type=_int_list, default=ex.DEFAULT_CERT_GRID["B_peak"], help="budgets (default 0:8)")
    p.add_argument("--L", type=_int_list, default=ex.DEFAULT_CERT_GRID["L"], help="block lengths (default 1:4)")
    p.add_argument("--out", default=None, help="output JSON file (default stdout)")
    return ap


def _emit(text: str, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    seed = args.seed if getattr(args, "seed", None) is not None else ex.default_seed()
    try:
        if args.cmd in ("capacity", "sweep", "figure1", "figure2"):
            grid = (
                ex.FIGURE1 if args.cmd == "figure1"
                else ex.FIGURE2 if args.cmd == "figure2"
                else dict(M=args.M, B_peak=args.B, L=args.L)
            )
            try:
                cfg = ex.SweepConfig(
                    **grid, mode=args.mode, blocks=args.blocks, seed=seed,
                    out=args.out, format=args.format, jobs=args.jobs,
                )
            except ValueError as exc:
                ap.error(str(exc))
            rows = ex.run_sweep(cfg)
            text = ex.rows_to_csv(rows) if cfg.format == "csv" else ex.rows_to_json(rows)
            _emit(text, cfg.out)
            return EXIT_OK
        if args.cmd == "simulate":
            try:
                params = ModelParams(M=args.M, L=args.L, B_peak=args.B)
                res = simulate_error_rate(params, args.K, args.blocks, seed, args.scheme, workers=args.jobs)
            except ValueError as exc:
                ap.error(str(exc))
            out = dict(res._asdict(), capacity=capacity(params).bits_per_use, scheme=args.scheme, K=args.K)
            _emit(json.dumps(out, indent=2) + "\n", args.out)
            return EXIT_OK
        if args.cmd == "certify":
            rep = ex.certify(dict(M=args.M, B_peak=args.B, L=args.L))
            _emit(rep.to_json(), args.out)
            return EXIT_OK if rep.passed else EXIT_CHECK_FAILED
    except OSError as exc:
        print(f"beamcap: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

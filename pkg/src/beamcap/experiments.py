"""Parameter sweeps, figure presets and the certification run."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .capacity import capacity, cost_schedule
from .model import ModelParams
from .oracle import (
    OracleSizeError,
    brute_force_small,
    dp_optimal_rate,
    mc_entropy_estimate,
)
from .strategy import enumerate_block_paths, exact_policy_entropy

MODES = ("dp", "exact-tree", "formula", "monte-carlo")
CSV_COLUMNS = ("M", "B_peak", "L", "mode", "bits_per_use", "half_width")
SEED_ENV = "BEAMCAP_SEED"


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def parse_int_list(text: str) -> list[int]:
    """``"16"``, ``"2,3,8"`` or ``"1:64"`` (inclusive) -> list of ints."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = (int(x) for x in part.split(":"))
            if hi < lo:
                raise ValueError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ValueError(f"no values in {text!r}")
    return out


@dataclass
class SweepConfig:
    M: list
    B_peak: list
    L: list
    mode: str = "formula"
    blocks: int = 100_000
    seed: int = field(default_factory=default_seed)
    out: Optional[str] = None
    format: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        if not (self.M and self.B_peak and self.L):
            raise ValueError("M, B_peak and L lists must be non-empty")
        if min(self.L) < 1 or min(self.M) < 1 or min(self.B_peak) < 0:
            raise ValueError("need M>=1, L>=1, B_peak>=0")
        if self.mode != "all" and self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")

    @property
    def modes(self) -> tuple[str, ...]:
        return MODES if self.mode == "all" else (self.mode,)


FIGURE1 = dict(M=[16], B_peak=[2, 3, 4, 5, 8, 9], L=list(range(1, 65)))
FIGURE2 = dict(M=[4, 8, 16, 32, 64], B_peak=[2], L=list(range(1, 65)))


def evaluate_point(M: int, B: int, L: int, mode: str, blocks: int, seed: int) -> dict:
    row = dict(M=M, B_peak=B, L=L, mode=mode, bits_per_use=None, half_width=None)
    params = ModelParams(M=M, L=L, B_peak=B)
    try:
        if mode == "formula":
            row["bits_per_use"] = capacity(params).bits_per_use
        elif mode == "exact-tree":
            row["bits_per_use"] = exact_policy_entropy(params).bits_per_use
        elif mode == "dp":
            row["bits_per_use"] = dp_optimal_rate(params).rate
        else:
            rep = mc_entropy_estimate(params, blocks, seed=[seed, M, B, L])
            row["bits_per_use"], row["half_width"] = rep.bits_per_use, rep.half_width
    except (OracleSizeError, ValueError) as exc:
        row["error"] = str(exc)
    return row


def _eval_star(args):
    return evaluate_point(*args)


def run_sweep(config: SweepConfig) -> list[dict]:
    """One row per grid point and mode, in (M, B, L, mode) order."""
    points = sorted(
        (M, B, L, mode)
        for M in set(config.M)
        for B in set(config.B_peak)
        for L in set(config.L)
        for mode in config.modes
    )
    args = [(M, B, L, mode, config.blocks, config.seed) for M, B, L, mode in points]
    if config.jobs > 1 and len(args) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(config.jobs) as ex:
            return list(ex.map(_eval_star, args, chunksize=8))
    return [_eval_star(a) for a in args]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.12g}"
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        vals = dict(row)
        if vals.get("error"):
            vals["bits_per_use"] = float("nan")
        w.writerow([_fmt(vals[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2, allow_nan=False) + "\n"


def write_rows(rows: list[dict], path: Optional[str], fmt: str = "csv") -> str:
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


# --- certification ---------------------------------------------------------------

DEFAULT_CERT_GRID = dict(M=[2, 4, 6, 8], B_peak=list(range(0, 9)), L=[1, 2, 3, 4])
TOL = 1e-10


@dataclass
class CertReport:
    checks: list = field(default_factory=list)

    def add(self, check, point, expected, actual, passed):
        self.checks.append(
            dict(check=check, point=point, expected=expected, actual=actual, passed=bool(passed))
        )

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    @property
    def first_failure(self) -> Optional[dict]:
        return next((c for c in self.checks if not c["passed"]), None)

    def to_json(self) -> str:
        return json.dumps(
            dict(passed=self.passed, first_failure=self.first_failure, checks=self.checks),
            indent=2,
        ) + "\n"


def certify(
    grid: Optional[dict] = None,
    corrupt: Optional[Callable[[ModelParams, float], float]] = None,
) -> CertReport:
    """Run the invariant suite over a small grid.

    ``corrupt`` is a test hook applied to every closed-form value before it
    is compared.  Points with B_peak > M are skipped.
    """
    grid = grid or DEFAULT_CERT_GRID
    rep = CertReport()
    cap = {}
    points = [
        ModelParams(M=M, L=L, B_peak=B)
        for M in sorted(set(grid["M"]))
        for B in sorted(set(grid["B_peak"]))
        for L in sorted(set(grid["L"]))
        if B <= M
    ]
    for p in points:
        c = capacity(p).bits_per_use
        cap[p.M, p.B_peak, p.L] = corrupt(p, c) if corrupt else c
    for p in points:
        key = (p.M, p.B_peak, p.L)
        pt = dict(M=p.M, B_peak=p.B_peak, L=p.L)
        c = cap[key]
        tree = exact_policy_entropy(p).bits_per_use
        rep.add("exact-tree=formula", pt, c, tree, abs(tree - c) <= TOL)
        dp = dp_optimal_rate(p)
        sched = cost_schedule(p)
        if sched.is_integral():
            rep.add("dp=formula", pt, c, dp.rate, abs(dp.rate - c) <= TOL)
            want = [int(x) for x in sched.values][: len(dp.undetected_path(p.M, p.L))]
            got = dp.undetected_path(p.M, p.L)
            rep.add("dp-root=schedule", pt, want, got, want == got)
        else:
            rep.add("dp<=formula", pt, c, dp.rate, dp.rate <= c + TOL)
        if p.M <= 8 and p.L <= 4:
            bf = brute_force_small(p)
            rep.add("brute=dp", pt, dp.rate, bf, abs(bf - dp.rate) <= TOL)
            bad = sum(
                not ok for m in range(1, p.M + 1) for _, _, ok in enumerate_block_paths(p, m)
            )
            rep.add("trapping", pt, 0, bad, bad == 0)
        if 2 * p.B_peak >= p.M:
            rep.add("threshold", pt, 1.0, c, c == 1.0)
        if not 0.0 <= c <= 1.0:
            rep.add("range", pt, "[0,1]", c, False)
        nxt = cap.get((p.M, p.B_peak, p.L + 1))
        if nxt is not None:
            rep.add("monotone-L", pt, f">={c}", nxt, nxt >= c - TOL)
        nxt = cap.get((p.M, p.B_peak + 1, p.L))
        if nxt is not None:
            rep.add("monotone-B", pt, f">={c}", nxt, nxt >= c - TOL)
        nxt = cap.get((2 * p.M, p.B_peak, p.L))
        if nxt is not None:
            rep.add("monotone-M", pt, f"<={c}", nxt, nxt <= c + TOL)
    return rep

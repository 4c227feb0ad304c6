"""Closed-form capacity under a peak Hamming-cost budget.

The probe-size schedule halves the remaining candidate pool, capped at the
budget, and is kept as exact rationals; floats only appear when the binary
entropy is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .model import ModelParams

PROVENANCES = ("formula", "exact-tree", "dp", "monte-carlo")


def binary_entropy(p) -> float:
    """H(p) in bits, with H(0) = H(1) = 0."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    if p == 0.5:
        return 1.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True)
class CostSchedule:
    values: tuple[Fraction, ...]
    params: ModelParams

    @property
    def floats(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.values)

    def pool_before(self, j: int) -> Fraction:
        """M minus the schedule mass spent before use j (1-based)."""
        return self.params.M - sum(self.values[: j - 1], Fraction(0))

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass
class RateReport:
    bits_per_use: float
    per_use_terms: list[float]
    provenance: str
    half_width: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


def cost_schedule(params: ModelParams) -> CostSchedule:
    M, B = params.M, Fraction(params.B_peak)
    spent = Fraction(0)
    values = []
    for _ in range(params.L):
        c = min((M - spent) / 2, B)
        values.append(c)
        spent += c
    return CostSchedule(tuple(values), params)


def capacity(params: ModelParams) -> RateReport:
    sched = cost_schedule(params)
    M = params.M
    spent = Fraction(0)
    terms = []
    for c in sched.values:
        undetected = 1 - spent / M
        # 1 - u(1 - H) keeps the C = 1 regime exact in floating point
        terms.append(1.0 - float(undetected) * (1.0 - binary_entropy(c / (M - spent))))
        spent += c
    return RateReport(math.fsum(terms) / len(terms), terms, "formula")


def capacity_L1(M: int, B_peak: int) -> float:
    return binary_entropy(min(Fraction(1, 2), Fraction(B_peak, M)))

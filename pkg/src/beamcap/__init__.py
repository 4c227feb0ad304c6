"""Capacity, policy and oracles for the binary beam-pointing channel."""

from .capacity import (
    CostSchedule,
    RateReport,
    binary_entropy,
    capacity,
    capacity_L1,
    cost_schedule,
)
from .model import (
    BlockTrace,
    DirectionState,
    ModelParams,
    hamming_cost,
    run_block,
    sample_state,
    transmit,
)
from .oracle import brute_force_small, dp_optimal_rate, mc_entropy_estimate
from .strategy import ProbeTracker, exact_policy_entropy, init_tracker

__all__ = [
    "BlockTrace", "CostSchedule", "DirectionState", "ModelParams", "ProbeTracker",
    "RateReport", "binary_entropy", "brute_force_small", "capacity", "capacity_L1",
    "cost_schedule", "dp_optimal_rate", "exact_policy_entropy", "hamming_cost",
    "init_tracker", "mc_entropy_estimate", "run_block", "sample_state", "transmit",
]

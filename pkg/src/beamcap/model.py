"""Binary beam-pointing channel: states, probes, cost and block mechanics.

Beam indices are 1-based throughout (``1..M``).  A probe is a binary numpy
vector of length M; the state is canonicalised to its integer direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np


class ChannelError(ValueError):
    """Invalid input to the channel (wrong dimension, bad index)."""


class CostViolation(RuntimeError):
    """A policy emitted a probe heavier than the peak budget."""


@dataclass(frozen=True)
class ModelParams:
    M: int
    L: int
    B_peak: int

    def __post_init__(self):
        if self.M < 1 or self.L < 1 or self.B_peak < 0:
            raise ValueError(f"need M>=1, L>=1, B_peak>=0; got {self}")


@dataclass(frozen=True)
class DirectionState:
    m: int
    M: int

    def __post_init__(self):
        if not 1 <= self.m <= self.M:
            raise ChannelError(f"direction {self.m} outside 1..{self.M}")

    def one_hot(self) -> np.ndarray:
        s = np.zeros(self.M, dtype=np.uint8)
        s[self.m - 1] = 1
        return s


def probe_from_indices(indices: Iterable[int], M: int) -> np.ndarray:
    x = np.zeros(M, dtype=np.uint8)
    for i in indices:
        if not 1 <= i <= M:
            raise ChannelError(f"beam index {i} outside 1..{M}")
        x[i - 1] = 1
    return x


def probe_from_string(bits: str) -> np.ndarray:
    """``"110000"`` -> array([1, 1, 0, 0, 0, 0])."""
    if set(bits) - {"0", "1"}:
        raise ChannelError(f"not a bit string: {bits!r}")
    return np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")


def probe_indices(x: np.ndarray) -> tuple[int, ...]:
    return tuple(int(i) + 1 for i in np.flatnonzero(x))


def hamming_cost(x) -> int:
    return int(np.count_nonzero(x))


def transmit(state: DirectionState, x) -> int:
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != state.M:
        raise ChannelError(f"probe dimension {x.shape} does not match M={state.M}")
    return int(x[state.m - 1] != 0)


def sample_state(rng: np.random.Generator, M: int) -> DirectionState:
    if M < 1:
        raise ValueError("M must be positive")
    return DirectionState(int(rng.integers(1, M + 1)), M)


class Policy(Protocol):
    params: ModelParams

    def next_probe(self, rng: np.random.Generator) -> np.ndarray: ...

    def update(self, y: int) -> object: ...


@dataclass
class BlockTrace:
    state: DirectionState
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    costs: list = field(default_factory=list)


def run_block(state: DirectionState, policy: Policy, rng: np.random.Generator) -> BlockTrace:
    """Run one block of L uses with one-unit-delayed noiseless feedback.

    The policy sees the empty history before use 1 and receives ``y_j`` via
    ``update`` after use j.
    """
    params = policy.params
    trace = BlockTrace(state)
    for _ in range(params.L):
        x = policy.next_probe(rng)
        cost = hamming_cost(x)
        if cost > params.B_peak:
            raise CostViolation(f"probe cost {cost} exceeds B_peak={params.B_peak}")
        y = transmit(state, x)
        trace.inputs.append(x)
        trace.outputs.append(y)
        trace.costs.append(cost)
        policy.update(y)
    return trace


@dataclass
class FixedProbePolicy:
    """Emits the same probe every use; handy for tests."""

    params: ModelParams
    probe: np.ndarray

    def next_probe(self, rng):
        return self.probe.copy()

    def update(self, y):
        return self


# --- history classes ---------------------------------------------------------

@dataclass(frozen=True)
class AllZero:
    j: int


@dataclass(frozen=True)
class FirstOneAt:
    k: int
    j: int

    def __post_init__(self):
        if not 1 <= self.k <= self.j:
            raise ValueError(f"first-one index {self.k} outside 1..{self.j}")


def history_class(y: Sequence[int]) -> AllZero | FirstOneAt:
    for k, bit in enumerate(y, start=1):
        if bit:
            return FirstOneAt(k, len(y))
    return AllZero(len(y))

"""Feedback-driven probing policy that traps the hidden beam.

Before the first ``y = 1`` the tracker probes a uniformly random subset of the
candidate pool whose expected size follows the cost schedule.  The first
``y = 1`` traps the beam in the probed set; from then on the trapped set is
bisected (lower/upper half of its sorted order), each half probed with
probability 1/2 so that every use carries one full bit.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .capacity import CostSchedule, RateReport, binary_entropy, cost_schedule
from .model import ModelParams, probe_from_indices

HALF = Fraction(1, 2)


class TrackerStateError(RuntimeError):
    pass


def realize_probe_size(c, rng: np.random.Generator, budget: int | None = None) -> int:
    """Integer size with expectation ``c``: floor(c) or floor(c)+1."""
    c = Fraction(c)
    if c < 0:
        raise ValueError("probe size target must be non-negative")
    lo = math.floor(c)
    frac = c - lo
    size = lo + int(frac > 0 and rng.random() < frac)
    if budget is not None and size > budget:
        raise ValueError(f"size {size} exceeds budget {budget}")
    return size


def larger_half_probability(t: int) -> Fraction:
    """Probability of probing the ceil(t/2) half so that P(hit) = 1/2.

    Solves p*ceil(t/2)/t + (1-p)*floor(t/2)/t = 1/2; any p works for even t
    and we keep 1/2 there too.
    """
    hi, lo = -(-t // 2), t // 2
    if hi == lo:
        return HALF
    return (HALF - Fraction(lo, t)) / Fraction(hi - lo, t)


def split_halves(items):
    """Sorted lower half (ceil size) and upper half (floor size)."""
    items = sorted(items)
    cut = -(-len(items) // 2)
    return tuple(items[:cut]), tuple(items[cut:])


def _partial_shuffle(pool: list, a: int, rng: np.random.Generator) -> list:
    pool = list(pool)
    n = len(pool)
    for i in range(a):
        j = int(rng.integers(i, n))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:a]


@dataclass
class ProbeTracker:
    params: ModelParams
    schedule: CostSchedule
    candidates: list = field(default_factory=list)
    explored: tuple = ()
    detected: bool = False
    detect_time: int = 0
    use_index: int = 0
    _pending: bool = False

    # --- size rule -----------------------------------------------------------

    def size_target(self) -> Fraction:
        """Expected pre-detection probe size at the current use.

        The schedule value c_j is rescaled by the realised pool size over the
        nominal pool ``M - sum(c_<j)``, so every candidate is included with
        probability c_j / (M - sum(c_<j)) whichever pool was realised.
        When earlier sizes were deterministic the two pools coincide and the
        target is c_j itself.
        """
        j = self.use_index + 1
        c = self.schedule[j - 1]
        if c == 0:
            return Fraction(0)
        return c * len(self.candidates) / self.schedule.pool_before(j)

    # --- probing -------------------------------------------------------------

    def _check_open(self):
        if self.use_index >= self.params.L:
            raise TrackerStateError("block already finished")
        if self._pending:
            raise TrackerStateError("probe already emitted for this use")

    def select(self, subset) -> np.ndarray:
        """Commit ``subset`` as this use's probe."""
        self._check_open()
        subset = tuple(sorted(subset))
        if not set(subset) <= set(self.candidates):
            raise TrackerStateError(f"probe {subset} leaves the candidate set")
        self.explored = subset
        self._pending = True
        return probe_from_indices(subset, self.params.M)

    def next_probe(self, rng: np.random.Generator) -> np.ndarray:
        self._check_open()
        if self.detected:
            lower, upper = split_halves(self.candidates)
            p = larger_half_probability(len(self.candidates))
            subset = lower if rng.random() < p else upper
        else:
            a = realize_probe_size(self.size_target(), rng, self.params.B_peak)
            subset = _partial_shuffle(self.candidates, a, rng)
        return self.select(subset)

    def probe_distribution(self) -> list[tuple[Fraction, tuple]]:
        """Every probe the next use can emit, with its exact probability."""
        self._check_open()
        if self.detected:
            lower, upper = split_halves(self.candidates)
            p = larger_half_probability(len(self.candidates))
            return [(w, s) for w, s in ((p, lower), (1 - p, upper)) if w]
        target = self.size_target()
        lo = math.floor(target)
        out = []
        for a, w in ((lo, 1 - (target - lo)), (lo + 1, target - lo)):
            if w == 0:
                continue
            subsets = list(combinations(self.candidates, a))
            out.extend((w / len(subsets), s) for s in subsets)
        return out

    def update(self, y: int) -> "ProbeTracker":
        if not self._pending:
            raise TrackerStateError("update called before a probe was emitted")
        explored = set(self.explored)
        if y:
            if not self.detected:
                self.detected = True
                self.detect_time = self.use_index + 1
            self.candidates = sorted(explored)
        else:
            self.candidates = [d for d in self.candidates if d not in explored]
        self.use_index += 1
        self._pending = False
        return self

    def copy(self):
        return copy.deepcopy(self)

    @property
    def params_tuple(self):
        return self.params.M, self.params.B_peak, self.params.L


def init_tracker(params: ModelParams) -> ProbeTracker:
    return ProbeTracker(params, cost_schedule(params), list(range(1, params.M + 1)))


# --- exact evaluation ---------------------------------------------------------

@dataclass
class TreeUse:
    """Per-use record of the collapsed policy tree (probabilities given S)."""

    j: int
    p_undetected: Fraction
    p_hit_undetected: Fraction  # P(Y_j = 1 | Y^{j-1} = 0, S)
    pool_law: dict  # realised pool size -> P(pool, Y^{j-1} = 0 | S)
    trapped_law: dict  # trapped size -> P(trapped, detected | S)
    term: float


def policy_tree(params: ModelParams) -> list[TreeUse]:
    """Walk the detection-collapsed history tree of the tracker exactly.

    Nodes are (realised pool size) before detection and (trapped size)
    after.  By symmetry the law of these hidden sizes given the direction
    does not depend on which direction it is, so one walk covers all S.
    """
    sched = cost_schedule(params)
    pool = {params.M: Fraction(1)}
    trapped: dict[int, Fraction] = {}
    out = []
    for j in range(1, params.L + 1):
        c = sched[j - 1]
        nominal = sched.pool_before(j)
        p0 = sum(pool.values(), Fraction(0))
        hit_mass = Fraction(0)
        new_pool: dict[int, Fraction] = {}
        new_trapped: dict[int, Fraction] = {}
        for v, w in pool.items():
            target = c * v / nominal
            lo = math.floor(target)
            for a, wa in ((lo, 1 - (target - lo)), (lo + 1, target - lo)):
                if wa == 0:
                    continue
                if a > v or a > params.B_peak:
                    raise AssertionError(f"infeasible size {a} at pool {v}")
                hit = Fraction(a, v)
                hit_mass += w * wa * hit
                if a < v:
                    new_pool[v - a] = new_pool.get(v - a, 0) + w * wa * (1 - hit)
                if a:
                    new_trapped[a] = new_trapped.get(a, 0) + w * wa * hit
        q_pre = hit_mass / p0 if p0 else Fraction(0)
        # exact rational accumulation so an all-ones use sums to exactly 1
        term = p0 * Fraction(binary_entropy(q_pre))
        for t, w in trapped.items():
            hi, lo = -(-t // 2), t // 2
            p = larger_half_probability(t)
            q = p * Fraction(hi, t) + (1 - p) * Fraction(lo, t)
            term += w * Fraction(binary_entropy(q))
            for size, ws in ((hi, Fraction(hi, t)), (lo, Fraction(lo, t))):
                if size and ws:
                    new_trapped[size] = new_trapped.get(size, 0) + w * ws
        out.append(TreeUse(j, p0, q_pre, dict(pool), dict(trapped), float(term)))
        pool, trapped = new_pool, new_trapped
    return out


def exact_policy_entropy(params: ModelParams) -> RateReport:
    """H(Y^L | S) / L of the tracker, evaluated on the collapsed tree."""
    uses = policy_tree(params)
    terms = [u.term for u in uses]
    return RateReport(math.fsum(terms) / len(terms), terms, "exact-tree")


def enumerate_block_paths(params: ModelParams, m: int):
    """Yield (probability, outputs, trapped_ok) for every internal random path.

    ``trapped_ok`` is False if the direction ever left the candidate set.
    Exhaustive, so only for small M and L.
    """

    def walk(tracker, prob, ys, ok):
        if tracker.use_index == params.L:
            yield prob, tuple(ys), ok
            return
        for w, subset in tracker.probe_distribution():
            nxt = tracker.copy()
            nxt.select(subset)
            y = int(m in subset)
            nxt.update(y)
            yield from walk(nxt, prob * w, ys + [y], ok and m in nxt.candidates)

    yield from walk(init_tracker(params), Fraction(1), [], True)

from collections import Counter
from fractions import Fraction
from itertools import combinations
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beamcap.capacity import binary_entropy, capacity, cost_schedule
from beamcap.model import DirectionState, hamming_cost, probe_indices, run_block
from beamcap.strategy import (
    TrackerStateError,
    enumerate_block_paths,
    exact_policy_entropy,
    init_tracker,
    larger_half_probability,
    policy_tree,
    realize_probe_size,
    split_halves,
)
from conftest import P


def path_entropy(params, m=1):
    """H(Y^L | S = m) by enumerating every internal random path."""
    law = Counter()
    for w, ys, _ in enumerate_block_paths(params, m):
        law[ys] += w
    assert sum(law.values()) == 1
    return sum(-float(p) * math.log2(p) for p in law.values() if p)


def test_init_tracker_examples():
    t = init_tracker(P(4, 2, 2))
    assert t.candidates == [1, 2, 3, 4] and t.explored == () and not t.detected
    assert t.use_index == 0 and t.schedule.values == (2, 1)
    t = init_tracker(P(1, 1, 1))
    assert t.candidates == [1] and t.schedule.values == (Fraction(1, 2),)


def test_zero_budget_emits_empty_probes(rng):
    t = init_tracker(P(16, 0, 2))
    assert t.schedule.values == (0, 0)
    for _ in range(2):
        x = t.next_probe(rng)
        assert hamming_cost(x) == 0
        t.update(0)


def test_realize_integral(rng):
    assert all(realize_probe_size(2, rng) == 2 for _ in range(100))


def test_realize_fraction_mean(rng):
    n = 10**6
    total = sum(realize_probe_size(Fraction(3, 2), rng) for _ in range(n))
    # binomial sd of the mean is 0.5/sqrt(n) = 5e-4
    assert abs(total / n - 1.5) < 0.002


def test_realize_half(rng):
    draws = Counter(realize_probe_size(Fraction(1, 2), rng) for _ in range(20000))
    assert set(draws) == {0, 1}
    assert abs(draws[1] / 20000 - 0.5) < 4 * 0.5 / math.sqrt(20000)


def test_realize_budget_guard(rng):
    with pytest.raises(ValueError):
        realize_probe_size(3, rng, budget=2)


def test_first_probe_uniform_pairs():
    t = init_tracker(P(16, 2, 1))
    dist = t.probe_distribution()
    assert len(dist) == math.comb(16, 2)
    assert {w for w, _ in dist} == {Fraction(1, 120)}
    rng = np.random.default_rng(3)
    counts = Counter()
    for _ in range(60000):
        tr = init_tracker(P(16, 2, 1))
        x = tr.next_probe(rng)
        assert hamming_cost(x) == 2
        counts[probe_indices(x)] += 1
    assert len(counts) == 120
    obs = np.array(list(counts.values()), dtype=float)
    stat = ((obs - 500.0) ** 2 / 500.0).sum()
    # chi-square with 119 dof: mean 119, sd about 15.4
    assert stat < 119 + 5 * math.sqrt(2 * 119)


def _detected_tracker(trapped, M=16, B=2, L=4):
    t = init_tracker(P(M, B, L))
    t.select(trapped)
    t.update(1)
    return t


def test_detected_probe_halves():
    t = _detected_tracker((3, 7, 9, 12))
    dist = t.probe_distribution()
    assert [len(s) for _, s in dist] == [2, 2]
    hit = sum(w * Fraction(sum(d in s for d in t.candidates), 4) for w, s in dist)
    assert hit == Fraction(1, 2)


@pytest.mark.parametrize("t", range(1, 40))
def test_larger_half_probability_balances(t):
    p = larger_half_probability(t)
    hi, lo = -(-t // 2), t // 2
    assert 0 <= p <= 1
    assert p * Fraction(hi, t) + (1 - p) * Fraction(lo, t) == Fraction(1, 2)


def test_update_examples():
    t = init_tracker(P(16, 2, 2))
    t.select((3, 7))
    t.update(0)
    assert t.candidates == [d for d in range(1, 17) if d not in (3, 7)]
    assert len(t.candidates) == 14 and not t.detected

    t = init_tracker(P(16, 2, 3))
    t.select((3, 7))
    t.update(1)
    assert t.detected and t.detect_time == 1 and t.candidates == [3, 7]
    t.select((3,))
    t.update(0)
    assert t.candidates == [7] and t.detected


def test_state_errors(rng):
    t = init_tracker(P(4, 1, 1))
    with pytest.raises(TrackerStateError):
        t.update(0)
    t.next_probe(rng)
    with pytest.raises(TrackerStateError):
        t.next_probe(rng)
    t.update(0)
    with pytest.raises(TrackerStateError):
        t.next_probe(rng)


def test_split_halves():
    assert split_halves([9, 2, 6, 5]) == ((2, 5), (6, 9))
    assert split_halves([3, 7, 1]) == ((1, 3), (7,))
    assert split_halves([4]) == ((4,), ())


H_THIRD = 0.918295834054489514787


def test_exact_entropy_examples():
    assert exact_policy_entropy(P(6, 2, 1)).bits_per_use == pytest.approx(H_THIRD, abs=1e-12)
    rep = exact_policy_entropy(P(16, 8, 5))
    assert rep.bits_per_use == 1.0 and rep.provenance == "exact-tree"
    assert exact_policy_entropy(P(16, 2, 2)).bits_per_use == pytest.approx(
        capacity(P(16, 2, 2)).bits_per_use, abs=1e-12
    )


@pytest.mark.parametrize(
    "M, B, L",
    [(4, 2, 3), (5, 2, 3), (6, 3, 3), (3, 1, 4), (6, 2, 3), (7, 3, 3), (2, 1, 4), (1, 1, 3), (5, 1, 3)],
)
def test_tree_matches_path_enumeration(M, B, L):
    # independent route: full joint law of Y^L from every random path
    direct = path_entropy(P(M, B, L)) / L
    assert exact_policy_entropy(P(M, B, L)).bits_per_use == pytest.approx(direct, abs=1e-12)


@pytest.mark.parametrize("M, B, L", [(9, 5, 3), (8, 3, 4)])
def test_pool_rescaled_size_rule(M, B, L):
    # M=9, B=5: the nominal c_3 = 9/8 can exceed a realised pool of 1
    direct = path_entropy(P(M, B, L)) / L
    assert direct == pytest.approx(capacity(P(M, B, L)).bits_per_use, abs=1e-12)


@settings(deadline=None, max_examples=60)
@given(st.integers(1, 24), st.integers(0, 24), st.integers(1, 24))
def test_detection_probability(M, B, L):
    B = min(B, M)
    sched = cost_schedule(P(M, B, L))
    spent = Fraction(0)
    for use, c in zip(policy_tree(P(M, B, L)), sched.values):
        assert use.p_undetected == 1 - spent / M
        assert use.p_hit_undetected == c / (M - spent)
        spent += c


@pytest.mark.parametrize("M", range(1, 7))
@pytest.mark.parametrize("B", range(0, 4))
def test_marginal_inclusion(M, B):
    L = 3
    if B > M:
        return
    sched = cost_schedule(P(M, B, L))

    def walk(t):
        if t.use_index == L:
            return
        dist = t.probe_distribution()
        if not t.detected:
            j = t.use_index + 1
            nominal = sched.pool_before(j)
            for d in t.candidates:
                incl = sum(w for w, s in dist if d in s)
                assert incl == sched[j - 1] / nominal
        seen = set()
        for _, s in dist:
            for y in (0, 1):
                nxt = t.copy()
                nxt.select(s)
                nxt.update(y)
                key = (tuple(nxt.candidates), nxt.detected)
                if nxt.candidates and key not in seen:
                    seen.add(key)
                    walk(nxt)

    walk(init_tracker(P(M, B, L)))


@pytest.mark.parametrize("M", [2, 4, 5, 8])
@pytest.mark.parametrize("L", [1, 2, 4])
def test_trapping_soundness(M, L):
    for B in range(0, M + 1):
        for m in range(1, M + 1):
            assert all(ok for _, _, ok in enumerate_block_paths(P(M, B, L), m))


def test_peak_cost_random_runs():
    rng = np.random.default_rng(11)
    for _ in range(300):
        M = int(rng.integers(1, 33))
        B = int(rng.integers(0, M + 1))
        L = int(rng.integers(1, 12))
        state = DirectionState(int(rng.integers(1, M + 1)), M)
        tr = run_block(state, init_tracker(P(M, B, L)), rng)
        assert max(tr.costs) <= B

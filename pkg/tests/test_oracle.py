import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beamcap.capacity import capacity
from beamcap.oracle import (
    OracleSizeError,
    brute_force_small,
    dp_optimal_rate,
    history_counts,
    mc_entropy_estimate,
    simulate_histories,
)
from conftest import P

CAP_16_2_2 = 0.593139062229566431955


def test_dp_examples():
    sol = dp_optimal_rate(P(16, 2, 2))
    assert sol.rate == pytest.approx(CAP_16_2_2, abs=1e-12)
    assert sol.schedule[1, 16] == 2 and sol.undetected_path(16, 2) == [2, 2]
    sol = dp_optimal_rate(P(16, 8, 3))
    assert sol.rate == pytest.approx(1.0, abs=1e-12) and sol.schedule[1, 16] == 8
    assert dp_optimal_rate(P(2, 1, 1)).rate == pytest.approx(1.0, abs=1e-12)
    assert dp_optimal_rate(P(8, 0, 3)).rate == 0.0


def test_brute_force_examples():
    assert brute_force_small(P(4, 2, 2)) == pytest.approx(1.0, abs=1e-12)
    assert brute_force_small(P(8, 1, 2)) == pytest.approx(capacity(P(8, 1, 2)).bits_per_use, abs=1e-12)
    assert brute_force_small(P(8, 1, 2)) < 1
    assert brute_force_small(P(6, 2, 1)) == pytest.approx(capacity(P(6, 2, 1)).bits_per_use, abs=1e-12)


def test_brute_force_guard():
    with pytest.raises(OracleSizeError):
        brute_force_small(P(9, 2, 2))
    with pytest.raises(OracleSizeError):
        brute_force_small(P(8, 2, 5))


@settings(deadline=None, max_examples=40)
@given(st.integers(1, 24), st.integers(0, 24), st.integers(1, 10))
def test_bellman_nonincreasing_in_j(M, B, L):
    B = min(B, M)
    V = dp_optimal_rate(P(M, B, L)).values
    for u in range(M + 1):
        for j in range(1, L + 1):
            assert V[j, u] >= V[j + 1, u] - 1e-12


@settings(deadline=None, max_examples=40)
@given(st.integers(1, 24), st.integers(0, 23), st.integers(1, 10))
def test_dp_nondecreasing_in_B(M, B, L):
    B = min(B, M - 1)
    assert dp_optimal_rate(P(M, B + 1, L)).rate >= dp_optimal_rate(P(M, B, L)).rate - 1e-12


@pytest.mark.parametrize("M", range(1, 9))
def test_oracle_equivalence_small(M):
    for B in range(0, M + 1):
        for L in range(1, 5):
            dp = dp_optimal_rate(P(M, B, L))
            assert brute_force_small(P(M, B, L)) == pytest.approx(dp.rate, abs=1e-10)
            cap = capacity(P(M, B, L))
            assert dp.rate <= cap.bits_per_use + 1e-10
            if cost_is_integral(M, B, L):
                assert dp.rate == pytest.approx(cap.bits_per_use, abs=1e-10)


def cost_is_integral(M, B, L):
    from beamcap.capacity import cost_schedule

    return cost_schedule(P(M, B, L)).is_integral()


def test_simulated_histories_shape():
    rng = np.random.default_rng(0)
    h = simulate_histories(P(16, 2, 4), 5000, rng)
    assert h.shape == (5000,) and h.min() >= 0 and h.max() < 16
    # the first use hits with probability c_1/M = 2/16
    assert np.mean(h & 1) == pytest.approx(2 / 16, abs=0.02)


def test_mc_deterministic():
    a = mc_entropy_estimate(P(16, 2, 4), 20000, seed=5)
    b = mc_entropy_estimate(P(16, 2, 4), 20000, seed=5)
    assert a.bits_per_use == b.bits_per_use and a.half_width == b.half_width
    c = mc_entropy_estimate(P(16, 2, 4), 20000, seed=6)
    assert c.bits_per_use != a.bits_per_use


def test_mc_worker_independent():
    a = history_counts(P(16, 3, 5), 100000, seed=2, workers=1)
    b = history_counts(P(16, 3, 5), 100000, seed=2, workers=3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b)) and a[1].sum() == 100000


def test_mc_ceiling():
    rep = mc_entropy_estimate(P(16, 8, 6), 50000, seed=1)
    assert rep.bits_per_use <= 1.0 + 1e-12
    assert rep.bits_per_use == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("M, B, L", [(16, 2, 4), (8, 3, 6), (32, 5, 3)])
def test_mc_agreement(M, B, L):
    rep = mc_entropy_estimate(P(M, B, L), 200000, seed=3)
    assert rep.provenance == "monte-carlo"
    assert abs(rep.bits_per_use - capacity(P(M, B, L)).bits_per_use) <= 3 * rep.half_width


def test_half_width_scaling():
    small = mc_entropy_estimate(P(16, 2, 4), 10000, seed=4).half_width
    large = mc_entropy_estimate(P(16, 2, 4), 100000, seed=4).half_width
    ratio = small / large
    # 1/sqrt(n) scaling predicts sqrt(10)
    assert np.sqrt(10) / 2 <= ratio <= np.sqrt(10) * 2


def test_mc_guards():
    with pytest.raises(ValueError):
        mc_entropy_estimate(P(16, 2, 4), 999)
    with pytest.raises(OracleSizeError):
        mc_entropy_estimate(P(16, 2, 25), 1000)

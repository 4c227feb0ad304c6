"""Independent checks on the capacity formula and the probing policy.

* ``dp_optimal_rate``: backward value iteration over (use, pool size) with
  deterministic integer probe sizes.
* ``brute_force_small``: enumerate every integer size sequence along the
  undetected path and evaluate each policy on an explicit bisection tree.
* ``mc_entropy_estimate``: vectorised block simulation plus a plug-in
  entropy estimate with a multinomial bootstrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .capacity import RateReport, binary_entropy, cost_schedule
from .model import ModelParams
from .strategy import larger_half_probability

TIE_EPS = 1e-12


class OracleSizeError(ValueError):
    """Instance is too large for an exhaustive oracle."""


@dataclass
class DpSolution:
    value: float
    rate: float
    schedule: dict = field(default_factory=dict)  # (j, u) -> optimal size
    values: dict = field(default_factory=dict)  # (j, u) -> V_j(u)

    def undetected_path(self, M: int, L: int) -> list[int]:
        """Optimal sizes along the all-zero feedback path."""
        u, path = M, []
        for j in range(1, L + 1):
            a = self.schedule[j, u]
            path.append(a)
            u -= a
            if u == 0:
                break
        return path


def dp_optimal_rate(params: ModelParams) -> DpSolution:
    """Best integer-size uniform-subset policy via backward induction.

    V_{L+1}(u) = 0 and
    V_j(u) = max_a  H(a/u) + (a/u)(L-j) + (1 - a/u) V_{j+1}(u-a),
    where a detection at use j is worth one bit on each remaining use.
    Ties go to the smaller a.
    """
    M, L, B = params.M, params.L, params.B_peak
    V = {(L + 1, u): 0.0 for u in range(M + 1)}
    sched = {}
    for j in range(L, 0, -1):
        V[j, 0] = 0.0
        for u in range(1, M + 1):
            best, best_a = -1.0, 0
            for a in range(0, min(B, u) + 1):
                q = a / u
                val = binary_entropy(q) + q * (L - j) + (1 - q) * V[j + 1, u - a]
                if val > best + TIE_EPS:
                    best, best_a = val, a
            V[j, u], sched[j, u] = best, best_a
    return DpSolution(V[1, M], V[1, M] / L, sched, V)


def _bisection_entropy(t: int, uses: int) -> float:
    """H of the remaining outputs once the beam is trapped in a set of size t.

    Evaluated on the explicit halving tree rather than assumed to be one bit
    per use.
    """
    if uses == 0:
        return 0.0
    hi, lo = -(-t // 2), t // 2
    p = larger_half_probability(t)
    q = float(p * Fraction(hi, t) + (1 - p) * Fraction(lo, t))
    rest = sum(
        float(Fraction(size, t)) * _bisection_entropy(size, uses - 1)
        for size in (hi, lo)
        if size
    )
    return binary_entropy(q) + rest


def _sequence_entropy(M: int, L: int, sizes) -> float:
    total, p0, u = 0.0, 1.0, M
    for j, a in enumerate(sizes, start=1):
        if u == 0:
            break
        q = a / u
        total += p0 * binary_entropy(q)
        if a:
            total += p0 * q * _bisection_entropy(a, L - j)
        p0 *= 1 - q
        u -= a
    return total


def brute_force_small(params: ModelParams) -> float:
    """Max of H(Y^L|S)/L over every integer size sequence (M <= 8, L <= 4)."""
    M, L, B = params.M, params.L, params.B_peak
    if M > 8 or L > 4:
        raise OracleSizeError(f"brute force limited to M<=8, L<=4; got M={M}, L={L}")
    best = 0.0

    def walk(prefix, u):
        nonlocal best
        if len(prefix) == L or u == 0:
            best = max(best, _sequence_entropy(M, L, prefix) / L)
            return
        for a in range(0, min(B, u) + 1):
            walk(prefix + (a,), u - a)

    walk((), M)
    return best


# --- Monte Carlo ---------------------------------------------------------------

MAX_MC_L = 24
CHUNK = 1 << 15


def simulate_histories(params: ModelParams, blocks: int, rng: np.random.Generator) -> np.ndarray:
    """Run ``blocks`` independent blocks of the trapping policy, vectorised.

    Every block carries an explicit candidate mask, a uniformly drawn
    direction and uniformly drawn probe subsets.  Returns the output
    histories packed as integers (bit j-1 holds Y_j).
    """
    M, L, B = params.M, params.L, params.B_peak
    sched = cost_schedule(params)
    n = blocks
    rows = np.arange(n)
    m = rng.integers(0, M, size=n)
    cand = np.ones((n, M), dtype=bool)
    detected = np.zeros(n, dtype=bool)
    hist = np.zeros(n, dtype=np.int64)
    pad = np.full((n, 1), np.inf)
    for j in range(1, L + 1):
        c = sched[j - 1]
        nominal = sched.pool_before(j)
        u = cand.sum(axis=1)
        probe = np.zeros((n, M), dtype=bool)

        und = ~detected
        if c > 0 and und.any():
            target = u[und] * float(c / nominal)
            lo = np.floor(target + 1e-12)
            size = (lo + (rng.random(und.sum()) < target - lo)).astype(np.int64)
            keys = rng.random((und.sum(), M))
            keys[~cand[und]] = np.inf
            order = np.sort(np.concatenate([keys, pad[: und.sum()]], axis=1), axis=1)
            thresh = order[np.arange(und.sum()), size]
            probe[und] = keys < thresh[:, None]

        if detected.any():
            c_det = cand[detected]
            t = c_det.sum(axis=1)
            rank = np.cumsum(c_det, axis=1)
            lower = c_det & (rank <= (t + 1)[:, None] // 2)
            # larger half with probability 1/2 for every trapped size
            take_lower = rng.random(detected.sum()) < 0.5
            probe[detected] = np.where(take_lower[:, None], lower, c_det & ~lower)

        if np.any(probe.sum(axis=1) > B):
            raise AssertionError("simulated probe over budget")
        y = probe[rows, m]
        hist |= y.astype(np.int64) << (j - 1)
        cand = np.where(y[:, None], probe, cand & ~probe)
        detected |= y
    return hist


def history_counts(params: ModelParams, blocks: int, seed, workers: int = 1):
    """Sparse count table over output histories, built from seeded chunks.

    Returns sorted history ids (bit j-1 holds Y_j) and their counts.  Chunks
    draw from ``SeedSequence(seed).spawn``, so the table depends only on
    (params, blocks, seed) and merging is a plain sum.
    """
    if params.L > MAX_MC_L:
        raise OracleSizeError(f"Monte Carlo limited to L<={MAX_MC_L}")
    n_chunks = -(-blocks // CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(CHUNK, blocks - i * CHUNK) for i in range(n_chunks)]
    jobs = list(zip(seqs, sizes))
    if workers > 1 and n_chunks > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_chunk_counts, [params] * len(jobs), jobs))
    else:
        parts = [_chunk_counts(params, job) for job in jobs]
    ids = np.concatenate([p[0] for p in parts])
    cnt = np.concatenate([p[1] for p in parts])
    uniq, inv = np.unique(ids, return_inverse=True)
    return uniq, np.bincount(inv, weights=cnt).astype(np.int64)


def _chunk_counts(params, job):
    seq, size = job
    hist = simulate_histories(params, size, np.random.default_rng(seq))
    return np.unique(hist, return_counts=True)


def _plugin_terms(ids: np.ndarray, counts: np.ndarray, L: int) -> np.ndarray:
    """Plug-in H(Y_j | history class) for j = 1..L from a sparse count table.

    Histories are collapsed to their class: all-zero, or first one at k.
    Counts with ``counts.ndim == 2`` are treated as a batch of tables over
    the same ids.
    """
    counts = np.atleast_2d(counts).astype(float)
    total = counts.sum(axis=1)
    idx = np.asarray(ids, dtype=np.int64)
    terms = np.zeros((counts.shape[0], L))
    for j in range(1, L + 1):
        prefix = idx & ((1 << (j - 1)) - 1)
        yj = (idx >> (j - 1)) & 1
        # class id: 0 for all-zero, else 1 + index of lowest set bit
        low = prefix & -prefix
        cls = np.where(prefix == 0, 0, 1 + np.log2(np.maximum(low, 1)).astype(int))
        for k in range(j):
            sel = cls == k
            if not sel.any():
                continue
            ones = counts[:, sel & (yj == 1)].sum(axis=1)
            n = counts[:, sel].sum(axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                q = np.where(n > 0, ones / np.where(n > 0, n, 1), 0.0)
                h = -(np.where(q > 0, q * np.log2(np.where(q > 0, q, 1)), 0.0)
                      + np.where(q < 1, (1 - q) * np.log2(np.where(q < 1, 1 - q, 1)), 0.0))
            terms[:, j - 1] += n / total * h
    return terms


def mc_entropy_estimate(
    params: ModelParams,
    blocks: int,
    seed=0,
    n_boot: int = 200,
    workers: int = 1,
) -> RateReport:
    """Monte Carlo estimate of H(Y^L|S)/L with a 95% bootstrap half-width.

    Every direction induces the same output law, so histories are pooled
    over directions.  The bootstrap resamples whole blocks (a multinomial
    draw on the history table).
    """
    if blocks < 1000:
        raise ValueError("need at least 1000 blocks")
    ids, counts = history_counts(params, blocks, seed, workers)
    terms = _plugin_terms(ids, counts, params.L)[0]
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1 << 10)[-1])
    boot = rng.multinomial(blocks, counts / blocks, size=n_boot)
    boot_rates = _plugin_terms(ids, boot, params.L).mean(axis=1)
    half = 1.96 * float(np.std(boot_rates, ddof=1))
    report = RateReport(float(terms.mean()), terms.tolist(), "monte-carlo", half)
    report.extra["blocks"] = blocks
    return report

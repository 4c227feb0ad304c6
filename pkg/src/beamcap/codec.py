"""Desk-scale message codec on top of the trapping policy.

Probe sizes follow the policy skeleton with integer sizes: while the pool is
larger than twice the budget, ``B_peak`` beams are probed ("sensing" uses);
once the beam is trapped, or the pool fits in two budgets, the pool is
bisected ("exact" uses).

* Sensing uses pick their subset from message bits with a rejection sampler
  over the C(u, a) subsets.  The receiver keeps an exact list of message
  prefixes consistent with the outputs.
* Exact uses carry one bit each: 0 probes the lower (ceil) half of the
  sorted pool, 1 the upper half.  Knowing the beam, the receiver reads the
  bit off the output whenever it knows the beam's rank inside the pool.

The receiver sees only (y, m) and the public rules.  Padding bits and
rejection fallbacks are transmitter-private, so the decoder branches over
them.  All it needs to track per branch is (pool size, rank of m in the
pool, detected flag).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import NamedTuple, Optional

import numpy as np

from .model import DirectionState, ModelParams, probe_from_indices, transmit
from .strategy import ProbeTracker, init_tracker, split_halves

SCHEMES = ("full", "post-detection")
MAX_K = 20
DEFAULT_MAX_LIST = 1 << 16
_ZERO = np.zeros(1, dtype=np.int64)


class CodecIntegrityError(RuntimeError):
    """Outputs inconsistent with every message; impossible on a clean channel."""


# --- combinatorial number system ------------------------------------------------

def subset_unrank(u: int, a: int, index: int) -> tuple[int, ...]:
    """Lexicographic unranking of a-subsets of {1..u}."""
    if not 0 <= a <= u:
        raise ValueError(f"subset size {a} outside 0..{u}")
    total = comb(u, a)
    if not 0 <= index < total:
        raise ValueError(f"index {index} outside [0, {total})")
    out, x = [], 1
    for remaining in range(a, 0, -1):
        while True:
            block = comb(u - x, remaining - 1)
            if index < block:
                break
            index -= block
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def subset_rank(u: int, subset) -> int:
    subset = sorted(subset)
    a = len(subset)
    index, prev = 0, 0
    for i, s in enumerate(subset):
        for x in range(prev + 1, s):
            index += comb(u - x, a - i - 1)
        prev = s
    return index


# --- messages and bit sources ---------------------------------------------------

@dataclass(frozen=True)
class Message:
    bits: tuple[int, ...]

    @classmethod
    def from_int(cls, value: int, K: int) -> "Message":
        if not 0 <= value < (1 << K) or K < 0:
            raise ValueError(f"value {value} does not fit in {K} bits")
        return cls(tuple((value >> (K - 1 - i)) & 1 for i in range(K)))

    @property
    def value(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    def __len__(self):
        return len(self.bits)


class PrivateSource:
    """Transmitter-only randomness (pad bits, rejection fallbacks)."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def bits(self, n: int) -> int:
        return int(self.rng.integers(0, 1 << n)) if n else 0

    def index(self, n: int) -> int:
        return int(self.rng.integers(0, n))


class BitCursor:
    """Reads message bits MSB-first; past the end it pads with private bits."""

    def __init__(self, bits, private: PrivateSource):
        self.bits = tuple(bits)
        self.pos = 0
        self.private = private
        self.padded = False

    @property
    def remaining(self) -> int:
        return len(self.bits) - self.pos

    def peek(self, n: int) -> tuple[int, int]:
        """(value of the next n bits, how many of them are message bits)."""
        real = min(n, self.remaining)
        v = 0
        for b in self.bits[self.pos:self.pos + real]:
            v = (v << 1) | b
        if real < n:
            self.padded = True
            v = (v << (n - real)) | self.private.bits(n - real)
        return v, real

    def advance(self, real: int):
        self.pos += real


# --- shared skeleton --------------------------------------------------------------

def use_mode(u: int, detected: bool, B: int) -> str:
    if B >= 1 and (detected or u <= 2 * B):
        return "exact"
    return "sensing"


def sensing_size(u: int, B: int) -> int:
    return min(B, u)


def index_bits(C: int) -> int:
    return (C - 1).bit_length()


@lru_cache(maxsize=None)
def _sensing_table(u: int, a: int, r: int):
    """For every subset index: (m hit?, new pool size, new rank of m)."""
    out = []
    for v in range(comb(u, a)):
        sub = subset_unrank(u, a, v)
        pos = [s - 1 for s in sub]
        if r in pos:
            out.append((1, a, pos.index(r)))
        else:
            out.append((0, u - a, r - sum(p < r for p in pos)))
    return tuple(out)


def _exact_step(t: int, r: int, y: int):
    """Decoded bit and next (size, rank) for one bisection use."""
    h = -(-t // 2)
    in_upper = r >= h
    bit = int(in_upper == bool(y))
    nxt = (t - h, r - h) if in_upper else (h, r)
    return bit, nxt


def _add_constraint(cons: tuple, length: int, thr: int) -> tuple:
    """Record that the next ``length`` pending message bits are >= ``thr``."""
    if thr <= 0:
        return cons
    return tuple(sorted(set(cons) | {(length, thr)}))


def _apply_constraints(cons: tuple, nm: int, q: int):
    """Check pending bounds against the next ``nm`` bits ``q``.

    Returns the residual bounds on the bits still unread, or None when
    ``q`` violates one of them.
    """
    out = set()
    for length, thr in cons:
        if nm >= length:
            if q >> (nm - length) < thr:
                return None
            continue
        shift = length - nm
        top = thr >> shift
        if q < top:
            return None
        if q == top and thr & ((1 << shift) - 1):
            out.add((shift, thr & ((1 << shift) - 1)))
    return tuple(sorted(out))


# --- encoder ----------------------------------------------------------------------

def encode_use(
    tracker: ProbeTracker,
    cursor: BitCursor,
    exact_cursor: Optional[BitCursor] = None,
    message_driven: bool = True,
) -> np.ndarray:
    """Choose and commit this use's probe; returns the probe vector.

    ``exact_cursor`` feeds the bisection bits (defaults to ``cursor``).
    A sensing use with no message bits to carry (``message_driven=False``
    or an exhausted cursor) probes the lexicographically first subset.
    """
    B = tracker.params.B_peak
    cand = tracker.candidates
    u = len(cand)
    if use_mode(u, tracker.detected, B) == "exact":
        src = exact_cursor if exact_cursor is not None else cursor
        bit, real = src.peek(1)
        src.advance(real)
        lower, upper = split_halves(cand)
        return tracker.select(upper if bit else lower)
    a = sensing_size(u, B)
    C = comb(u, a)
    n = index_bits(C)
    if message_driven and cursor.remaining > 0:
        v, real = cursor.peek(n)
        if v < C:
            cursor.advance(real)
        else:
            v = cursor.private.index(C)
    else:
        # nothing to convey: a public default the decoder can replay
        v = 0
    return tracker.select(cand[i - 1] for i in subset_unrank(u, a, v))


# --- decoder ----------------------------------------------------------------------

@dataclass
class DecodeResult:
    status: str  # unique | ambiguous | error
    decoded: Optional[Message]
    candidates: int
    exact_bits: list = field(default_factory=list)  # None where the rank is unknown
    truncated: bool = False

    def __post_init__(self):
        if self.status == "unique" and (self.candidates != 1 or self.decoded is None):
            raise ValueError("unique decode needs exactly one candidate")


def decode_block(
    y,
    m: int,
    params: ModelParams,
    K: int = 0,
    scheme: str = "full",
    max_list: int = DEFAULT_MAX_LIST,
) -> DecodeResult:
    """List-decode one block from its outputs and the true direction.

    Full scheme: ``decoded`` is the consumed prefix of the K-bit sensing
    message (when unique); ``exact_bits`` holds one entry per exact use.
    Post-detection scheme: the message is the first K exact bits.
    ``max_list`` bounds the tracked prefix list; past it the result is
    reported ambiguous and ``truncated`` is set.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if len(y) != params.L:
        raise ValueError(f"expected {params.L} outputs, got {len(y)}")
    B = params.B_peak
    driven = scheme == "full" and K > 0
    # (u, r, detected, prefix length, pending constraints) -> prefix integers
    hyps: dict[tuple, np.ndarray] = {(params.M, m - 1, False, 0, ()): _ZERO}
    truncated = False
    exact_bits = []
    for yj in y:
        modes = {use_mode(u, det, B) for (u, _, det, _, _) in hyps}
        if len(modes) != 1:
            raise CodecIntegrityError("hypotheses disagree on the use mode")
        new: dict[tuple, list] = {}
        if modes == {"exact"}:
            decoded = set()
            for (t, r, _, plen, cons), prefixes in hyps.items():
                bit, (t2, r2) = _exact_step(t, r, yj)
                decoded.add(bit)
                new.setdefault((t2, r2, True, plen, cons), []).append(prefixes)
            exact_bits.append(decoded.pop() if len(decoded) == 1 else None)
        else:
            for (u, r, det, plen, cons), prefixes in hyps.items():
                a = sensing_size(u, B)
                C = comb(u, a)
                n = index_bits(C)
                table = _sensing_table(u, a, r)
                nm = min(n, K - plen) if driven else 0
                det2 = det or bool(yj)
                if nm == 0:
                    hit, u2, r2 = table[0]
                    if hit == yj:
                        new.setdefault((u2, r2, det2, plen, cons), []).append(prefixes)
                    continue
                ok = [(v, u2, r2) for v, (hit, u2, r2) in enumerate(table) if hit == yj]
                npad = n - nm
                if C < (1 << n):
                    # rejected read: bits stay pending but must be >= C >> npad
                    cons2 = _add_constraint(cons, nm, C >> npad)
                    for u2, r2 in {(u2, r2) for _, u2, r2 in ok}:
                        new.setdefault((u2, r2, det2, plen, cons2), []).append(prefixes)
                parts: dict[tuple, set] = {}
                for v, u2, r2 in ok:
                    q = v >> npad
                    rest = _apply_constraints(cons, nm, q)
                    if rest is not None:
                        parts.setdefault((u2, r2, rest), set()).add(q)
                for (u2, r2, rest), mparts in parts.items():
                    q = np.fromiter(mparts, dtype=np.int64)
                    grown = _ZERO if truncated else ((prefixes[:, None] << nm) | q[None, :]).ravel()
                    new.setdefault((u2, r2, det2, plen + nm, rest), []).append(grown)
        if not new:
            raise CodecIntegrityError("no message is consistent with the outputs")
        hyps = {k: v[0] if len(v) == 1 else np.unique(np.concatenate(v)) for k, v in new.items()}
        if not truncated and sum(len(s) for s in hyps.values()) > max_list:
            truncated = True
            hyps = {k: _ZERO for k in hyps}

    if truncated:
        return DecodeResult("ambiguous", None, max_list + 1, exact_bits, True)
    by_len: dict[int, list] = {}
    for (_, _, _, plen, _), arr in hyps.items():
        by_len.setdefault(plen, []).append(arr)
    found = {plen: np.unique(np.concatenate(v)) for plen, v in by_len.items()}
    n_found = sum(len(v) for v in found.values())
    if scheme == "post-detection":
        msg_bits = exact_bits[:K]
        if len(msg_bits) == K and None not in msg_bits:
            return DecodeResult("unique", Message(tuple(msg_bits)), 1, exact_bits)
        return DecodeResult("ambiguous", None, 2, exact_bits)
    if n_found == 1:
        (plen, p), = ((k, v[0]) for k, v in found.items())
        return DecodeResult("unique", Message.from_int(int(p), plen), 1, exact_bits)
    return DecodeResult("ambiguous", None, n_found, exact_bits)


# --- block simulation -----------------------------------------------------------

@dataclass
class CodecBlock:
    m: int
    y: list
    sensing: Message
    consumed: int  # sensing-message bits actually conveyed
    exact: list  # bits fed to exact uses, message bits only
    result: DecodeResult


def run_codec_block(
    params: ModelParams,
    m: int,
    message: Message,
    exact_bits,
    private: PrivateSource,
    scheme: str = "full",
    max_list: int = DEFAULT_MAX_LIST,
) -> CodecBlock:
    full = scheme == "full"
    tracker = init_tracker(params)
    state = DirectionState(m, params.M)
    cursor = BitCursor(message.bits if full else (), private)
    ex_bits = tuple(exact_bits) if full else tuple(message.bits)
    ex_cursor = BitCursor(ex_bits, private)
    y = []
    for _ in range(params.L):
        x = encode_use(tracker, cursor, ex_cursor, message_driven=full)
        yj = transmit(state, x)
        tracker.update(yj)
        y.append(yj)
    res = decode_block(y, m, params, len(message), scheme, max_list)
    return CodecBlock(m, y, message, cursor.pos, list(ex_bits[:ex_cursor.pos]), res)


class ErrorRate(NamedTuple):
    pe: float
    bits_per_use: float
    wrong_unique: int
    blocks: int


def _score(block: CodecBlock, scheme: str, K: int) -> tuple[int, bool, bool]:
    """(delivered message bits, block decoded fully and correctly, silent error)."""
    res = block.result
    wrong = False
    delivered = 0
    known = [(b, d) for b, d in zip(block.exact, res.exact_bits) if d is not None]
    wrong |= any(b != d for b, d in known)
    if scheme == "full":
        sensing_ok = False
        if res.status == "unique":
            truth = block.sensing.bits[:block.consumed]
            sensing_ok = res.decoded.bits == truth
            wrong |= not sensing_ok
        delivered = (block.consumed if sensing_ok else 0) + sum(b == d for b, d in known)
        exact_ok = all(d is not None for d in res.exact_bits[:len(block.exact)])
        ok = sensing_ok and exact_ok and not wrong
    else:
        delivered = sum(b == d for b, d in known)
        ok = res.status == "unique" and res.decoded.bits == block.sensing.bits
        if res.status == "unique" and not ok:
            wrong = True
    return delivered, ok, wrong


SHARD = 500


def _error_shard(args):
    params, K, n, seq, scheme, max_list = args
    msg_rng, priv_rng = (np.random.default_rng(s) for s in seq.spawn(2))
    private = PrivateSource(priv_rng)
    errors = wrong = delivered = 0
    for _ in range(n):
        m = int(msg_rng.integers(1, params.M + 1))
        msg = Message(tuple(int(b) for b in msg_rng.integers(0, 2, K)))
        exact = [int(b) for b in msg_rng.integers(0, 2, params.L)]
        block = run_codec_block(params, m, msg, exact, private, scheme, max_list)
        d, ok, w = _score(block, scheme, K)
        delivered += d
        errors += not ok
        wrong += w
    return errors, wrong, delivered


def simulate_error_rate(
    params: ModelParams,
    K: int,
    blocks: int,
    seed=0,
    scheme: str = "full",
    max_list: int = DEFAULT_MAX_LIST,
    workers: int = 1,
) -> ErrorRate:
    """Monte Carlo block error rate and delivered bits per channel use.

    A block counts as correct when every message bit it carried is decoded
    uniquely and correctly.  Delivered bits include only message bits the
    receiver recovers with certainty; padding is never counted.  Blocks run
    in fixed shards seeded from ``seed``, so results do not depend on
    ``workers``.
    """
    if not 0 <= K <= MAX_K:
        raise ValueError(f"K must be in 0..{MAX_K} for list decoding")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    n_shards = -(-blocks // SHARD)
    seqs = np.random.SeedSequence(seed).spawn(n_shards)
    jobs = [
        (params, K, min(SHARD, blocks - i * SHARD), seq, scheme, max_list)
        for i, seq in enumerate(seqs)
    ]
    if workers > 1 and n_shards > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_error_shard, jobs))
    else:
        parts = [_error_shard(job) for job in jobs]
    errors, wrong, delivered = (sum(col) for col in zip(*parts))
    return ErrorRate(errors / blocks, delivered / (blocks * params.L), wrong, blocks)

"""Weighted minwise hashing of shingle sets via consistent weighted sampling.

For each hash slot the sampler draws, per token, deterministic pseudo-random
variates keyed by (seed, slot, token) and selects the token minimizing the
gamma-variate quantity of Ioffe-style consistent weighted sampling. The
probability that two sets produce the same key in one slot equals their
weighted Jaccard similarity, which is what makes the hash tables work.

All randomness is stateless: a 64-bit mixing chain replaces stored random
tables, so hashing the same set with the same (slot, seed) always returns
the same key, in O(set size) time and O(1) memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .shingle import WeightedShingleSet

_U64 = np.uint64
_MASK64 = (1 << 64) - 1

# Salt constants for the per-token variate streams (arbitrary odd 64-bit).
_SALT_U1 = _U64(0xA0761D6478BD642F)
_SALT_U2 = _U64(0xE7037ED1A0B428DB)
_SALT_V1 = _U64(0x8EBC6AF09C88C6E3)
_SALT_V2 = _U64(0x589965CC75374CC3)
_SALT_BETA = _U64(0x1D8E4E27C47D124F)
_SALT_KEY = _U64(0xEB44ACCAB455D165)


def mix64(x):
    """splitmix64 finalizer; accepts uint64 scalars or arrays.

    Multiplication wraps mod 2**64 by design; the errstate guard silences
    numpy's overflow warning for the scalar case.
    """
    with np.errstate(over="ignore"):
        z = x + _U64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
        return z ^ (z >> _U64(31))


def _unit_interval(h):
    """Map uint64 to the open interval (0, 1)."""
    return ((h >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _cws_keys(tokens: np.ndarray, counts: np.ndarray, slots: np.ndarray, seed: int) -> np.ndarray:
    """One bucket key per requested slot index; vectorized over (slots, tokens).

    Works in the log domain (ln a = ln c - ln y - r) so no intermediate
    overflows regardless of weights.
    """
    if tokens.shape[0] == 0:
        raise ValueError("cannot hash an empty weighted set")
    tk = mix64(tokens.astype(np.uint64) ^ mix64(_U64(seed & _MASK64)))
    sl = mix64(slots.astype(np.uint64) * _U64(0xD1B54A32D192ED03))
    base = mix64(tk[None, :] ^ sl[:, None])

    u1 = _unit_interval(mix64(base ^ _SALT_U1))
    u2 = _unit_interval(mix64(base ^ _SALT_U2))
    v1 = _unit_interval(mix64(base ^ _SALT_V1))
    v2 = _unit_interval(mix64(base ^ _SALT_V2))
    beta = _unit_interval(mix64(base ^ _SALT_BETA))

    r = -np.log(u1) - np.log(u2)      # Gamma(2,1)
    ln_c = np.log(-np.log(v1) - np.log(v2))
    ln_w = np.log(counts.astype(np.float64))

    t = np.floor(ln_w[None, :] / r + beta)
    ln_y = r * (t - beta)
    ln_a = ln_c - ln_y - r

    j = np.argmin(ln_a, axis=1)
    rows = np.arange(slots.shape[0])
    t_star = t[rows, j].astype(np.int64).astype(np.uint64)
    return mix64(tokens[j].astype(np.uint64) ^ mix64(t_star ^ _SALT_KEY))


@dataclass(frozen=True)
class MinHashSignature:
    values: np.ndarray  # (d,) uint64 bucket keys
    d: int
    seed: int

    def __post_init__(self):
        if self.values.shape != (self.d,):
            raise ValueError(f"signature has {self.values.shape[0]} values, expected d={self.d}")


def wmh_one(weighted_set: WeightedShingleSet, hash_index: int, seed: int) -> int:
    """Bucket key of one hash slot: mix of the argmin token and its
    discretized companion value from the sampling."""
    keys = _cws_keys(
        weighted_set.tokens,
        weighted_set.counts,
        np.array([hash_index], dtype=np.uint64),
        seed,
    )
    return int(keys[0])


def signature(weighted_set: WeightedShingleSet, d: int, seed: int, concat: int = 1) -> MinHashSignature:
    """d bucket keys, one per hash table; values[i] = wmh_one(set, i, seed).

    concat > 1 mixes that many consecutive raw samples into each key,
    sharpening bucket selectivity at the cost of recall (off by default).
    """
    if d < 1:
        raise ValueError(f"signature width d must be >= 1, got {d}")
    if concat < 1:
        raise ValueError(f"concat order must be >= 1, got {concat}")
    slots = np.arange(d * concat, dtype=np.uint64)
    keys = _cws_keys(weighted_set.tokens, weighted_set.counts, slots, seed)
    if concat > 1:
        folded = keys.reshape(d, concat)
        acc = folded[:, 0]
        for i in range(1, concat):
            acc = mix64(acc ^ folded[:, i])
        keys = acc
    return MinHashSignature(values=keys, d=d, seed=seed)

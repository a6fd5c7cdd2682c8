"""n-gram shingling of bit sketches into weighted token sets.

Every contiguous n-bit substring of the sketch becomes a token (encoded as
an unsigned integer, +1 -> bit 1, -1 -> bit 0, first bit most significant)
and its occurrence count is the token's weight. Two sketches that agree on
a long run, possibly at different offsets, share most of their shingles, so
the weighted Jaccard similarity of the shingle sets is shift-tolerant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sketch import BitSketch

MAX_SHINGLE_BITS = 64


@dataclass(frozen=True)
class WeightedShingleSet:
    """Tokens (sorted, unique, uint64) with positive integer weights."""

    tokens: np.ndarray
    counts: np.ndarray
    n: int

    @property
    def size(self) -> int:
        return self.tokens.shape[0]

    @property
    def total_weight(self) -> int:
        return int(self.counts.sum())

    def weight_of(self, token: int) -> int:
        i = np.searchsorted(self.tokens, np.uint64(token))
        if i < self.size and self.tokens[i] == np.uint64(token):
            return int(self.counts[i])
        return 0

    def as_dict(self) -> dict[int, int]:
        return {int(t): int(c) for t, c in zip(self.tokens, self.counts)}

    @classmethod
    def from_counts(cls, counts: dict[int, int], n: int) -> "WeightedShingleSet":
        items = sorted(counts.items())
        tokens = np.array([t for t, _ in items], dtype=np.uint64)
        weights = np.array([c for _, c in items], dtype=np.int64)
        if np.any(weights < 1):
            raise ValueError("shingle weights must be >= 1")
        return cls(tokens=tokens, counts=weights, n=n)


def tokenize_bits(bits: np.ndarray, n: int) -> np.ndarray:
    """Encode every length-n window of a {+1,-1} stream as a uint64."""
    nb = bits.shape[0]
    if n < 1:
        raise ValueError(f"shingle length n must be >= 1, got {n}")
    if n > MAX_SHINGLE_BITS:
        raise ValueError(f"shingle length n must be <= {MAX_SHINGLE_BITS}, got {n}")
    if n > nb:
        raise ValueError(f"shingle length {n} exceeds sketch length {nb}")
    ones = (bits > 0).astype(np.uint64)
    windows = np.lib.stride_tricks.sliding_window_view(ones, n)
    powers = np.left_shift(np.uint64(1), np.arange(n - 1, -1, -1).astype(np.uint64))
    return (windows * powers).sum(axis=1, dtype=np.uint64)


def shingle_sketch(sketch: BitSketch, n: int) -> WeightedShingleSet:
    """Weighted set of all n-gram tokens in the sketch; total weight N_B - n + 1."""
    stream = tokenize_bits(sketch.bits, n)
    tokens, counts = np.unique(stream, return_counts=True)
    return WeightedShingleSet(tokens=tokens, counts=counts.astype(np.int64), n=n)


def weighted_jaccard(a: WeightedShingleSet, b: WeightedShingleSet) -> float:
    """Sum of componentwise min over sum of componentwise max, in [0, 1]."""
    if a.size == 0 and b.size == 0:
        raise ValueError("weighted Jaccard is undefined for two empty sets")
    union = np.union1d(a.tokens, b.tokens)
    wa = np.zeros(union.shape[0], dtype=np.int64)
    wb = np.zeros(union.shape[0], dtype=np.int64)
    ia = np.searchsorted(union, a.tokens)
    ib = np.searchsorted(union, b.tokens)
    wa[ia] = a.counts
    wb[ib] = b.counts
    return float(np.minimum(wa, wb).sum() / np.maximum(wa, wb).sum())

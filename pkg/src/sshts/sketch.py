"""Sliding random-filter sketch: series -> {+1, -1} bit stream.

A length-W filter of i.i.d. standard normal weights slides over the series
with step delta; each position emits the sign of the inner product with the
window under it. Bit i summarizes the window starting at i*delta, so a shift
of the series by exactly delta samples shifts the bit stream by one bit.
That shift covariance is what makes the downstream shingles warp-tolerant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TimeSeries


@dataclass(frozen=True)
class RandomFilter:
    weights: np.ndarray  # (W,) float64
    seed: int

    @property
    def W(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class BitSketch:
    bits: np.ndarray  # (N_B,) int8 in {+1, -1}
    delta: int
    source_len: int


def make_filter(W: int, seed: int) -> RandomFilter:
    """Deterministic filter: W standard normal draws from the given seed."""
    if W < 1:
        raise ValueError(f"filter length W must be >= 1, got {W}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    weights = np.random.default_rng(seed).standard_normal(W)
    return RandomFilter(weights=weights, seed=seed)


def num_sketch_bits(m: int, W: int, delta: int) -> int:
    """Bit count floor((m - W) / delta) + 1: one bit per window position."""
    return (m - W) // delta + 1


def sketch_values(values: np.ndarray, weights: np.ndarray, delta: int) -> np.ndarray:
    """Sign stream of one series as an int8 array; sign(0) = +1."""
    W = weights.shape[0]
    m = values.shape[0]
    if m < W:
        raise ValueError(f"series length {m} shorter than filter length {W}")
    if delta < 1:
        raise ValueError(f"step size delta must be >= 1, got {delta}")
    windows = np.lib.stride_tricks.sliding_window_view(values, W)[::delta]
    dots = windows @ weights
    return np.where(dots >= 0.0, 1, -1).astype(np.int8)


def sketch_series(series: TimeSeries, filt: RandomFilter, delta: int) -> BitSketch:
    bits = sketch_values(series.values, filt.weights, delta)
    return BitSketch(bits=bits, delta=delta, source_len=len(series))


def sketch_matrix(values: np.ndarray, weights: np.ndarray, delta: int) -> np.ndarray:
    """Sign streams for a whole (N, m) dataset at once, one row per series.

    Chunked so the strided-window temporaries stay bounded; results are
    identical to sketch_values row by row.
    """
    W = weights.shape[0]
    n, m = values.shape
    if m < W:
        raise ValueError(f"series length {m} shorter than filter length {W}")
    if delta < 1:
        raise ValueError(f"step size delta must be >= 1, got {delta}")
    nb = num_sketch_bits(m, W, delta)
    out = np.empty((n, nb), dtype=np.int8)
    chunk = max(1, (1 << 25) // max(1, nb * W))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        windows = np.lib.stride_tricks.sliding_window_view(values[start:stop], W, axis=1)
        dots = windows[:, ::delta, :] @ weights
        out[start:stop] = np.where(dots >= 0.0, 1, -1)
    return out

"""Exact DTW under a Sakoe-Chiba band, the three cheap lower bounds, and the
branch-and-bound exact searcher.

Distances are computed in the squared domain throughout the hot loops (the
square root is taken once at the API boundary), and the dynamic program keeps
two rolling rows instead of the full matrix. The searcher maintains a
best-so-far equal to the current k-th smallest DTW and drops a candidate as
soon as any of the bounds proves it cannot beat that, attributing the prune
to the first (cheapest) bound that fired:

    lb_kim  O(1)  ->  lb_keogh  O(m)  ->  lb_keogh2  O(m)  ->  DTW  O(m*band)

lb_keogh envelopes the query and sums the candidate's excursions outside it;
lb_keogh2 swaps the roles. The full DTW pass early-abandons once every cell
of some row exceeds best-so-far. Ties on distance break toward the lower id,
and pruning is strict (a bound equal to best-so-far still goes to DTW), so
results match brute force exactly even with duplicate series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class WarpingParams:
    """Sakoe-Chiba constraint |i - j| <= radius, radius = round(band * m)."""

    band: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.band <= 1.0:
            raise ValueError(f"warping band must be in [0, 1], got {self.band}")

    def radius(self, m: int) -> int:
        return int(round(self.band * m))


@dataclass(frozen=True)
class Envelope:
    """Running min/max of a series over the warping window, per index."""

    upper: np.ndarray
    lower: np.ndarray


@dataclass(frozen=True)
class SearchStats:
    candidates: int
    kim_pruned: int
    keogh_pruned: int
    keogh2_pruned: int
    dtw_computed: int
    dtw_abandoned: int

    @property
    def pruned(self) -> int:
        return self.kim_pruned + self.keogh_pruned + self.keogh2_pruned

    @property
    def pruned_fraction(self) -> float:
        if self.candidates == 0:
            return 0.0
        return self.pruned / self.candidates

    def fraction(self, bound: str) -> float:
        if self.candidates == 0:
            return 0.0
        return getattr(self, f"{bound}_pruned") / self.candidates


@dataclass(frozen=True)
class SearchResult:
    ids: list[int]
    distances: list[float]
    stats: SearchStats
    warning: str | None = None


@njit(cache=True, nogil=True)
def _dtw_band_sq(x, y, r, abandon_sq):
    """Squared banded DTW; returns inf if every cell of some row exceeds
    abandon_sq (pass a negative abandon_sq to disable)."""
    m = x.shape[0]
    prev = np.full(m, np.inf)
    curr = np.full(m, np.inf)
    for i in range(m):
        lo = i - r
        if lo < 0:
            lo = 0
        hi = i + r
        if hi > m - 1:
            hi = m - 1
        if lo > 0:
            curr[lo - 1] = np.inf
        row_min = np.inf
        for j in range(lo, hi + 1):
            d = x[i] - y[j]
            d = d * d
            if i == 0 and j == 0:
                c = d
            else:
                best = prev[j]
                if j > 0:
                    if curr[j - 1] < best:
                        best = curr[j - 1]
                    if prev[j - 1] < best:
                        best = prev[j - 1]
                c = d + best
            curr[j] = c
            if c < row_min:
                row_min = c
        if abandon_sq >= 0.0 and row_min > abandon_sq:
            return np.inf
        tmp = prev
        prev = curr
        curr = tmp
    return prev[m - 1]


@njit(cache=True, nogil=True)
def _envelope_into(x, r, upper, lower):
    """Windowed running max/min over [i-r, i+r] via monotonic deques."""
    m = x.shape[0]
    qmax = np.empty(m, dtype=np.int64)
    qmin = np.empty(m, dtype=np.int64)
    hmax = 0
    tmax = 0
    hmin = 0
    tmin = 0
    for j in range(m + r):
        if j < m:
            while tmax > hmax and x[qmax[tmax - 1]] <= x[j]:
                tmax -= 1
            qmax[tmax] = j
            tmax += 1
            while tmin > hmin and x[qmin[tmin - 1]] >= x[j]:
                tmin -= 1
            qmin[tmin] = j
            tmin += 1
        i = j - r
        if i >= 0:
            while qmax[hmax] < i - r:
                hmax += 1
            while qmin[hmin] < i - r:
                hmin += 1
            upper[i] = x[qmax[hmax]]
            lower[i] = x[qmin[hmin]]


@njit(cache=True, nogil=True)
def _lb_keogh_sq(c, upper, lower, abandon_sq):
    """Squared envelope bound with running early exit past abandon_sq."""
    total = 0.0
    for i in range(c.shape[0]):
        v = c[i]
        if v > upper[i]:
            d = v - upper[i]
            total += d * d
        elif v < lower[i]:
            d = lower[i] - v
            total += d * d
        if abandon_sq >= 0.0 and total > abandon_sq:
            return total
    return total


@njit(cache=True, nogil=True)
def _cascade_search(X, cand_ids, q, q_upper, q_lower, r, k):
    """Lower-bound cascade plus DTW over the candidate ids, in order.

    Returns (top_ids, top_d2, counters) where counters holds
    [kim_pruned, keogh_pruned, keogh2_pruned, dtw_computed, dtw_abandoned].
    Top-k is kept sorted ascending by (squared distance, id).
    """
    m = q.shape[0]
    n_cand = cand_ids.shape[0]
    size = k if k < n_cand else n_cand

    top_ids = np.full(size, -1, dtype=np.int64)
    top_d2 = np.full(size, np.inf)
    filled = 0

    c_upper = np.empty(m)
    c_lower = np.empty(m)
    counters = np.zeros(5, dtype=np.int64)

    for ci in range(n_cand):
        idx = cand_ids[ci]
        c = X[idx]
        full = filled == size
        bsf = top_d2[size - 1] if full else np.inf
        bsf_id = top_ids[size - 1] if full else -1
        abandon = bsf if full else -1.0

        d0 = c[0] - q[0]
        dm = c[m - 1] - q[m - 1]
        kim = d0 * d0 + dm * dm
        if full and (kim > bsf or (kim == bsf and idx > bsf_id)):
            counters[0] += 1
            continue

        lb1 = _lb_keogh_sq(c, q_upper, q_lower, abandon)
        if full and (lb1 > bsf or (lb1 == bsf and idx > bsf_id)):
            counters[1] += 1
            continue

        _envelope_into(c, r, c_upper, c_lower)
        lb2 = _lb_keogh_sq(q, c_upper, c_lower, abandon)
        if full and (lb2 > bsf or (lb2 == bsf and idx > bsf_id)):
            counters[2] += 1
            continue

        counters[3] += 1
        d2 = _dtw_band_sq(c, q, r, abandon)
        if np.isinf(d2):
            counters[4] += 1
            continue
        if full and (d2 > bsf or (d2 == bsf and idx > bsf_id)):
            continue

        # insertion into the sorted top-k
        pos = filled if filled < size else size - 1
        while pos > 0 and (top_d2[pos - 1] > d2 or (top_d2[pos - 1] == d2 and top_ids[pos - 1] > idx)):
            top_d2[pos] = top_d2[pos - 1]
            top_ids[pos] = top_ids[pos - 1]
            pos -= 1
        top_d2[pos] = d2
        top_ids[pos] = idx
        if filled < size:
            filled += 1

    return top_ids[:filled], top_d2[:filled], counters


def dtw_distance(x, y, params: WarpingParams = WarpingParams(), abandon_above: float | None = None) -> float:
    """Minimal cumulative squared-cost warping distance, square-rooted.

    With abandon_above set, returns inf as soon as every cell of some row of
    the dynamic program exceeds abandon_above squared.
    """
    xv = _values_of(x)
    yv = _values_of(y)
    if xv.shape[0] != yv.shape[0]:
        raise ValueError(f"length mismatch: {xv.shape[0]} vs {yv.shape[0]}")
    r = params.radius(xv.shape[0])
    ab = -1.0 if abandon_above is None else float(abandon_above) ** 2
    return float(np.sqrt(_dtw_band_sq(xv, yv, r, ab)))


def lb_kim(x, y) -> float:
    """Distance of the first and last point pairs; O(1) lower bound."""
    xv = _values_of(x)
    yv = _values_of(y)
    if xv.shape[0] != yv.shape[0]:
        raise ValueError(f"length mismatch: {xv.shape[0]} vs {yv.shape[0]}")
    d0 = xv[0] - yv[0]
    dm = xv[-1] - yv[-1]
    return float(np.sqrt(d0 * d0 + dm * dm))


def build_envelope(q, params: WarpingParams = WarpingParams()) -> Envelope:
    qv = _values_of(q)
    r = params.radius(qv.shape[0])
    upper = np.empty_like(qv)
    lower = np.empty_like(qv)
    _envelope_into(qv, r, upper, lower)
    return Envelope(upper=upper, lower=lower)


def lb_keogh(env: Envelope, c) -> float:
    """Distance from the candidate to the query's envelope."""
    cv = _values_of(c)
    if cv.shape[0] != env.upper.shape[0]:
        raise ValueError(f"length mismatch: {cv.shape[0]} vs {env.upper.shape[0]}")
    return float(np.sqrt(_lb_keogh_sq(cv, env.upper, env.lower, -1.0)))


def lb_keogh2(q, c, params: WarpingParams = WarpingParams()) -> float:
    """lb_keogh with the query/candidate roles swapped."""
    return lb_keogh(build_envelope(c, params), q)


def _values_of(x) -> np.ndarray:
    if isinstance(x, np.ndarray):
        return np.ascontiguousarray(x, dtype=np.float64)
    return np.ascontiguousarray(x.values, dtype=np.float64)


def exact_search(dataset, q, k: int, params: WarpingParams = WarpingParams()) -> SearchResult:
    """Exact top-k DTW neighbors of q with the full bound cascade.

    Candidates are visited in id order; ties break toward the lower id.
    When k exceeds the dataset size, all series are returned and the result
    carries a warning.
    """
    qv = _values_of(q)
    if dataset.length != qv.shape[0]:
        raise ValueError(f"query length {qv.shape[0]} does not match dataset length {dataset.length}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    warning = None
    if k > dataset.n_series:
        warning = f"k={k} exceeds dataset size {dataset.n_series}; returning all series"
        k = dataset.n_series
    r = params.radius(qv.shape[0])
    env = build_envelope(qv, params)
    cand = np.arange(dataset.n_series, dtype=np.int64)
    ids, d2, counters = _cascade_search(dataset.values, cand, qv, env.upper, env.lower, r, k)
    stats = SearchStats(
        candidates=dataset.n_series,
        kim_pruned=int(counters[0]),
        keogh_pruned=int(counters[1]),
        keogh2_pruned=int(counters[2]),
        dtw_computed=int(counters[3]),
        dtw_abandoned=int(counters[4]),
    )
    return SearchResult(
        ids=[int(i) for i in ids],
        distances=[float(v) for v in np.sqrt(d2)],
        stats=stats,
        warning=warning,
    )

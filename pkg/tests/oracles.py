"""Independent reference implementations used only to generate expected
values in tests. Everything here is deliberately naive: plain loops and
exhaustive enumeration, sharing no code with the package's fast paths.
"""

import numpy as np


def naive_sketch(values, weights, delta):
    """Sign stream by direct window loop."""
    m = len(values)
    W = len(weights)
    bits = []
    i = 0
    while i * delta + W <= m:
        dot = 0.0
        for j in range(W):
            dot += weights[j] * values[i * delta + j]
        bits.append(1 if dot >= 0 else -1)
        i += 1
    return np.array(bits, dtype=np.int8)


def naive_shingle_counts(bits, n):
    """Count n-bit substrings by scanning every position."""
    counts = {}
    for i in range(len(bits) - n + 1):
        token = 0
        for j in range(n):
            token = (token << 1) | (1 if bits[i + j] > 0 else 0)
        counts[token] = counts.get(token, 0) + 1
    return counts


def naive_jaccard(ca, cb):
    """Weighted Jaccard of two token->count dicts."""
    keys = set(ca) | set(cb)
    num = sum(min(ca.get(k, 0), cb.get(k, 0)) for k in keys)
    den = sum(max(ca.get(k, 0), cb.get(k, 0)) for k in keys)
    return num / den


def enumerate_dtw(x, y, radius):
    """Exact DTW by exhaustive enumeration of every monotone contiguous
    warping path from (0,0) to (m-1,m-1) inside the band. Exponential;
    only usable for very short series."""
    m = len(x)
    best = [np.inf]

    def walk(i, j, acc):
        if abs(i - j) > radius:
            return
        acc = acc + (x[i] - y[j]) ** 2
        if acc >= best[0]:
            return  # partial sums only grow
        if i == m - 1 and j == m - 1:
            best[0] = acc
            return
        if i + 1 < m and j + 1 < m:
            walk(i + 1, j + 1, acc)
        if i + 1 < m:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)

    walk(0, 0, 0.0)
    return np.sqrt(best[0])


def naive_envelope(values, radius):
    """Windowed min/max by direct O(m * r) scan."""
    m = len(values)
    upper = np.empty(m)
    lower = np.empty(m)
    for i in range(m):
        lo = max(0, i - radius)
        hi = min(m - 1, i + radius)
        upper[i] = values[lo:hi + 1].max()
        lower[i] = values[lo:hi + 1].min()
    return upper, lower


def naive_ndcg(retrieved, gold, k):
    """Direct summation of the discounted-gain formula."""
    import math

    rel = {}
    for pos, item in enumerate(gold[:k]):
        rel[item] = k - (pos + 1)
    dcg = sum(rel.get(item, 0) / math.log2(pos + 2) for pos, item in enumerate(retrieved[:k]))
    idcg = sum((k - (pos + 1)) / math.log2(pos + 2) for pos in range(k))
    if idcg == 0:
        return 1.0 if retrieved[:1] == gold[:1] else 0.0
    return dcg / idcg

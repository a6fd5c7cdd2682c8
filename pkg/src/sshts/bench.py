"""Gold-standard oracles, ranking metrics, and the experiment drivers that
reproduce the headline behaviors at desk scale (tens of thousands of series,
tens of queries, fixed seeds) rather than the original tens of millions.

All experiments emit plain CSV; columns holding wall-clock measurements are
the only non-deterministic content.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numba import njit

from .core import Dataset, TimeSeries, generate_random_walk, make_dataset
from .dtw import WarpingParams, _dtw_band_sq, exact_search
from .index import SshIndex, SshParams, build_index, query_index, srp_matrix, srp_signature


@dataclass(frozen=True)
class RankedResult:
    """One ranked answer: ids with their DTW distances, per-phase wall-clock
    seconds, and per-mechanism pruned fractions."""

    ids: list[int]
    distances: list[float]
    timings: dict[str, float]
    pruned_fractions: dict[str, float]


@njit(cache=True, nogil=True)
def _dtw_all(X, q, r):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        out[i] = _dtw_band_sq(X[i], q, r, -1.0)
    return out


def brute_force_topk(dataset: Dataset, q, k: int, params: WarpingParams = WarpingParams()) -> RankedResult:
    """Full DTW against every series, no pruning; ties break by lower id."""
    qv = q.values if isinstance(q, TimeSeries) else np.asarray(q, dtype=np.float64)
    if qv.shape[0] != dataset.length:
        raise ValueError(f"query length {qv.shape[0]} does not match dataset length {dataset.length}")
    k = min(k, dataset.n_series)
    t0 = time.perf_counter()
    d2 = _dtw_all(dataset.values, qv, params.radius(qv.shape[0]))
    order = np.lexsort((np.arange(dataset.n_series), d2))[:k]
    dt = time.perf_counter() - t0
    return RankedResult(
        ids=[int(i) for i in order],
        distances=[float(v) for v in np.sqrt(d2[order])],
        timings={"dtw": dt},
        pruned_fractions={"total": 0.0},
    )


def precision_at_k(retrieved, gold, k: int) -> float:
    """Fraction of the gold top-k present in the retrieved top-k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return len(set(retrieved[:k]) & set(gold[:k])) / k


def ndcg_at_k(retrieved, gold, k: int) -> float:
    """Discounted gain of the retrieved ranking over the ideal gold gain.

    Graded relevance of the item at a position is k minus its gold rank
    (0 for items outside the gold top-k); the discount is log2(position + 1)
    with positions counted from 1, so the first position is never divided
    by zero.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    gold_rank = {item: pos for pos, item in enumerate(gold[:k], start=1)}
    idcg = sum((k - i) / math.log2(i + 1) for i in range(1, k + 1))
    if idcg == 0.0:
        if len(retrieved) > 0 and len(gold) > 0 and retrieved[0] == gold[0]:
            return 1.0
        return 0.0
    dcg = 0.0
    for pos, item in enumerate(retrieved[:k], start=1):
        if item in gold_rank:
            dcg += (k - gold_rank[item]) / math.log2(pos + 1)
    return dcg / idcg


def _stderr(xs) -> float:
    a = np.asarray(xs, dtype=np.float64)
    if a.size < 2:
        return 0.0
    return float(a.std(ddof=1) / np.sqrt(a.size))


def desk_params(t: int, seed: int = 0, band: float = 0.05) -> SshParams:
    """Hash parameters tuned on held-out random-walk data per series length.

    Short series need a dense bit stream (small step) for the shingle sets to
    stay informative; long series can afford the coarser steps that keep
    preprocessing cheap.
    """
    if t <= 192:
        delta = 1
    elif t <= 768:
        delta = 2
    elif t <= 1536:
        delta = 4
    else:
        delta = 5
    return SshParams(W=30, delta=delta, n=15, d=20, seed=seed, band=band)


def desk_dataset(t: int, n_series: int, seed: int, normalize: bool = True) -> Dataset:
    """n_series overlapping windows of a fresh random walk, z-normalized."""
    recording = generate_random_walk(n_series + t - 1, seed)
    return make_dataset(recording, t, normalize=normalize)


def pick_query_ids(n_series: int, n_queries: int, seed: int, salt: int = 0) -> np.ndarray:
    rng = np.random.default_rng([seed, salt, 104729])
    return np.sort(rng.choice(n_series, size=min(n_queries, n_series), replace=False))


def _map_ordered(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def write_csv(path, fieldnames, rows) -> None:
    """Fixed-header CSV with stable float formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".10g")
    return v


def run_pruning_experiment(
    lengths,
    n_series: int = 50_000,
    n_queries: int = 20,
    k: int = 10,
    seed: int = 0,
    band: float = 0.05,
    params_fn=desk_params,
    threads: int = 1,
    out_csv=None,
):
    """Per length: mean fraction of candidates the exact cascade prunes, and
    the hash index's candidate elimination (alone, and with bounds on top)."""
    rows = []
    for t in lengths:
        ds = desk_dataset(t, n_series, seed)
        params = params_fn(t, seed=seed, band=band)
        qids = pick_query_ids(ds.n_series, n_queries, seed, salt=t)
        queries = [ds.series(int(i)) for i in qids]

        ucr = _map_ordered(lambda q: exact_search(ds, q, k, params.warping()).stats.pruned_fraction,
                           queries, threads)
        index = build_index(ds, params, threads=threads)
        ssh = _map_ordered(lambda q: query_index(index, q, k), queries, threads)
        rows.append({
            "t": t,
            "ucr_pruned": float(np.mean(ucr)),
            "ssh_hash_pruned": float(np.mean([r.stats.hash_pruned_fraction for r in ssh])),
            "ssh_total_pruned": float(np.mean([r.stats.total_pruned_fraction for r in ssh])),
        })
    if out_csv:
        write_csv(out_csv, ["t", "ucr_pruned", "ssh_hash_pruned", "ssh_total_pruned"], rows)
    return rows


def srp_topk(sigs: np.ndarray, qsig: np.ndarray, k: int) -> list[int]:
    """Rank series by Hamming agreement with the query signature; ties by id."""
    agree = sigs.astype(np.int32) @ qsig.astype(np.int32)
    order = np.lexsort((np.arange(sigs.shape[0]), -agree))[:k]
    return [int(i) for i in order]


def run_accuracy_experiment(
    ks=(5, 10, 20, 50),
    methods=("ssh", "srp"),
    lengths=(128, 512),
    n_series: int = 50_000,
    n_queries: int = 20,
    seed: int = 0,
    band: float = 0.05,
    params_fn=desk_params,
    threads: int = 1,
    out_csv=None,
):
    """Precision and NDCG of each method against the brute-force DTW gold
    standard, mean and standard error over the query set."""
    kmax = max(ks)
    rows = []
    for t in lengths:
        ds = desk_dataset(t, n_series, seed)
        params = params_fn(t, seed=seed, band=band)
        qids = pick_query_ids(ds.n_series, n_queries, seed, salt=t)
        queries = [ds.series(int(i)) for i in qids]
        gold = _map_ordered(lambda q: brute_force_topk(ds, q, kmax, params.warping()).ids,
                            queries, threads)

        retrieved = {}
        if "ssh" in methods:
            index = build_index(ds, params, threads=threads)
            retrieved["ssh"] = _map_ordered(lambda q: query_index(index, q, kmax).ids, queries, threads)
        if "srp" in methods:
            sigs = srp_matrix(ds.values, bits=params.d, seed=params.seed)
            retrieved["srp"] = [
                srp_topk(sigs, srp_signature(q, bits=params.d, seed=params.seed), kmax)
                for q in queries
            ]

        for method in methods:
            for k in ks:
                prec = [precision_at_k(r, g, k) for r, g in zip(retrieved[method], gold)]
                ndcg = [ndcg_at_k(r, g, k) for r, g in zip(retrieved[method], gold)]
                rows.append({
                    "t": t,
                    "method": method,
                    "k": k,
                    "precision_mean": float(np.mean(prec)),
                    "precision_stderr": _stderr(prec),
                    "ndcg_mean": float(np.mean(ndcg)),
                    "ndcg_stderr": _stderr(ndcg),
                })
    if out_csv:
        write_csv(
            out_csv,
            ["t", "method", "k", "precision_mean", "precision_stderr", "ndcg_mean", "ndcg_stderr"],
            rows,
        )
    return rows


def run_timing_experiment(
    lengths=(128, 1024),
    n_series: int = 50_000,
    n_queries: int = 10,
    k: int = 10,
    seed: int = 0,
    band: float = 0.05,
    params_fn=desk_params,
    out_csv=None,
):
    """Mean per-query wall-clock of the hash index versus the exact cascade.

    Index build time is excluded (amortized); the hash query time includes
    computing the query's own signature. Runs single-threaded so per-query
    times are comparable.
    """
    rows = []
    for t in lengths:
        ds = desk_dataset(t, n_series, seed)
        params = params_fn(t, seed=seed, band=band)
        index = build_index(ds, params)
        qids = pick_query_ids(ds.n_series, n_queries, seed, salt=t)
        queries = [ds.series(int(i)) for i in qids]

        ssh_times = []
        exact_times = []
        for q in queries:
            t0 = time.perf_counter()
            query_index(index, q, k)
            ssh_times.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            exact_search(ds, q, k, params.warping())
            exact_times.append(time.perf_counter() - t0)
        ssh_mean = float(np.mean(ssh_times))
        exact_mean = float(np.mean(exact_times))
        rows.append({
            "t": t,
            "ssh_seconds": ssh_mean,
            "exact_seconds": exact_mean,
            "speedup": exact_mean / ssh_mean if ssh_mean > 0 else float("inf"),
        })
    if out_csv:
        write_csv(out_csv, ["t", "ssh_seconds", "exact_seconds", "speedup"], rows)
    return rows


def hash_agreement_topk(index: SshIndex, q, k: int) -> list[int]:
    """Rank indexed series by how many of the d hash slots agree with the
    query's signature; ties by id. This is the raw quality of the hashes,
    with no DTW reranking to hide behind."""
    from .index import query_signature

    qsig = query_signature(index, q)
    matches = (index.signatures == qsig[None, :]).sum(axis=1)
    order = np.lexsort((np.arange(index.signatures.shape[0]), -matches))[:k]
    return [int(i) for i in order]


def parameter_sweep(
    axis: str,
    values,
    t: int = 512,
    n_series: int = 20_000,
    n_queries: int = 10,
    k: int = 50,
    seed: int = 0,
    band: float = 0.05,
    params_fn=desk_params,
    timing_repeats: int = 2,
    out_csv=None,
):
    """Sweep one hash parameter; report top-k precision of hash-agreement
    ranking against the DTW gold standard, and preprocessing cost per series
    (best of timing_repeats builds)."""
    if axis not in ("W", "delta", "n"):
        raise ValueError(f"sweep axis must be one of W, delta, n; got {axis!r}")
    ds = desk_dataset(t, n_series, seed)
    base = params_fn(t, seed=seed, band=band)
    qids = pick_query_ids(ds.n_series, n_queries, seed, salt=t)
    queries = [ds.series(int(i)) for i in qids]
    gold = [brute_force_topk(ds, q, k, base.warping()).ids for q in queries]

    rows = []
    for value in values:
        params = replace(base, **{axis: int(value)})
        params.validate_for_length(t)
        best = float("inf")
        for _ in range(max(1, timing_repeats)):
            t0 = time.perf_counter()
            index = build_index(ds, params)
            best = min(best, time.perf_counter() - t0)
        prec = [precision_at_k(hash_agreement_topk(index, q, k), g, k) for q, g in zip(queries, gold)]
        rows.append({
            "axis": axis,
            "value": int(value),
            "precision_at_k": float(np.mean(prec)),
            "preprocess_seconds_per_series": best / ds.n_series,
        })
    if out_csv:
        write_csv(out_csv, ["axis", "value", "precision_at_k", "preprocess_seconds_per_series"], rows)
    return rows

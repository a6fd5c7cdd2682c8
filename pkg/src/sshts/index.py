"""The hash index: preprocessing, querying, persistence, and the signed
random projection baseline.

Build: every series runs sketch -> shingle -> weighted minhash, and series id
i is inserted into table j under signature value j, for all d tables. Query:
the query is hashed the same way, the d probed buckets are unioned into a
deduplicated candidate set R, and R is reranked exactly by DTW behind the
lower-bound cascade, visiting candidates in ascending lb_keogh order so the
best-so-far tightens early.
"""

from __future__ import annotations

import io
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dtw as _dtw
from .core import ConfigError, Dataset, IndexLoadError, TimeSeries, file_checksum, save_dataset
from .shingle import MAX_SHINGLE_BITS, WeightedShingleSet, tokenize_bits
from .sketch import RandomFilter, make_filter, num_sketch_bits, sketch_matrix, sketch_values
from .wmh import _cws_keys

INDEX_MAGIC = b"SSHI"
INDEX_VERSION = 1


@dataclass(frozen=True)
class SshParams:
    """Pipeline parameters: filter length W, step delta, shingle length n,
    table count d, master seed, and the DTW warping band for reranking."""

    W: int = 30
    delta: int = 5
    n: int = 15
    d: int = 20
    seed: int = 0
    band: float = 0.05

    def __post_init__(self):
        if self.W < 1:
            raise ConfigError(f"filter length W must be >= 1, got {self.W}")
        if self.delta < 1:
            raise ConfigError(f"step size delta must be >= 1, got {self.delta}")
        if not 1 <= self.n <= MAX_SHINGLE_BITS:
            raise ConfigError(f"shingle length n must be in [1, {MAX_SHINGLE_BITS}], got {self.n}")
        if self.d < 1:
            raise ConfigError(f"table count d must be >= 1, got {self.d}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if not 0.0 <= self.band <= 1.0:
            raise ConfigError(f"warping band must be in [0, 1], got {self.band}")

    def validate_for_length(self, t: int) -> None:
        """Check the series length supports the pipeline, naming the violated
        inequality."""
        if t < self.W:
            raise ConfigError(f"series length t={t} violates t >= W (W={self.W})")
        nb = num_sketch_bits(t, self.W, self.delta)
        if nb < self.n:
            raise ConfigError(
                f"sketch length floor((t-W)/delta)+1 = {nb} violates >= n "
                f"(t={t}, W={self.W}, delta={self.delta}, n={self.n})"
            )

    def warping(self) -> _dtw.WarpingParams:
        return _dtw.WarpingParams(band=self.band)


@dataclass(frozen=True)
class QueryStats:
    n_indexed: int
    candidates: int
    cascade: _dtw.SearchStats

    @property
    def hash_pruned_fraction(self) -> float:
        return 1.0 - self.candidates / self.n_indexed

    @property
    def bound_pruned_fraction(self) -> float:
        return self.cascade.pruned / self.n_indexed

    @property
    def total_pruned_fraction(self) -> float:
        return 1.0 - self.cascade.dtw_computed / self.n_indexed


@dataclass(frozen=True)
class QueryResult:
    ids: list[int]
    distances: list[float]
    stats: QueryStats
    timings: dict[str, float]
    status: str = "ok"  # "ok" | "no-candidates" | "fallback"
    warning: str | None = None


@dataclass
class SshIndex:
    params: SshParams
    filter: RandomFilter
    tables: list[dict[int, np.ndarray]]
    dataset: Dataset
    signatures: np.ndarray  # (N, d) uint64
    normalized: bool = True


def _signature_rows(bits_rows: np.ndarray, n: int, d: int, seed: int) -> np.ndarray:
    slots = np.arange(d, dtype=np.uint64)
    out = np.empty((bits_rows.shape[0], d), dtype=np.uint64)
    for i in range(bits_rows.shape[0]):
        stream = tokenize_bits(bits_rows[i], n)
        tokens, counts = np.unique(stream, return_counts=True)
        out[i] = _cws_keys(tokens, counts.astype(np.int64), slots, seed)
    return out


def compute_signatures(values: np.ndarray, params: SshParams, weights: np.ndarray, threads: int = 1) -> np.ndarray:
    """(N, d) signature matrix for a stack of series; order-deterministic at
    any thread count (rows depend only on their series)."""
    bits = sketch_matrix(values, weights, params.delta)
    n_rows = bits.shape[0]
    if threads <= 1 or n_rows < 2 * threads:
        return _signature_rows(bits, params.n, params.d, params.seed)
    from concurrent.futures import ThreadPoolExecutor

    bounds = np.linspace(0, n_rows, threads + 1, dtype=int)
    chunks = [(bounds[i], bounds[i + 1]) for i in range(threads) if bounds[i] < bounds[i + 1]]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(
            ex.map(lambda se: _signature_rows(bits[se[0]:se[1]], params.n, params.d, params.seed), chunks)
        )
    return np.vstack(parts)


def _tables_from_signatures(signatures: np.ndarray) -> list[dict[int, np.ndarray]]:
    n, d = signatures.shape
    tables = []
    for j in range(d):
        col = signatures[:, j]
        order = np.argsort(col, kind="stable")  # ids ascending within buckets
        sorted_keys = col[order]
        boundaries = np.nonzero(np.diff(sorted_keys))[0] + 1
        starts = np.concatenate(([0], boundaries))
        ends = np.concatenate((boundaries, [n]))
        table = {
            int(sorted_keys[s]): order[s:e].astype(np.int64)
            for s, e in zip(starts, ends)
        }
        tables.append(table)
    return tables


def build_index(dataset: Dataset, params: SshParams, normalized: bool = True, threads: int = 1) -> SshIndex:
    """Hash every series into d tables; deterministic in (dataset, params)."""
    params.validate_for_length(dataset.length)
    filt = make_filter(params.W, params.seed)
    signatures = compute_signatures(dataset.values, params, filt.weights, threads=threads)
    tables = _tables_from_signatures(signatures)
    return SshIndex(
        params=params,
        filter=filt,
        tables=tables,
        dataset=dataset,
        signatures=signatures,
        normalized=normalized,
    )


def query_signature(index: SshIndex, q: TimeSeries | np.ndarray) -> np.ndarray:
    values = q.values if isinstance(q, TimeSeries) else np.asarray(q, dtype=np.float64)
    bits = sketch_values(values, index.filter.weights, index.params.delta)
    stream = tokenize_bits(bits, index.params.n)
    tokens, counts = np.unique(stream, return_counts=True)
    slots = np.arange(index.params.d, dtype=np.uint64)
    return _cws_keys(tokens, counts.astype(np.int64), slots, index.params.seed)


def probe_candidates(index: SshIndex, qsig: np.ndarray) -> np.ndarray:
    """Deduplicated union of the d probed buckets, ascending by id."""
    hits = [index.tables[j].get(int(qsig[j])) for j in range(index.params.d)]
    hits = [h for h in hits if h is not None]
    if not hits:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(hits))


def _keogh_lb_batch(X: np.ndarray, cand: np.ndarray, upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
    out = np.empty(cand.shape[0])
    chunk = max(1, (1 << 22) // max(1, X.shape[1]))
    for s in range(0, cand.shape[0], chunk):
        C = X[cand[s:s + chunk]]
        above = np.clip(C - upper, 0.0, None)
        below = np.clip(lower - C, 0.0, None)
        out[s:s + chunk] = np.einsum("ij,ij->i", above, above) + np.einsum("ij,ij->i", below, below)
    return out


def query_index(index: SshIndex, q: TimeSeries, k: int, fallback_on_empty: bool = False) -> QueryResult:
    """Probe the d tables, then rerank the candidate union exactly by DTW.

    Candidates are visited in ascending (lb_keogh, id) order. An empty
    candidate set yields a "no-candidates" result unless fallback_on_empty
    turns it into a full exact search.
    """
    qv = q.values if isinstance(q, TimeSeries) else np.asarray(q, dtype=np.float64)
    if qv.shape[0] != index.dataset.length:
        raise ValueError(
            f"query length {qv.shape[0]} does not match indexed length {index.dataset.length}"
        )
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = index.dataset.n_series
    warning = None
    if k > n:
        warning = f"k={k} exceeds index size {n}; returning at most {n} series"
        k = n

    t0 = time.perf_counter()
    qsig = query_signature(index, qv)
    t1 = time.perf_counter()
    cand = probe_candidates(index, qsig)
    t2 = time.perf_counter()

    empty_cascade = _dtw.SearchStats(
        candidates=0, kim_pruned=0, keogh_pruned=0, keogh2_pruned=0, dtw_computed=0, dtw_abandoned=0
    )
    if cand.shape[0] == 0:
        t3 = time.perf_counter()
        timings = {"hash": t1 - t0, "probe": t2 - t1, "rerank": t3 - t2}
        if not fallback_on_empty:
            stats = QueryStats(n_indexed=n, candidates=0, cascade=empty_cascade)
            return QueryResult([], [], stats, timings, status="no-candidates", warning=warning)
        res = _dtw.exact_search(index.dataset, q, k, index.params.warping())
        t3 = time.perf_counter()
        timings["rerank"] = t3 - t2
        stats = QueryStats(n_indexed=n, candidates=n, cascade=res.stats)
        return QueryResult(res.ids, res.distances, stats, timings, status="fallback", warning=warning)

    warped = index.params.warping()
    r = warped.radius(qv.shape[0])
    env = _dtw.build_envelope(qv, warped)
    lbs = _keogh_lb_batch(index.dataset.values, cand, env.upper, env.lower)
    order = np.lexsort((cand, lbs))
    ordered = cand[order]
    ids, d2, counters = _dtw._cascade_search(
        index.dataset.values, ordered, qv, env.upper, env.lower, r, min(k, cand.shape[0])
    )
    t3 = time.perf_counter()

    cascade = _dtw.SearchStats(
        candidates=int(cand.shape[0]),
        kim_pruned=int(counters[0]),
        keogh_pruned=int(counters[1]),
        keogh2_pruned=int(counters[2]),
        dtw_computed=int(counters[3]),
        dtw_abandoned=int(counters[4]),
    )
    stats = QueryStats(n_indexed=n, candidates=int(cand.shape[0]), cascade=cascade)
    timings = {"hash": t1 - t0, "probe": t2 - t1, "rerank": t3 - t2}
    return QueryResult(
        ids=[int(i) for i in ids],
        distances=[float(v) for v in np.sqrt(d2)],
        stats=stats,
        timings=timings,
        status="ok",
        warning=warning,
    )


# ---------------------------------------------------------------------------
# Persistence.
#
# Index file (little-endian): magic "SSHI", version u32, params
# (W u32, delta u32, n u32, d u32, seed u64, band f64), normalized u8,
# filter seed u64 + W float64 weights, dataset file name (u32 length + utf8)
# and sha256 (32 bytes), then per table: bucket count u64, and per bucket
# key u64, id count u64, ids u64. The dataset itself lives in a sidecar
# f64le file next to the index so a load rebuilds exactly what was indexed.
# ---------------------------------------------------------------------------


def save_index(index: SshIndex, path) -> None:
    path = Path(path)
    dataset_name = path.name + ".sshd"
    save_dataset(index.dataset, path.parent / dataset_name, fmt="f64le")
    checksum = file_checksum(path.parent / dataset_name)

    buf = io.BytesIO()
    p = index.params
    buf.write(INDEX_MAGIC)
    buf.write(struct.pack("<IIIIIQd", INDEX_VERSION, p.W, p.delta, p.n, p.d, p.seed, p.band))
    buf.write(struct.pack("<B", 1 if index.normalized else 0))
    buf.write(struct.pack("<Q", index.filter.seed))
    buf.write(np.ascontiguousarray(index.filter.weights, dtype="<f8").tobytes())
    name_bytes = dataset_name.encode("utf-8")
    buf.write(struct.pack("<I", len(name_bytes)))
    buf.write(name_bytes)
    buf.write(checksum)
    for table in index.tables:
        buf.write(struct.pack("<Q", len(table)))
        for key in sorted(table):
            ids = table[key]
            buf.write(struct.pack("<QQ", key, ids.shape[0]))
            buf.write(np.ascontiguousarray(ids, dtype="<u8").tobytes())
    path.write_bytes(buf.getvalue())


class _Cursor:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.off = 0
        self.path = path

    def take(self, nbytes: int) -> bytes:
        if self.off + nbytes > len(self.data):
            raise IndexLoadError(
                f"{self.path}: truncated index file (needed {nbytes} bytes at offset {self.off})"
            )
        out = self.data[self.off:self.off + nbytes]
        self.off += nbytes
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_index(path) -> SshIndex:
    """Load an index and its sidecar dataset; either the whole structure
    parses and verifies, or an IndexLoadError is raised (no partial index)."""
    from .core import load_dataset

    path = Path(path)
    if not path.exists():
        raise IndexLoadError(f"{path}: no such file")
    cur = _Cursor(path.read_bytes(), path)
    magic = cur.take(4)
    if magic != INDEX_MAGIC:
        raise IndexLoadError(f"{path}: bad magic {magic!r}, expected {INDEX_MAGIC!r}")
    version, W, delta, n, d, seed, band = cur.unpack("<IIIIIQd")
    if version != INDEX_VERSION:
        raise IndexLoadError(f"{path}: unsupported index version {version}")
    (normalized,) = cur.unpack("<B")
    (filter_seed,) = cur.unpack("<Q")
    weights = np.frombuffer(cur.take(W * 8), dtype="<f8").copy()
    (name_len,) = cur.unpack("<I")
    dataset_name = cur.take(name_len).decode("utf-8")
    checksum = cur.take(32)

    params = SshParams(W=W, delta=delta, n=n, d=d, seed=seed, band=band)
    tables: list[dict[int, np.ndarray]] = []
    for _ in range(d):
        (n_buckets,) = cur.unpack("<Q")
        table: dict[int, np.ndarray] = {}
        for _ in range(n_buckets):
            key, count = cur.unpack("<QQ")
            ids = np.frombuffer(cur.take(count * 8), dtype="<u8").astype(np.int64)
            table[key] = ids
        tables.append(table)
    if cur.off != len(cur.data):
        raise IndexLoadError(f"{path}: {len(cur.data) - cur.off} trailing bytes after tables")

    dataset_path = path.parent / dataset_name
    if not dataset_path.exists():
        raise IndexLoadError(f"{path}: referenced dataset file {dataset_path} is missing")
    if file_checksum(dataset_path) != checksum:
        raise IndexLoadError(f"{path}: dataset file {dataset_path} checksum mismatch")
    dataset = load_dataset(dataset_path, fmt="f64le")

    n_series = dataset.n_series
    signatures = np.empty((n_series, d), dtype=np.uint64)
    for j, table in enumerate(tables):
        seen = 0
        for key, ids in table.items():
            if ids.shape[0] and (ids.min() < 0 or ids.max() >= n_series):
                raise IndexLoadError(f"{path}: table {j} references ids outside [0, {n_series})")
            signatures[ids, j] = np.uint64(key)
            seen += ids.shape[0]
        if seen != n_series:
            raise IndexLoadError(
                f"{path}: table {j} holds {seen} ids, expected every id exactly once ({n_series})"
            )

    return SshIndex(
        params=params,
        filter=RandomFilter(weights=weights, seed=filter_seed),
        tables=tables,
        dataset=dataset,
        signatures=signatures,
        normalized=bool(normalized),
    )


# ---------------------------------------------------------------------------
# Signed random projection baseline: the series is treated as one long
# vector and each bit is the sign of a full-length random projection.
# ---------------------------------------------------------------------------


def srp_vectors(m: int, bits: int, seed: int) -> np.ndarray:
    """(bits, m) projection matrix; row j depends only on (seed, j)."""
    out = np.empty((bits, m))
    for j in range(bits):
        out[j] = np.random.default_rng([seed, j]).standard_normal(m)
    return out


def srp_signature(series: TimeSeries | np.ndarray, bits: int, seed: int) -> np.ndarray:
    """Sign bits (+1/-1, int8) of `bits` independent full-length projections."""
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    proj = srp_vectors(values.shape[0], bits, seed) @ values
    return np.where(proj >= 0.0, 1, -1).astype(np.int8)


def srp_matrix(values: np.ndarray, bits: int, seed: int) -> np.ndarray:
    """SRP signatures for a whole (N, m) dataset, one row per series."""
    proj = values @ srp_vectors(values.shape[1], bits, seed).T
    return np.where(proj >= 0.0, 1, -1).astype(np.int8)

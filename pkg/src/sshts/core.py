"""Core time-series types, normalization, dataset construction, and file IO.

A dataset is a stack of equal-length series stored as one (N, t) float64
matrix; series ids are the row indices, contiguous from 0.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class SshError(Exception):
    """Base class for errors raised by this package."""


class DataFormatError(SshError):
    """A data file failed to parse under its declared format."""


class IndexLoadError(SshError):
    """An index file is truncated, corrupt, or version-incompatible."""


class ConfigError(SshError):
    """A parameter combination violates a precondition; the message names it."""


DATA_MAGIC = b"SSHD"
DATA_VERSION = 1
_DATA_HEADER_BYTES = 4 + 4 + 8 + 8


def _validated_values(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{what} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """A uniformly sampled sequence of real values.

    Timestamps are implicit: the sampling interval is treated as constant
    and is never used algorithmically.
    """

    values: np.ndarray
    id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _validated_values(self.values, "series values"))

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Dataset:
    """Equal-length series stacked row-wise; row index is the series id."""

    values: np.ndarray  # (N, t) float64
    source: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"dataset values must be 2-D, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("dataset must contain at least one non-empty series")
        if not np.all(np.isfinite(arr)):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def series(self, i: int) -> TimeSeries:
        if not 0 <= i < self.n_series:
            raise IndexError(f"series id {i} out of range [0, {self.n_series})")
        return TimeSeries(values=self.values[i], id=i)

    def __len__(self) -> int:
        return self.n_series

    def __getitem__(self, i: int) -> TimeSeries:
        return self.series(i)

    def __iter__(self):
        for i in range(self.n_series):
            yield self.series(i)


_ZERO_VAR_EPS = 1e-12


def z_normalize_values(values: np.ndarray) -> np.ndarray:
    """Shift to mean 0 and scale to population standard deviation 1.

    Inputs with standard deviation below 1e-12 map to all zeros: long
    recordings contain flat segments and search must not abort on them.
    """
    mu = values.mean()
    sigma = values.std()
    if sigma < _ZERO_VAR_EPS:
        return np.zeros_like(values)
    return (values - mu) / sigma


def z_normalize(series: TimeSeries) -> TimeSeries:
    return TimeSeries(values=z_normalize_values(series.values), id=series.id)


def z_normalize_dataset(dataset: Dataset) -> Dataset:
    """Z-normalize every series independently (row-wise)."""
    mu = dataset.values.mean(axis=1, keepdims=True)
    sigma = dataset.values.std(axis=1, keepdims=True)
    flat = sigma[:, 0] < _ZERO_VAR_EPS
    sigma[flat] = 1.0
    out = (dataset.values - mu) / sigma
    out[flat] = 0.0
    return Dataset(values=out, source=dataset.source)


def extract_subsequences(long_series: TimeSeries, t: int) -> Dataset:
    """All m-t+1 contiguous windows of length t, in order, ids 0..m-t."""
    m = len(long_series)
    if t < 1:
        raise ValueError(f"subsequence length must be >= 1, got {t}")
    if t > m:
        raise ValueError(f"subsequence length {t} exceeds series length {m}")
    windows = np.lib.stride_tricks.sliding_window_view(long_series.values, t)
    return Dataset(values=windows.copy(), source=f"windows(t={t}) of series {long_series.id}")


def generate_random_walk(length: int, seed: int) -> TimeSeries:
    """Cumulative sum of standard normal increments from a seeded generator.

    Pure function of (length, seed): identical arguments give identical output.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    steps = np.random.default_rng(seed).standard_normal(length)
    return TimeSeries(values=np.cumsum(steps), id=0)


def make_dataset(recording: TimeSeries, t: int, normalize: bool = True) -> Dataset:
    """Window a long recording into a dataset, z-normalizing each window.

    This is the one place normalization happens: both the hash pipeline and
    DTW then see the same series. Pass normalize=False to index raw windows.
    """
    ds = extract_subsequences(recording, t)
    return z_normalize_dataset(ds) if normalize else ds


# ---------------------------------------------------------------------------
# File formats.
#
# f64le: header = magic "SSHD", version u32, series-count u64, series-length
# u64, all little-endian; payload = row-major little-endian float64.
# CSV: one series per line, comma-separated decimal floats, no header.
# ---------------------------------------------------------------------------


def save_dataset(dataset: Dataset, path, fmt: str = "f64le") -> None:
    path = Path(path)
    if fmt == "f64le":
        header = DATA_MAGIC
        header += np.uint32(DATA_VERSION).tobytes()
        header += np.uint64(dataset.n_series).tobytes()
        header += np.uint64(dataset.length).tobytes()
        payload = np.ascontiguousarray(dataset.values, dtype="<f8").tobytes()
        path.write_bytes(header + payload)
    elif fmt == "csv":
        lines = [",".join(repr(v) for v in row) for row in dataset.values]
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown dataset format {fmt!r} (expected 'f64le' or 'csv')")


def _load_f64le(path: Path) -> Dataset:
    raw = path.read_bytes()
    if len(raw) < _DATA_HEADER_BYTES:
        raise DataFormatError(f"{path}: file too short for f64le header ({len(raw)} bytes)")
    if raw[:4] != DATA_MAGIC:
        raise DataFormatError(f"{path}: bad magic {raw[:4]!r}, expected {DATA_MAGIC!r}")
    version = int(np.frombuffer(raw, dtype="<u4", count=1, offset=4)[0])
    if version != DATA_VERSION:
        raise DataFormatError(f"{path}: unsupported f64le version {version}")
    n = int(np.frombuffer(raw, dtype="<u8", count=1, offset=8)[0])
    t = int(np.frombuffer(raw, dtype="<u8", count=1, offset=16)[0])
    expected = _DATA_HEADER_BYTES + n * t * 8
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: payload size mismatch at offset {len(raw)} (expected {expected} bytes "
            f"for {n} series of length {t})"
        )
    values = np.frombuffer(raw, dtype="<f8", offset=_DATA_HEADER_BYTES).reshape(n, t)
    return Dataset(values=values.copy(), source=str(path))


def _load_csv(path: Path) -> Dataset:
    rows = []
    width = None
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataFormatError(
                    f"{path}: line {lineno}: ragged row of {len(row)} values, expected {width}"
                )
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: no series found")
    return Dataset(values=np.asarray(rows, dtype=np.float64), source=str(path))


def load_dataset(path, fmt: str = "f64le") -> Dataset:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"{path}: no such file")
    if fmt == "f64le":
        return _load_f64le(path)
    if fmt == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown dataset format {fmt!r} (expected 'f64le' or 'csv')")


def load_recording(path, fmt: str = "f64le") -> TimeSeries:
    """Load a file holding exactly one long series."""
    ds = load_dataset(path, fmt)
    if ds.n_series != 1:
        raise DataFormatError(f"{path}: expected a single recording, found {ds.n_series} series")
    return ds.series(0)


def file_checksum(path) -> bytes:
    """SHA-256 of a file's bytes, streamed."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.digest()

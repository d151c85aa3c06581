"""Multivariate batch time-series container and per-feature min-max scaling."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Ordered multivariate samples with contiguous batch membership.

    ``samples`` is an (L, d) float64 array, one row per time step, in time
    order within each batch. ``batch_ids`` must form contiguous runs; the
    array is frozen after construction so instances can be shared freely.
    """

    samples: np.ndarray
    feature_names: tuple[str, ...]
    batch_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise ValueError("samples must be a 2-D array of shape (L, d)")
        L, d = samples.shape
        if L < 1 or d < 1:
            raise ValueError(f"dataset needs L >= 1 and d >= 1, got L={L}, d={d}")
        if not np.all(np.isfinite(samples)):
            bad = np.argwhere(~np.isfinite(samples))[0]
            raise ValueError(
                f"non-finite value at sample {bad[0]}, feature "
                f"{self.feature_names[bad[1]] if len(self.feature_names) > bad[1] else bad[1]}"
            )
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != d:
            raise ValueError(f"expected {d} feature names, got {len(names)}")
        batches = tuple(str(b) for b in self.batch_ids)
        if len(batches) != L:
            raise ValueError(f"expected {L} batch ids, got {len(batches)}")
        _check_contiguous(batches)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "batch_ids", batches)

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def batch_runs(self) -> list[tuple[str, int, int]]:
        """Contiguous (batch_id, start, stop) runs in sample order."""
        runs: list[tuple[str, int, int]] = []
        start = 0
        for i in range(1, self.length + 1):
            if i == self.length or self.batch_ids[i] != self.batch_ids[start]:
                runs.append((self.batch_ids[start], start, i))
                start = i
        return runs

    def batch(self, batch_id: str) -> "Dataset":
        """Single-batch view as a new Dataset."""
        for bid, start, stop in self.batch_runs():
            if bid == batch_id:
                return Dataset(
                    self.samples[start:stop],
                    self.feature_names,
                    self.batch_ids[start:stop],
                )
        raise KeyError(f"unknown batch id {batch_id!r}")


def _check_contiguous(batch_ids: tuple[str, ...]) -> None:
    seen: set[str] = set()
    prev = None
    for b in batch_ids:
        if b != prev:
            if b in seen:
                raise ValueError(f"batch id {b!r} occurs in non-contiguous runs")
            seen.add(b)
            prev = b


@dataclass(frozen=True)
class NormalizationParams:
    """Per-feature scaling fitted on a training dataset.

    Only min-max to [0, 1] is supported; minima/maxima are captured per
    feature and applying then inverting reproduces raw values.
    """

    method: str
    mins: np.ndarray
    maxs: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        mins = np.array(self.mins, dtype=np.float64)
        maxs = np.array(self.maxs, dtype=np.float64)
        if self.method != "minmax":
            raise ValueError(f"unsupported normalization method {self.method!r}")
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise ValueError("mins and maxs must be 1-D arrays of equal length")
        if np.any(maxs < mins):
            raise ValueError("per-feature max must be >= min")
        mins.setflags(write=False)
        maxs.setflags(write=False)
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def dim(self) -> int:
        return self.mins.shape[0]


def fit_normalization(data: Dataset, method: str = "minmax") -> NormalizationParams:
    """Fit per-feature min-max parameters on a training dataset.

    Constant features cannot be scaled to [0, 1]; they are reported by name
    so the caller can drop them.
    """
    if method != "minmax":
        raise ValueError(f"unsupported normalization method {method!r}")
    if data.length < 2:
        raise ValueError("need at least 2 samples to fit normalization")
    mins = data.samples.min(axis=0)
    maxs = data.samples.max(axis=0)
    constant = [name for name, lo, hi in zip(data.feature_names, mins, maxs) if lo == hi]
    if constant:
        raise ValueError(f"constant feature(s) cannot be normalized: {', '.join(constant)}")
    return NormalizationParams("minmax", mins, maxs, data.feature_names)


def apply_normalization(data: Dataset, params: NormalizationParams) -> Dataset:
    """Map each feature through (x - min) / (max - min); no clipping.

    Values outside the training range land outside [0, 1] on purpose:
    out-of-range behaviour is anomaly evidence, not an error.
    """
    if data.dim != params.dim:
        raise ValueError(f"dimension mismatch: data has d={data.dim}, params have d={params.dim}")
    scaled = (data.samples - params.mins) / (params.maxs - params.mins)
    return Dataset(scaled, data.feature_names, data.batch_ids)


def invert_normalization(data: Dataset, params: NormalizationParams) -> Dataset:
    """Inverse of :func:`apply_normalization`."""
    if data.dim != params.dim:
        raise ValueError(f"dimension mismatch: data has d={data.dim}, params have d={params.dim}")
    raw = data.samples * (params.maxs - params.mins) + params.mins
    return Dataset(raw, data.feature_names, data.batch_ids)


def load_csv(path: str | Path, batch_column: str) -> Dataset:
    """Load a dataset from a headered CSV file.

    One column carries the batch id; every other column must be a finite
    number. Row order is time order within a batch.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"empty dataset file: {path}") from None
        if batch_column not in header:
            raise ValueError(f"batch column {batch_column!r} not in header {header}")
        batch_idx = header.index(batch_column)
        feature_names = tuple(n for i, n in enumerate(header) if i != batch_idx)
        rows: list[list[float]] = []
        batch_ids: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}"
                )
            values = []
            for i, cell in enumerate(row):
                if i == batch_idx:
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: row {lineno}, column {header[i]!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
                if not np.isfinite(value):
                    raise ValueError(
                        f"{path}: row {lineno}, column {header[i]!r}: non-finite value {cell!r}"
                    )
                values.append(value)
            rows.append(values)
            batch_ids.append(row[batch_idx])
    if not rows:
        raise ValueError(f"dataset file has a header but no data rows: {path}")
    return Dataset(np.asarray(rows, dtype=np.float64), feature_names, tuple(batch_ids))


def write_csv(data: Dataset, path: str | Path, batch_column: str = "batch") -> None:
    """Write a dataset in the CSV layout accepted by :func:`load_csv`.

    Floats are written with repr so a round trip is value-exact and the
    bytes are deterministic.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([batch_column, *data.feature_names])
        for bid, row in zip(data.batch_ids, data.samples):
            writer.writerow([bid, *[repr(float(v)) for v in row]])

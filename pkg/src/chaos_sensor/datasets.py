"""Labeled window datasets built from Hindmarsh-Rose interval series.

A long interval series is cut into windows of length ``nl`` starting at
offsets 0, s, 2s, ...; each window is labeled with its own fuzzy entropy.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .fuzzy import FuzzyEnParams, fuzzy_entropy
from .hr import HRParameters, IntegrationError, spike_intervals

__all__ = [
    "Window",
    "WindowingConfig",
    "DatasetStats",
    "LabeledDataset",
    "DatasetFormatError",
    "window_series",
    "window_offsets",
    "label_windows",
    "build_base",
    "compute_stats",
    "normalize",
    "merge",
    "save_dataset",
    "load_dataset",
]

logger = logging.getLogger(__name__)

#: length of the long interval series simulated per r
LONG_SERIES_LENGTH = 500


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class WindowingConfig:
    """Window length ``nl``, shift ``s`` and optional fixed window ``count``."""

    nl: int = 50
    s: int = 4
    count: int | None = 100

    def __post_init__(self):
        if self.nl < 2:
            raise ValueError(f"nl must be >= 2, got {self.nl}")
        if self.s < 1:
            raise ValueError(f"s must be >= 1, got {self.s}")
        if self.count is not None and self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")

    def required_length(self):
        if self.count is None:
            return self.nl
        return self.nl + (self.count - 1) * self.s


@dataclass
class Window:
    values: np.ndarray
    source_r: float | None = None
    source_i_ex: float | None = None
    source_tag: str = ""
    start_index: int = 0


@dataclass(frozen=True)
class DatasetStats:
    mean: float
    mean50_min: float
    mean50_max: float
    min_x: float
    max_x: float


@dataclass
class LabeledDataset:
    """Windows stored row-wise in ``values`` (n, nl) with per-row metadata.

    ``r`` and ``i_ex`` are NaN for experimental windows.
    """

    values: np.ndarray
    targets: np.ndarray
    r: np.ndarray = None
    i_ex: np.ndarray = None
    tags: np.ndarray = None
    starts: np.ndarray = None
    _stats: DatasetStats | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D (windows, nl) array")
        n = len(self.values)
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        if len(self.targets) != n:
            raise ValueError(f"{n} windows but {len(self.targets)} targets")
        self.r = np.full(n, np.nan) if self.r is None else np.asarray(self.r, dtype=float)
        self.i_ex = np.full(n, np.nan) if self.i_ex is None else np.asarray(self.i_ex, dtype=float)
        self.tags = (np.full(n, "", dtype=object) if self.tags is None
                     else np.asarray(self.tags, dtype=object))
        self.starts = (np.zeros(n, dtype=np.int64) if self.starts is None
                       else np.asarray(self.starts, dtype=np.int64))
        for name in ("r", "i_ex", "tags", "starts"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has wrong length")

    @classmethod
    def empty(cls, nl=50):
        return cls(np.empty((0, nl)), np.empty(0))

    @classmethod
    def from_windows(cls, windows, targets):
        windows = list(windows)
        if not windows:
            raise ValueError("no windows; use LabeledDataset.empty(nl)")
        nan = float("nan")
        return cls(
            np.vstack([w.values for w in windows]),
            targets,
            r=[nan if w.source_r is None else w.source_r for w in windows],
            i_ex=[nan if w.source_i_ex is None else w.source_i_ex for w in windows],
            tags=[w.source_tag for w in windows],
            starts=[w.start_index for w in windows],
        )

    def __len__(self):
        return len(self.values)

    @property
    def nl(self):
        return self.values.shape[1]

    def __getitem__(self, i) -> Window:
        r, i_ex = self.r[i], self.i_ex[i]
        return Window(
            self.values[i],
            None if np.isnan(r) else float(r),
            None if np.isnan(i_ex) else float(i_ex),
            str(self.tags[i]),
            int(self.starts[i]),
        )

    def __iter__(self) -> Iterator[Window]:
        return (self[i] for i in range(len(self)))

    @property
    def windows(self):
        return list(self)

    @property
    def stats(self) -> DatasetStats:
        if self._stats is None:
            self._stats = compute_stats(self)
        return self._stats

    def subset(self, index):
        if not isinstance(index, slice):
            index = np.asarray(index)
        return LabeledDataset(self.values[index], self.targets[index], self.r[index],
                              self.i_ex[index], self.tags[index], self.starts[index])

    def block_ids(self):
        """Integer id per row that changes whenever (tag, r, i_ex) changes."""
        if len(self) == 0:
            return np.empty(0, dtype=np.int64)
        key = list(zip(self.tags, np.nan_to_num(self.r, nan=-1.0), np.nan_to_num(self.i_ex, nan=-1.0)))
        change = [False] + [a != b for a, b in zip(key[:-1], key[1:])]
        return np.cumsum(change)


def window_offsets(length, cfg: WindowingConfig):
    if length < cfg.required_length():
        if cfg.count is None:
            raise ValueError(f"series of length {length} shorter than nl={cfg.nl}")
        raise ValueError(
            f"series of length {length} too short for {cfg.count} windows "
            f"(nl={cfg.nl}, s={cfg.s}; need {cfg.required_length()})")
    n = cfg.count if cfg.count is not None else (length - cfg.nl) // cfg.s + 1
    return np.arange(n) * cfg.s


def window_series(series, cfg: WindowingConfig, **source) -> list:
    """Cut ``series`` into windows; ``source`` fills the Window metadata fields."""
    x = np.asarray(series, dtype=float)
    return [Window(x[o:o + cfg.nl].copy(), start_index=int(o), **source)
            for o in window_offsets(x.size, cfg)]


def _window_matrix(series, cfg):
    offsets = window_offsets(len(series), cfg)
    return offsets, np.asarray(series, dtype=float)[offsets[:, None] + np.arange(cfg.nl)]


def label_windows(values, fe: FuzzyEnParams):
    """Fuzzy entropy of each row of ``values``; logs how many rows clamped."""
    targets = np.empty(len(values))
    clamped = degenerate = 0
    for i, w in enumerate(values):
        targets[i], info = fuzzy_entropy(w, fe, full_output=True)
        clamped += info.clamped
        degenerate += info.degenerate
    if clamped or degenerate:
        logger.info("fuzzy entropy: %d clamped, %d degenerate of %d windows",
                    clamped, degenerate, len(values))
    return targets


def build_base(i_ex=3.25, r_min=5e-3, r_max=1.5e-2, n_r=100, windowing=None, hr=None, fe=None,
               series_length=LONG_SERIES_LENGTH) -> LabeledDataset:
    """Simulate ``n_r`` evenly spaced r values and window each interval series.

    Rows are ordered by r, then by window offset.  Defaults build the I_ex = 3.25
    base of 100 x 100 windows of length 50.
    """
    windowing = WindowingConfig() if windowing is None else windowing
    hr = HRParameters() if hr is None else hr
    fe = FuzzyEnParams() if fe is None else fe
    if n_r < 1:
        raise ValueError("n_r must be >= 1")
    if n_r > 1 and not r_min < r_max:
        raise ValueError(f"need r_min < r_max, got {r_min}, {r_max}")
    if series_length < windowing.required_length():
        raise ValueError(f"series_length {series_length} < {windowing.required_length()} needed")

    grid = np.linspace(r_min, r_max, n_r) if n_r > 1 else np.array([float(r_min)])
    blocks, starts, rs = [], [], []
    for r in grid:
        params = replace(hr, r=float(r), i_ex=float(i_ex), target_intervals=series_length)
        try:
            series = spike_intervals(params)
        except IntegrationError as exc:
            raise type(exc)(f"dataset generation failed at r={r}: {exc}", r=float(r)) from exc
        offsets, mat = _window_matrix(series, windowing)
        blocks.append(mat)
        starts.append(offsets)
        rs.append(np.full(len(offsets), r))
    values = np.vstack(blocks)
    r_col = np.concatenate(rs)
    return LabeledDataset(
        values,
        label_windows(values, fe),
        r=r_col,
        i_ex=np.full(len(values), float(i_ex)),
        tags=np.full(len(values), "hr", dtype=object),
        starts=np.concatenate(starts),
    )


def compute_stats(ds: LabeledDataset) -> DatasetStats:
    if len(ds) == 0:
        raise ValueError("statistics of an empty dataset")
    row_means = ds.values.mean(axis=1)
    return DatasetStats(
        mean=float(ds.values.mean()),
        mean50_min=float(row_means.min()),
        mean50_max=float(row_means.max()),
        min_x=float(ds.values.min()),
        max_x=float(ds.values.max()),
    )


def normalize(ds: LabeledDataset, mean) -> LabeledDataset:
    """Subtract ``mean`` from every window element; targets are untouched."""
    return LabeledDataset(ds.values - mean, ds.targets.copy(), ds.r.copy(), ds.i_ex.copy(),
                          ds.tags.copy(), ds.starts.copy())


def merge(a: LabeledDataset, b: LabeledDataset) -> LabeledDataset:
    if len(a) == 0:
        return b.subset(np.arange(len(b)))
    if len(b) == 0:
        return a.subset(np.arange(len(a)))
    if a.nl != b.nl:
        raise ValueError(f"window length mismatch: {a.nl} vs {b.nl}")
    return LabeledDataset(
        np.vstack([a.values, b.values]),
        np.concatenate([a.targets, b.targets]),
        np.concatenate([a.r, b.r]),
        np.concatenate([a.i_ex, b.i_ex]),
        np.concatenate([a.tags, b.tags]),
        np.concatenate([a.starts, b.starts]),
    )


def _fmt(v):
    return "" if np.isnan(v) else f"{v:.15g}"


def save_dataset(ds: LabeledDataset, path):
    """CSV: ``tag,r,i_ex,start,target,v1..vNL``, one row per window."""
    header = ["tag", "r", "i_ex", "start", "target"] + [f"v{k + 1}" for k in range(ds.nl)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(ds)):
            writer.writerow([ds.tags[i], _fmt(ds.r[i]), _fmt(ds.i_ex[i]), int(ds.starts[i]),
                             f"{ds.targets[i]:.15g}"] + [f"{v:.15g}" for v in ds.values[i]])


def load_dataset(path) -> LabeledDataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetFormatError(f"{path}: empty file")
    header = rows[0]
    if header[:5] != ["tag", "r", "i_ex", "start", "target"]:
        raise DatasetFormatError(f"{path}: unexpected header {header[:5]}")
    nl = len(header) - 5
    if nl < 1 or header[5:] != [f"v{k + 1}" for k in range(nl)]:
        raise DatasetFormatError(f"{path}: malformed value columns")
    body = rows[1:]
    if not body:
        return LabeledDataset.empty(nl)

    def num(s):
        return float("nan") if s == "" else float(s)

    tags, r, i_ex, starts, targets, values = [], [], [], [], [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != nl + 5:
            raise DatasetFormatError(f"{path}:{lineno}: expected {nl + 5} fields, got {len(row)}")
        try:
            tags.append(row[0])
            r.append(num(row[1]))
            i_ex.append(num(row[2]))
            starts.append(int(row[3]))
            targets.append(float(row[4]))
            values.append([float(v) for v in row[5:]])
        except ValueError as exc:
            raise DatasetFormatError(f"{path}:{lineno}: {exc}") from exc
    return LabeledDataset(np.array(values), targets, r, i_ex, tags, starts)

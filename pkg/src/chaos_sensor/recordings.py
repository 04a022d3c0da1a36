"""Ingestion of experimental spike recordings.

Waveforms are low-pass filtered, peaks are picked as local maxima, and the
distances between peaks become the interval series that is windowed and
labeled like the simulated data.  Pre-extracted period files skip the first
two steps.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .datasets import LabeledDataset, WindowingConfig, _window_matrix, label_windows
from .fuzzy import FuzzyEnParams
from .hr import intervals

__all__ = [
    "WaveformRecording",
    "lowpass",
    "extract_peaks",
    "load_waveform_csv",
    "load_periods_csv",
    "save_periods_csv",
    "recording_intervals",
    "build_experimental_base",
]


@dataclass
class WaveformRecording:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).reshape(-1)
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.size == 0:
            raise ValueError("empty recording")


def _pole(cutoff_hz, sample_rate):
    # one-pole y[n] = a x[n] + (1 - a) y[n-1] with |H|^2 = 1/2 at the cutoff
    c = np.cos(2.0 * np.pi * cutoff_hz / sample_rate)
    b = (2.0 - c) - np.sqrt((2.0 - c) ** 2 - 1.0)
    return 1.0 - b


def lowpass(w: WaveformRecording, cutoff_hz) -> WaveformRecording:
    """Zero-phase first-order low-pass (forward and backward pass).

    The single-pass -3 dB point is ``cutoff_hz``; after both passes the
    amplitude response is the single-pass magnitude squared.
    """
    if not 0 < cutoff_hz < w.sample_rate / 2:
        raise ValueError(f"cutoff {cutoff_hz} Hz outside (0, {w.sample_rate / 2}) Hz")
    a = _pole(cutoff_hz, w.sample_rate)
    num, den = [a], [1.0, a - 1.0]
    x = w.samples
    if x.size <= 6:  # filtfilt needs more samples than its edge padding
        zi = signal.lfilter_zi(num, den)
        y = signal.lfilter(num, den, x, zi=zi * x[0])[0]
        y = signal.lfilter(num, den, y[::-1], zi=zi * y[-1])[0][::-1]
    else:
        y = signal.filtfilt(num, den, x)
    return WaveformRecording(y, w.sample_rate)


def extract_peaks(w: WaveformRecording, height_fraction=0.2, local_points=2) -> np.ndarray:
    """Times (s) of positive local maxima.

    A sample is a peak when it is strictly above its ``local_points`` left
    neighbours, not below its ``local_points`` right neighbours, and higher than
    ``min + height_fraction * (max - min)`` of the whole recording.
    """
    if not 0 <= height_fraction < 1:
        raise ValueError("height_fraction must be in [0, 1)")
    if local_points < 1:
        raise ValueError("local_points must be >= 1")
    x = w.samples
    p = local_points
    if x.size < 2 * p + 1:
        return np.empty(0)
    view = np.lib.stride_tricks.sliding_window_view(x, 2 * p + 1)
    centre = view[:, p]
    is_peak = (centre > view[:, :p].max(axis=1)) & (centre >= view[:, p + 1:].max(axis=1))
    lo, hi = x.min(), x.max()
    is_peak &= centre > lo + height_fraction * (hi - lo)
    return (np.flatnonzero(is_peak) + p) / w.sample_rate


def _read_numeric_rows(path):
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    return rows


def load_waveform_csv(path) -> WaveformRecording:
    """Read a ``t,v`` CSV sampled at a fixed rate (header optional)."""
    rows = _read_numeric_rows(path)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two samples")
    data = np.array([[float(c) for c in row[:2]] for row in rows])
    step = np.diff(data[:, 0])
    if not (step > 0).all():
        raise ValueError(f"{path}: time column must be strictly increasing")
    return WaveformRecording(data[:, 1], 1.0 / float(np.median(step)))


def load_periods_csv(path) -> np.ndarray:
    """Read one interval per row (header optional); the last column is used."""
    rows = _read_numeric_rows(path)
    return np.array([float(row[-1]) for row in rows])


def save_periods_csv(values, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["interval"])
        for v in np.asarray(values, dtype=float):
            writer.writerow([repr(float(v))])


def recording_intervals(w: WaveformRecording, cutoff_hz=10e3, height_fraction=0.2,
                        local_points=2) -> np.ndarray:
    """Filter (when the cutoff is below Nyquist), pick peaks, return intervals."""
    if cutoff_hz is not None and cutoff_hz < w.sample_rate / 2:
        w = lowpass(w, cutoff_hz)
    return intervals(extract_peaks(w, height_fraction, local_points))


def build_experimental_base(sources, cfg=None, fe=None, cutoff_hz=10e3, height_fraction=0.2,
                            local_points=2) -> LabeledDataset:
    """Window and label experimental interval series.

    ``sources`` is an iterable of ``(tag, data)`` where ``data`` is an interval
    array or a :class:`WaveformRecording`.  Sources yielding fewer than ``nl``
    intervals are skipped with a warning; their tags are listed in the
    returned dataset's ``skipped`` attribute.
    """
    cfg = WindowingConfig(nl=50, s=1, count=None) if cfg is None else cfg
    fe = FuzzyEnParams() if fe is None else fe
    blocks, tags, starts, skipped = [], [], [], []
    for tag, data in sources:
        if isinstance(data, WaveformRecording):
            series = recording_intervals(data, cutoff_hz, height_fraction, local_points)
        else:
            series = np.asarray(data, dtype=float).reshape(-1)
        if series.size < cfg.required_length():
            warnings.warn(f"source {tag!r}: {series.size} intervals < {cfg.required_length()} "
                          "needed, skipped", stacklevel=2)
            skipped.append(tag)
            continue
        offsets, mat = _window_matrix(series, cfg)
        blocks.append(mat)
        starts.append(offsets)
        tags.extend([tag] * len(offsets))
    if not blocks:
        ds = LabeledDataset.empty(cfg.nl)
    else:
        values = np.vstack(blocks)
        ds = LabeledDataset(values, label_windows(values, fe), tags=tags,
                            starts=np.concatenate(starts))
    ds.skipped = skipped
    return ds

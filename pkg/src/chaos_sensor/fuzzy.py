"""Fuzzy entropy of short real series.

Each length-m segment of the series is baseline-corrected by its own mean, pairs
of segments are compared with the Chebyshev distance, and the distance is
turned into a similarity ``exp(-d**r2 / r1)``.  ``phi(m)`` is the mean
similarity over all ordered pairs i != j, and

    FuzzyEn = ln phi(m) - ln phi(m + 1).

Both levels average over the same N - m segments.  With m = 1 every centred
segment is (0,), so phi(1) = 1 and FuzzyEn = -ln phi(2).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "FuzzyEnParams",
    "FuzzyEnInfo",
    "SeriesTooShortError",
    "embed",
    "chebyshev_distance",
    "similarity",
    "phi",
    "resolve_r1",
    "fuzzy_entropy",
    "TINY",
]

#: smallest positive normal double; phi is clamped to it before the logarithm
TINY = sys.float_info.min


class SeriesTooShortError(ValueError):
    pass


@dataclass(frozen=True)
class FuzzyEnParams:
    """Embedding dimension ``m``, tolerance ``r1`` and fuzzy exponent ``r2``.

    With ``relative=True`` (default) the effective tolerance is
    ``r1 * std(series)`` using the population standard deviation.
    """

    m: int = 1
    r1: float = 0.01
    r2: float = 1.0
    relative: bool = True

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not self.r2 > 0:
            raise ValueError(f"r2 must be positive, got {self.r2}")
        if not self.r1 > 0:
            raise ValueError(f"r1 must be positive, got {self.r1}")


class FuzzyEnInfo(NamedTuple):
    phi_m: float
    phi_m1: float
    r1: float
    clamped: bool
    degenerate: bool


def embed(series, m):
    """Return the (N - m + 1, m) array of mean-centred segments of ``series``."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < m:
        raise SeriesTooShortError(f"series of length {n} is shorter than m={m}")
    seg = np.lib.stride_tricks.sliding_window_view(x, m)
    return seg - seg.mean(axis=1, keepdims=True)


def chebyshev_distance(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    if u.size == 0:
        return 0.0
    return float(np.max(np.abs(u - v)))


def similarity(d, r1, r2):
    """Fuzzy membership ``exp(-d**r2 / r1)``; works elementwise on arrays."""
    if not r1 > 0:
        raise ValueError(f"r1 must be positive, got {r1}")
    if not r2 > 0:
        raise ValueError(f"r2 must be positive, got {r2}")
    return np.exp(-np.power(d, r2) / r1)


def _phi(x, m, count, r1, r2):
    v = embed(x, m)[:count]
    d = np.abs(v[:, None, :] - v[None, :, :]).max(axis=2)
    sim = similarity(d, r1, r2)
    # zero the diagonal rather than subtracting it: tiny off-diagonal sums would cancel
    np.fill_diagonal(sim, 0.0)
    return sim.sum() / (count * (count - 1))


def phi(series, m, r1, r2):
    """Mean pairwise similarity of the first N - m centred segments of length m."""
    x = np.asarray(series, dtype=float)
    count = x.size - m
    if count < 2:
        raise SeriesTooShortError(f"need N >= m + 2, got N={x.size}, m={m}")
    return float(_phi(x, m, count, r1, r2))


def resolve_r1(series, params: FuzzyEnParams):
    if params.relative:
        return params.r1 * float(np.std(np.asarray(series, dtype=float)))
    return params.r1


def fuzzy_entropy(series, params: FuzzyEnParams | None = None, full_output=False):
    """Fuzzy entropy of ``series``.

    Parameters
    ----------
    series : array_like
        At least ``m + 2`` values.
    params : FuzzyEnParams, optional
        Defaults to m=1, r2=1, r1=0.01 * std.
    full_output : bool
        Also return a :class:`FuzzyEnInfo` with both phi values, the resolved
        tolerance and the clamp/degenerate flags.

    A constant series under relative tolerance has zero spread and is reported
    as entropy 0 with ``degenerate=True``.
    """
    params = FuzzyEnParams() if params is None else params
    x = np.asarray(series, dtype=float)
    m = params.m
    count = x.size - m
    if count < 2:
        raise SeriesTooShortError(f"need N >= m + 2, got N={x.size}, m={m}")
    r1 = resolve_r1(x, params)
    if not r1 > 0:
        info = FuzzyEnInfo(1.0, 1.0, r1, False, True)
        return (0.0, info) if full_output else 0.0

    phi_m = _phi(x, m, count, r1, params.r2)
    phi_m1 = _phi(x, m + 1, count, r1, params.r2)
    clamped = bool(phi_m < TINY or phi_m1 < TINY)
    value = float(np.log(max(phi_m, TINY)) - np.log(max(phi_m1, TINY)))
    if full_output:
        return value, FuzzyEnInfo(float(phi_m), float(phi_m1), r1, clamped, False)
    return value

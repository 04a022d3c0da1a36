"""Hindmarsh-Rose neuron: integration, spike detection and inter-spike intervals.

The model is

    dX/dt = Y + 3 X^2 - X^3 - Z + I_ex
    dY/dt = 1 - 5 X^2 - Y
    dZ/dt = r (4 (X + 8/5) - Z)

integrated with classical fixed-step RK4.  Spikes are strict local maxima of X
above a threshold; the sensor input is the series of distances between
consecutive spikes.
"""
from __future__ import annotations

import csv
import functools
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numba
import numpy as np

__all__ = [
    "HRParameters",
    "HRState",
    "Trajectory",
    "IntegrationError",
    "StepCapError",
    "BlowUpError",
    "hr_derivative",
    "rk4_step",
    "integrate",
    "detect_spikes",
    "intervals",
    "spike_intervals",
    "bifurcation_scan",
    "save_intervals_csv",
]


@dataclass(frozen=True)
class HRParameters:
    """Control knobs of one Hindmarsh-Rose run.

    ``t_transient`` is the initial span discarded before spikes are counted and
    ``target_intervals`` the number of inter-spike intervals to collect after it.
    """

    r: float = 0.0055
    i_ex: float = 3.25
    x0: float = 0.0
    y0: float = 0.0
    z0: float = 0.0
    dt: float = 0.01
    t_transient: float = 1000.0
    target_intervals: int = 500
    spike_threshold: float = 1.0
    max_steps: int = 10**8

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if self.target_intervals < 1:
            raise ValueError(f"target_intervals must be >= 1, got {self.target_intervals}")
        if self.t_transient < 0:
            raise ValueError(f"t_transient must be >= 0, got {self.t_transient}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")


class HRState(NamedTuple):
    x: float
    y: float
    z: float


@dataclass
class Trajectory:
    """Sampled path: ``times`` (n,) and ``states`` (n, 3) holding X, Y, Z."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float).reshape(-1, 3)
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")

    def __len__(self):
        return len(self.times)

    @property
    def x(self):
        return self.states[:, 0]

    @property
    def y(self):
        return self.states[:, 1]

    @property
    def z(self):
        return self.states[:, 2]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "y", "z"])
            for t, (x, y, z) in zip(self.times, self.states):
                writer.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(z))])


class IntegrationError(RuntimeError):
    """A run failed to deliver the requested intervals; ``r`` names the run."""

    def __init__(self, message, r=None):
        super().__init__(message)
        self.r = r


class StepCapError(IntegrationError):
    """Step cap hit before enough spikes: the parameter set does not spike."""


class BlowUpError(IntegrationError):
    """The state became non-finite: dt is too large for the dynamics."""


@numba.njit(cache=True, inline="always")
def _rhs(x, y, z, r, i_ex):
    dx = y + 3.0 * x * x - x * x * x - z + i_ex
    dy = 1.0 - 5.0 * x * x - y
    dz = r * (4.0 * (x + 1.6) - z)
    return dx, dy, dz


@numba.njit(cache=True)
def _step(x, y, z, r, i_ex, dt):
    k1x, k1y, k1z = _rhs(x, y, z, r, i_ex)
    h = 0.5 * dt
    k2x, k2y, k2z = _rhs(x + h * k1x, y + h * k1y, z + h * k1z, r, i_ex)
    k3x, k3y, k3z = _rhs(x + h * k2x, y + h * k2y, z + h * k2z, r, i_ex)
    k4x, k4y, k4z = _rhs(x + dt * k3x, y + dt * k3y, z + dt * k3z, r, i_ex)
    s = dt / 6.0
    return (
        x + s * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        y + s * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        z + s * (k1z + 2.0 * k2z + 2.0 * k3z + k4z),
    )


# status codes returned by _run_until_spikes
_OK, _CAP, _BLOWUP = 0, 1, 2


@numba.njit(cache=True)
def _run_until_spikes(x, y, z, r, i_ex, dt, t_after, threshold, n_spikes, max_steps):
    """Step until ``n_spikes`` maxima after ``t_after`` are confirmed.

    Returns (spike step indices, index of the last computed sample, status).
    A maximum at sample k is confirmed once sample k + 1 exists.
    """
    idx = np.empty(n_spikes, dtype=np.int64)
    count = 0
    x_prev = x  # X[k-1]
    x_cur = x  # X[k]
    for n in range(1, max_steps + 1):
        x, y, z = _step(x, y, z, r, i_ex, dt)
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
            return idx[:count], n, _BLOWUP
        k = n - 1
        if k >= 1 and x_cur > x_prev and x_cur >= x and x_cur > threshold and k * dt > t_after:
            idx[count] = k
            count += 1
            if count == n_spikes:
                return idx, n, _OK
        x_prev = x_cur
        x_cur = x
    return idx[:count], max_steps, _CAP


@numba.njit(cache=True)
def _path(x, y, z, r, i_ex, dt, n_steps):
    out = np.empty((n_steps + 1, 3))
    out[0, 0], out[0, 1], out[0, 2] = x, y, z
    for n in range(1, n_steps + 1):
        x, y, z = _step(x, y, z, r, i_ex, dt)
        out[n, 0], out[n, 1], out[n, 2] = x, y, z
    return out


def hr_derivative(state, params: HRParameters):
    """Right-hand side of the model at ``state`` as a ``(dx, dy, dz)`` tuple."""
    x, y, z = state
    return _rhs(float(x), float(y), float(z), params.r, params.i_ex)


def rk4_step(state, params: HRParameters, dt=None) -> HRState:
    x, y, z = state
    return HRState(*_step(float(x), float(y), float(z), params.r, params.i_ex,
                          params.dt if dt is None else float(dt)))


def _spike_steps(params: HRParameters):
    idx, last, status = _run_until_spikes(
        params.x0, params.y0, params.z0, params.r, params.i_ex, params.dt,
        params.t_transient, params.spike_threshold, params.target_intervals + 1,
        params.max_steps,
    )
    if status == _BLOWUP:
        raise BlowUpError(
            f"non-finite state at step {last} (r={params.r}, dt={params.dt})", r=params.r)
    if status == _CAP:
        raise StepCapError(
            f"step cap {params.max_steps} reached with {len(idx)} of "
            f"{params.target_intervals + 1} spikes (r={params.r}, i_ex={params.i_ex})",
            r=params.r)
    return idx, last


def integrate(params: HRParameters, t_end=None) -> Trajectory:
    """Integrate from ``(x0, y0, z0)`` at t = 0.

    Without ``t_end`` the run stops at the sample confirming the spike that
    completes ``target_intervals`` intervals after the transient.  With
    ``t_end`` a fixed span of ``round(t_end / dt)`` steps is integrated.

    Raises
    ------
    StepCapError
        ``max_steps`` elapsed before enough spikes were seen.
    BlowUpError
        The state stopped being finite.
    """
    if t_end is None:
        _, n_steps = _spike_steps(params)
    else:
        if t_end < 0:
            raise ValueError("t_end must be >= 0")
        n_steps = int(round(t_end / params.dt))
        if n_steps > params.max_steps:
            raise StepCapError(f"t_end needs {n_steps} steps > cap {params.max_steps}", r=params.r)
    states = _path(params.x0, params.y0, params.z0, params.r, params.i_ex, params.dt, n_steps)
    if not np.isfinite(states).all():
        raise BlowUpError(f"non-finite state (r={params.r}, dt={params.dt})", r=params.r)
    times = np.arange(n_steps + 1) * params.dt
    return Trajectory(times, states)


def detect_spikes(traj: Trajectory, threshold=1.0, after=0.0) -> np.ndarray:
    """Times of strict local maxima of X above ``threshold`` with t > ``after``.

    Sample k qualifies when X[k] > X[k-1] and X[k] >= X[k+1], so a flat top
    resolves to its first sample.  End samples never qualify.
    """
    x = traj.x
    if len(x) < 3:
        return np.empty(0)
    mid = x[1:-1]
    mask = (mid > x[:-2]) & (mid >= x[2:]) & (mid > threshold) & (traj.times[1:-1] > after)
    return traj.times[1:-1][mask]


def intervals(spikes) -> np.ndarray:
    """Distances between consecutive spike times (empty for fewer than 2 spikes)."""
    spikes = np.asarray(spikes, dtype=float)
    if spikes.size < 2:
        return np.empty(0)
    return np.diff(spikes)


@functools.lru_cache(maxsize=256)
def _cached_intervals(params: HRParameters) -> np.ndarray:
    idx, _ = _spike_steps(params)
    out = np.diff(idx * params.dt)
    out.flags.writeable = False
    return out


def spike_intervals(params: HRParameters) -> np.ndarray:
    """The first ``target_intervals`` intervals after the transient.

    Same numbers as ``intervals(detect_spikes(integrate(params), ...))`` but
    without storing the trajectory.  Results are memoised per parameter set.
    """
    return _cached_intervals(params).copy()


def bifurcation_scan(i_ex, r_values: Sequence[float], intervals_per_r, base=None) -> dict:
    """Map each r to its first ``intervals_per_r`` intervals, in ``r_values`` order."""
    base = HRParameters() if base is None else base
    out = {}
    for r in r_values:
        if not r > 0:
            raise ValueError(f"r must be positive, got {r}")
        p = replace(base, r=float(r), i_ex=float(i_ex), target_intervals=int(intervals_per_r))
        try:
            out[float(r)] = spike_intervals(p)
        except IntegrationError as exc:
            raise type(exc)(f"bifurcation scan failed at r={r}: {exc}", r=float(r)) from exc
    return out


def save_intervals_csv(values, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "interval"])
        for i, v in enumerate(np.asarray(values, dtype=float)):
            writer.writerow([i, repr(float(v))])

"""Fixed-step integrators for the selection dynamics.

integrate_ode steps an ordinary field with forward Euler or classic rk4.
integrate_dde steps the delayed field with forward Euler and a linearly
interpolated history buffer (constant pre-history).  picard_solve iterates
the integral-equation form on a fixed grid and serves as an independent
cross-check of the steppers.

All steppers keep states on the probability simplex.  Two corrections are
accounted separately: "drift" is the deviation of the component sum from 1
(a step-size symptom, bounded by spec.drift_tol), while "absorbed" mass
comes from clamping components that cross zero, which is the exact boundary
behavior of the selection dynamics when a group empties in finite time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, NonConvergenceError, NumericalDriftError

_METHODS = ("rk4", "forward-euler")


@dataclass
class IntegratorSpec:
    """Fixed-step integration parameters."""

    method: str = "rk4"  # "rk4" or "forward-euler"; delayed runs always step with Euler
    dt: float = 0.01
    horizon: float = 600.0
    renormalize: bool = True  # project every step back onto the simplex
    drift_tol: float = 1e-6  # max tolerated per-step sum deviation before erroring

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ConfigurationError("integrator.method must be one of %s" % (_METHODS,))
        if self.dt <= 0:
            raise ConfigurationError("integrator.dt must be positive")
        if self.horizon <= 0:
            raise ConfigurationError("integrator.horizon must be positive")

    def n_steps(self) -> int:
        return max(1, int(np.ceil(self.horizon / self.dt - 1e-9)))


@dataclass
class Trajectory:
    """Sampled solution: one row per time point."""

    times: np.ndarray  # (T,)
    states: np.ndarray  # (T, G)
    utilities: Optional[np.ndarray] = None  # (T, G), NaN rows possible for empty groups
    u_bar: Optional[np.ndarray] = None  # (T,)
    total_drift: float = 0.0  # accumulated |sum(p) - 1| corrections
    total_absorbed: float = 0.0  # accumulated mass clamped at the zero boundary

    def __len__(self) -> int:
        return len(self.times)

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def total_correction(self) -> float:
        return self.total_drift + self.total_absorbed


def _check_p0(p0) -> np.ndarray:
    p = np.asarray(getattr(p0, "p", p0), dtype=float).copy()
    if p.ndim != 1:
        raise ConfigurationError("initial state must be a vector")
    if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
        raise ConfigurationError("initial state must lie on the unit simplex")
    return p


def _project_step(raw: np.ndarray, spec: IntegratorSpec) -> tuple[np.ndarray, float, float]:
    """Clamp negatives, rescale to unit sum; returns (state, drift, absorbed)."""
    drift = abs(float(raw.sum()) - 1.0)
    if not spec.renormalize:
        return raw, drift, 0.0
    neg = raw < 0.0
    if np.any(neg):
        absorbed = float(-raw[neg].sum())
        raw = np.where(neg, 0.0, raw)
    else:
        absorbed = 0.0
    if drift > spec.drift_tol:
        raise NumericalDriftError(
            "simplex drift %.3e exceeds %.1e in one step; reduce dt" % (drift, spec.drift_tol)
        )
    total = float(raw.sum())
    if total <= 0.0:
        raise NumericalDriftError("entire population clamped away; reduce dt")
    return raw / total, drift, absorbed


def integrate_ode(field: Callable, p0, spec: IntegratorSpec, utilities: Callable | None = None) -> Trajectory:
    """Integrate dp/dt = field(t, p) on the fixed grid t_i = i * dt.

    field(t, p) -> dp.  When a utilities callback is supplied, the utility
    vector of every stored state is recorded alongside it.
    """
    p = _check_p0(p0)
    n = spec.n_steps()
    dt = spec.dt
    states = [p.copy()]
    drift_sum = 0.0
    absorbed_sum = 0.0
    for i in range(n):
        t = i * dt
        if spec.method == "rk4":
            k1 = field(t, p)
            k2 = field(t + 0.5 * dt, p + 0.5 * dt * k1)
            k3 = field(t + 0.5 * dt, p + 0.5 * dt * k2)
            k4 = field(t + dt, p + dt * k3)
            raw = p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            raw = p + dt * field(t, p)
        p, drift, absorbed = _project_step(raw, spec)
        drift_sum += drift
        absorbed_sum += absorbed
        states.append(p.copy())
    times = np.arange(n + 1) * dt
    states = np.array(states)
    u, u_bar = _record_utilities(states, utilities)
    return Trajectory(times, states, u, u_bar, drift_sum, absorbed_sum)


def _record_utilities(states: np.ndarray, utilities: Callable | None):
    if utilities is None:
        return None, None
    rows = [utilities(s) for s in states]
    return np.array([r.u for r in rows]), np.array([r.u_bar for r in rows])


@dataclass
class HistoryBuffer:
    """Grid-aligned state history of a delayed integration.

    Stores one state per step and answers lookups at any t' <= newest
    sample: the exact sample when t' hits the grid, the linear interpolation
    between neighbours otherwise, and the constant initial state for
    t' <= t0.  Only states are stored; callers derive utilities from the
    looked-up state, which keeps identities of the utility map (such as the
    population average being the mass-weighted mean) exact even between
    grid points.
    """

    t0: float
    dt: float
    states: list = field(default_factory=list)

    def append(self, p: np.ndarray) -> None:
        self.states.append(p)

    def lookup(self, t: float) -> np.ndarray:
        """State at time t, interpolating between samples."""
        x = (t - self.t0) / self.dt
        i = int(round(x))
        if abs(x - i) < 1e-9:
            frac = 0.0
        else:
            i = int(np.floor(x))
            frac = x - i
        if i >= len(self.states) or (i == len(self.states) - 1 and frac > 0.0):
            raise ConfigurationError("history lookup at t=%r is beyond the newest sample" % (t,))
        if i < 0 or t <= self.t0:
            return self.states[0]
        if frac == 0.0:
            return self.states[i]
        return (1.0 - frac) * self.states[i] + frac * self.states[i + 1]


def integrate_dde(field: Callable, p0, delta: float, spec: IntegratorSpec, utilities: Callable) -> Trajectory:
    """Integrate the delayed field with forward Euler and recorded history.

    field(t, lookup) -> dp, where lookup(t') returns the (state, utilities)
    pair at an earlier time.  Before t0 the history is the constant initial
    state.  With delta = 0 the stepping reproduces forward-Euler
    integrate_ode sample for sample.
    """
    if delta < 0:
        raise ConfigurationError("delay must be non-negative, got %r" % (delta,))
    p = _check_p0(p0)
    n = spec.n_steps()
    dt = spec.dt
    hist = HistoryBuffer(t0=0.0, dt=dt)
    hist.append(p.copy())

    def lookup(t_query: float):
        p_q = hist.lookup(t_query)
        return p_q, utilities(p_q)

    states = [p.copy()]
    u_rows = [utilities(p)]
    drift_sum = 0.0
    absorbed_sum = 0.0
    for i in range(n):
        t = i * dt
        raw = p + dt * field(t, lookup)
        p, drift, absorbed = _project_step(raw, spec)
        drift_sum += drift
        absorbed_sum += absorbed
        hist.append(p.copy())
        states.append(p.copy())
        u_rows.append(utilities(p))
    times = np.arange(n + 1) * dt
    return Trajectory(
        times,
        np.array(states),
        np.array([r.u for r in u_rows]),
        np.array([r.u_bar for r in u_rows]),
        drift_sum,
        absorbed_sum,
    )


def picard_solve(
    field: Callable,
    p0,
    times: np.ndarray,
    tol: float = 1e-10,
    max_rounds: int = 200,
    diffs: list | None = None,
) -> Trajectory:
    """Solve p(t) = p0 + integral of field by fixed-point iteration.

    Starts from the constant initial state and applies trapezoidal
    quadrature on the given grid until the sup-norm change between rounds
    drops below tol.  Raises NonConvergenceError when max_rounds pass
    without reaching tolerance (horizon too long for a contraction).
    An optional diffs list collects the per-round sup-norm changes.
    """
    p_init = _check_p0(p0)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
        raise ConfigurationError("picard grid must be strictly increasing with at least 2 points")
    t_count = len(times)
    current = np.tile(p_init, (t_count, 1))
    for _ in range(max_rounds):
        f = np.array([field(times[i], current[i]) for i in range(t_count)])
        seg = 0.5 * np.diff(times)[:, None] * (f[1:] + f[:-1])
        nxt = np.empty_like(current)
        nxt[0] = p_init
        nxt[1:] = p_init + np.cumsum(seg, axis=0)
        change = float(np.max(np.abs(nxt - current)))
        if diffs is not None:
            diffs.append(change)
        current = nxt
        if change < tol:
            return Trajectory(times.copy(), current)
    raise NonConvergenceError(
        "picard iteration did not reach tol=%.1e in %d rounds" % (tol, max_rounds)
    )

"""Population game over provider/service groups and its replicator dynamics.

Users are partitioned into G groups, one per (provider, surface subset,
transmit power) service triple.  The group utility is the valued expected
per-user rate minus per-user prices; utilities fall with the group share, so
the dynamics settle where all surviving groups earn the same utility.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, NumericError, UnsupportedScenarioError


@dataclass(frozen=True)
class ServiceIndex:
    """Identifies one service: provider sp, surface subset k, power level j (all 1-based)."""

    sp: int
    subset: int
    power_level: int


@dataclass
class PopulationState:
    """Point on the unit simplex: share of users in each group."""

    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if self.p.ndim != 1:
            raise ConfigurationError("population state must be a vector")
        if np.any(self.p < 0):
            raise ConfigurationError("population shares must be non-negative")
        if abs(float(self.p.sum()) - 1.0) > 1e-9:
            raise ConfigurationError("population shares must sum to 1 within 1e-9")

    @classmethod
    def uniform(cls, n_groups: int) -> "PopulationState":
        return cls(np.full(n_groups, 1.0 / n_groups))


@dataclass
class UtilityVector:
    """Per-group utilities plus their population average.

    Entries for empty groups (share exactly zero) are NaN: the utility of a
    service nobody uses is not applicable.
    """

    u: np.ndarray
    u_bar: float


@dataclass
class UtilityParams:
    """Economic parameters: per-group valuation, per-provider unit prices."""

    valuation: np.ndarray  # value per rate unit, one entry per group
    price_irs: np.ndarray  # price per active surface element, one entry per provider
    price_power: np.ndarray  # price per watt of transmit power, one entry per provider

    @classmethod
    def from_config(cls, cfg) -> "UtilityParams":
        v = np.asarray(cfg.valuation, dtype=float)
        if v.ndim == 0:
            v = np.full(cfg.n_groups, float(v))
        if v.shape != (cfg.n_groups,):
            raise ConfigurationError(
                "valuation must be scalar or one value per group (%d), got shape %r"
                % (cfg.n_groups, v.shape)
            )
        return cls(
            valuation=v,
            price_irs=np.array([sp.price_irs for sp in cfg.sps], dtype=float),
            price_power=np.array([sp.price_power for sp in cfg.sps], dtype=float),
        )


def expected_rate(link, p_g: float, bandwidth: float, n_users: int) -> float:
    """Expected per-user rate of a group: share of bandwidth over its members.

    rate = bandwidth / (p_g * n_users) * log2(1 + snr).  The group share p_g
    must be positive; rates of empty groups are not defined.
    """
    if p_g <= 0.0:
        raise ConfigurationError("expected_rate needs a positive group share, got %r" % (p_g,))
    return bandwidth / (p_g * n_users) * np.log2(1.0 + link.snr)


def utility(link, p_g: float, params: UtilityParams, cfg) -> float:
    """Group utility: valued rate minus per-user surface and power prices."""
    svc = link.service
    g = cfg.group_index(svc)
    sp = cfg.sps[svc.sp - 1]
    rate = expected_rate(link, p_g, sp.bandwidth_mhz, cfg.n_users)
    n_active = len(link.phases.alphas)
    cost = params.price_irs[svc.sp - 1] * n_active + params.price_power[svc.sp - 1] * link.beam.power_w
    return float(params.valuation[g] * rate - cost / (p_g * cfg.n_users))


def average_utility(p: np.ndarray, u: np.ndarray) -> float:
    """Population-average utility sum(p_g * u_g); empty groups contribute zero."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    if p.shape != u.shape:
        raise ConfigurationError("share and utility vectors differ in length")
    return float(np.sum(np.where(p > 0.0, p * u, 0.0)))


def make_utilities(links: dict, params: UtilityParams, cfg) -> Callable[[np.ndarray], UtilityVector]:
    """Build the state -> UtilityVector map for a fixed set of optimized links.

    Channels are static, so per-group SNRs and prices are folded into
    constants; only the division by the group share happens per call.
    """
    n_groups = cfg.n_groups
    snr = np.empty(n_groups)
    bw = np.empty(n_groups)
    cost = np.empty(n_groups)
    for g in range(n_groups):
        link = links[g]
        svc = link.service
        sp = cfg.sps[svc.sp - 1]
        snr[g] = link.snr
        bw[g] = sp.bandwidth_mhz
        cost[g] = (
            params.price_irs[svc.sp - 1] * len(link.phases.alphas)
            + params.price_power[svc.sp - 1] * link.beam.power_w
        )
    n = float(cfg.n_users)
    # valued rate minus prices, before the division by the group headcount
    numer = params.valuation * bw * np.log2(1.0 + snr) - cost
    n_nan = np.full(n_groups, np.nan)

    def utilities(p: np.ndarray) -> UtilityVector:
        p = np.asarray(p, dtype=float)
        alive = p > 0.0
        u = np.divide(numer, p * n, out=n_nan.copy(), where=alive)
        u_bar = float(np.sum(np.where(alive, p * u, 0.0)))
        return UtilityVector(u=u, u_bar=u_bar)

    return utilities


def replicator_field(t: float, state: np.ndarray, utilities: Callable, mu: float) -> np.ndarray:
    """Replicator vector field dp_g = mu * p_g * (u_g - u_bar).

    Empty groups stay empty: their component is exactly zero without
    evaluating the (undefined) utility.
    """
    p = np.asarray(state, dtype=float)
    uv = utilities(p)
    return mu * np.where(p > 0.0, p * (uv.u - uv.u_bar), 0.0)


def delayed_replicator_field(t: float, history: Callable, delta: float, mu: float) -> np.ndarray:
    """Replicator field evaluated on the state and utilities delta time ago.

    history(t') must return (state, UtilityVector) for any t' <= current t;
    with delta = 0 this reduces to the ordinary replicator field.
    """
    p_d, uv_d = history(t - delta)
    p_d = np.asarray(p_d, dtype=float)
    return mu * np.where(p_d > 0.0, p_d * (uv_d.u - uv_d.u_bar), 0.0)


def stability_bound(cfg, links: dict) -> float:
    """Largest decision delay with provably stable dynamics.

    Only defined for the reduced setting of exactly one service per provider
    (one surface subset, one power level); anything else raises
    UnsupportedScenarioError.  For M providers with SNR eta_m the bound is

        pi / (2 * mu * sum_m (B_m * log2(1 + eta_m)
                              - price_irs_m * K_m - price_power_m * J_m) / N)
    """
    for m, sp in enumerate(cfg.sps, start=1):
        if sp.irs_modules != 1 or len(sp.power_levels_dbm) != 1:
            raise UnsupportedScenarioError(
                "delay bound needs one service per provider; sp%d offers %d subset(s) x %d power level(s)"
                % (m, sp.irs_modules, len(sp.power_levels_dbm))
            )
    params = UtilityParams.from_config(cfg)
    total = 0.0
    for g, svc in enumerate(cfg.service_indices()):
        sp = cfg.sps[svc.sp - 1]
        link = links[g]
        total += (
            sp.bandwidth_mhz * np.log2(1.0 + link.snr)
            - params.price_irs[svc.sp - 1] * sp.irs_elements
            - params.price_power[svc.sp - 1] * link.beam.power_w
        )
    if total <= 0.0:
        raise NumericError("delay bound undefined: aggregate utility term is not positive")
    return float(np.pi / (2.0 * cfg.mu * total / cfg.n_users))


@dataclass
class Equilibrium:
    """Detected rest point of a trajectory."""

    time: float
    index: int
    utility_spread: Optional[float]  # relative spread among surviving groups, None if no utilities


def detect_equilibrium(
    traj, eps_field: float = 1e-6, eps_mass: float = 1e-2, min_quiet: float = 0.0
) -> Optional[Equilibrium]:
    """Earliest time after which the trajectory stops moving.

    Uses finite differences of the stored states: the first sample index i
    such that max_g |p_{i+1,g} - p_{i,g}| / dt < eps_field for every later
    sample.  Returns None when the tail never settles, or when the quiet
    tail is shorter than min_quiet time units.  Delayed runs should pass
    min_quiet >= the delay: they can sit exactly still for shorter spells
    while their history replays an excursion, and only a stretch longer
    than the information delay proves a genuine rest point.  When utilities
    were recorded, reports the relative utility spread over groups with
    share above eps_mass at the detected sample.
    """
    if len(traj.times) == 0:
        raise ConfigurationError("cannot detect equilibrium of an empty trajectory")
    if len(traj.times) == 1:
        return Equilibrium(time=float(traj.times[0]), index=0, utility_spread=_spread(traj, 0, eps_mass))
    dts = np.diff(traj.times)
    rates = np.max(np.abs(np.diff(traj.states, axis=0)), axis=1) / dts
    quiet = rates < eps_field
    if not quiet[-1]:
        return None
    # first index from which the tail stays quiet
    moving = np.nonzero(~quiet)[0]
    idx = 0 if moving.size == 0 else int(moving[-1]) + 1
    if float(traj.times[-1] - traj.times[idx]) < min_quiet:
        return None
    return Equilibrium(time=float(traj.times[idx]), index=idx, utility_spread=_spread(traj, idx, eps_mass))


def _spread(traj, idx: int, eps_mass: float) -> Optional[float]:
    if traj.utilities is None:
        return None
    p = traj.states[idx]
    u = traj.utilities[idx][p > eps_mass]
    if u.size == 0:
        return None
    scale = float(np.max(np.abs(u)))
    if scale == 0.0:
        return 0.0
    return float((np.max(u) - np.min(u)) / scale)

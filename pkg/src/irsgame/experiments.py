"""Experiment presets: simulate scenarios and emit CSV data files.

Every preset is a pure function of (config, seed): channels, links and
trajectories are deterministic, so rerunning a preset with the same inputs
reproduces its output files byte for byte.  Sweep points are independent
pure computations and safe to run concurrently; this implementation runs
them in order for simplicity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .channel import Position, generate_channels
from .config import ScenarioConfig
from .dynamics import Trajectory, integrate_dde, integrate_ode
from .errors import ConfigurationError, NonConvergenceError
from .game import (
    UtilityParams,
    delayed_replicator_field,
    detect_equilibrium,
    make_utilities,
    replicator_field,
    stability_bound,
)
from .phy import build_all_links

PRESETS = (
    "utilities-vs-time",
    "convergence-speed",
    "delay-sweep",
    "irs-size-sweep",
    "distance-price-sweep",
)

# equilibrium detection thresholds shared by all presets
EPS_FIELD = 1e-6
EPS_MASS = 1e-2

# trajectory CSVs keep every TRAJECTORY_STRIDE-th sample (plus the last)
TRAJECTORY_STRIDE = 10

# sweep presets only need the terminal equilibrium, not a finely sampled
# transient, so they step coarser (and, where convergence is slow, longer)
# than the base config
CONVERGENCE_DT_FACTOR = 5.0
IRS_SWEEP_DT_FACTOR = 10.0
DISTANCE_SWEEP_DT_FACTOR = 20.0
DISTANCE_SWEEP_HORIZON_FACTOR = 4.0


@dataclass
class SimulationResult:
    """Everything produced by one scenario run."""

    cfg: ScenarioConfig
    channels: dict
    links: dict
    utilities: object  # state -> UtilityVector callable
    trajectory: Trajectory


def simulate(cfg: ScenarioConfig) -> SimulationResult:
    """Run the full pipeline: channels, link optimization, selection dynamics.

    A zero decision delay integrates the ordinary replicator field with the
    configured method; a positive delay integrates the delayed field with
    forward Euler and recorded history.
    """
    channels = generate_channels(cfg)
    links = build_all_links(cfg, channels)
    params = UtilityParams.from_config(cfg)
    utilities = make_utilities(links, params, cfg)
    p0 = cfg.initial_population()
    if cfg.delta > 0:
        field = lambda t, lookup: delayed_replicator_field(t, lookup, cfg.delta, cfg.mu)
        traj = integrate_dde(field, p0, cfg.delta, cfg.integrator, utilities)
    else:
        field = lambda t, p: replicator_field(t, p, utilities, cfg.mu)
        traj = integrate_ode(field, p0, cfg.integrator, utilities)
    return SimulationResult(cfg=cfg, channels=channels, links=links, utilities=utilities, trajectory=traj)


# --- CSV emission --------------------------------------------------------------


def _fmt_cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def _write_csv(path: Path, meta: list, columns: list, rows) -> Path:
    lines = ["# %s = %s" % (k, v) for k, v in meta]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _meta(cfg: ScenarioConfig, preset: str, extra: list = ()) -> list:
    return [("preset", preset)] + list(extra) + cfg.flat_items()


def emit_csv(traj: Trajectory, meta: list, path, stride: int = 1) -> Path:
    """Write a trajectory as CSV: '#' header lines, then t, shares, utilities.

    Columns: t, p_1..p_G, u_1..u_G, u_bar.  Utilities of empty groups are
    written as nan.  stride thins the samples but always keeps the last one.
    """
    if len(traj) == 0:
        raise ConfigurationError("refusing to write an empty trajectory")
    if stride < 1:
        raise ConfigurationError("stride must be at least 1")
    n_groups = traj.states.shape[1]
    columns = (
        ["t"]
        + ["p_%d" % (g + 1) for g in range(n_groups)]
        + ["u_%d" % (g + 1) for g in range(n_groups)]
        + ["u_bar"]
    )
    idx = list(range(0, len(traj), stride))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)
    has_u = traj.utilities is not None
    rows = []
    for i in idx:
        u = traj.utilities[i] if has_u else [np.nan] * n_groups
        ub = traj.u_bar[i] if has_u else np.nan
        rows.append([traj.times[i], *traj.states[i], *u, ub])
    return _write_csv(Path(path), meta, columns, rows)


def trajectory_json(traj: Trajectory) -> dict:
    """Trajectory as arrays keyed by CSV column name."""
    n_groups = traj.states.shape[1]
    out = {"t": traj.times.tolist()}
    for g in range(n_groups):
        out["p_%d" % (g + 1)] = traj.states[:, g].tolist()
    if traj.utilities is not None:
        for g in range(n_groups):
            col = traj.utilities[:, g]
            out["u_%d" % (g + 1)] = [None if not np.isfinite(v) else v for v in col]
        out["u_bar"] = traj.u_bar.tolist()
    return out


# --- presets -------------------------------------------------------------------


def _require_equilibrium(traj: Trajectory, what: str):
    eq = detect_equilibrium(traj, EPS_FIELD, EPS_MASS)
    if eq is None:
        raise NonConvergenceError(
            "%s did not reach an equilibrium within the horizon; increase integrator.horizon" % what
        )
    return eq


def _scaled_horizon(cfg: ScenarioConfig, mu: float, n_users: int) -> float:
    # convergence time scales like n_users / mu; keep the configured margin
    return cfg.integrator.horizon * (cfg.mu / mu) * (n_users / cfg.n_users)


def _run_utilities_vs_time(cfg: ScenarioConfig, out_dir: Path, json_dump: bool = False) -> list:
    res = simulate(cfg)
    paths = [
        emit_csv(
            res.trajectory,
            _meta(cfg, "utilities-vs-time"),
            out_dir / "utilities_vs_time.csv",
            stride=TRAJECTORY_STRIDE,
        )
    ]
    if json_dump:
        paths.append(_write_json(res.trajectory, out_dir / "utilities_vs_time.json"))
    return paths


def _write_json(traj: Trajectory, path: Path) -> Path:
    path.write_text(json.dumps(trajectory_json(traj)) + "\n", encoding="utf-8")
    return path


def _run_convergence_speed(cfg: ScenarioConfig, out_dir: Path, json_dump: bool = False) -> list:
    rows = []
    for mu in cfg.grids.mu:
        for n in cfg.grids.n_users:
            point = replace(
                cfg,
                mu=mu,
                n_users=n,
                integrator=replace(
                    cfg.integrator,
                    dt=cfg.integrator.dt * CONVERGENCE_DT_FACTOR,
                    horizon=_scaled_horizon(cfg, mu, n),
                ),
            )
            res = simulate(point)
            eq = _require_equilibrium(res.trajectory, "grid point mu=%g n_users=%d" % (mu, n))
            rows.append((mu, n, eq.time))
    path = _write_csv(
        out_dir / "convergence_speed.csv",
        _meta(cfg, "convergence-speed"),
        ["mu", "n_users", "t_equilibrium"],
        rows,
    )
    return [path]


def _run_delay_sweep(cfg: ScenarioConfig, out_dir: Path, json_dump: bool = False) -> list:
    try:
        channels = generate_channels(cfg)
        links = build_all_links(cfg, channels)
        bound = "%.17g" % stability_bound(cfg, links)
    except ConfigurationError:
        bound = "not computable (needs one service per provider)"
    paths = []
    for delta in cfg.grids.delta:
        point = replace(cfg, delta=delta)
        res = simulate(point)
        eq = detect_equilibrium(res.trajectory, EPS_FIELD, EPS_MASS, min_quiet=delta)
        t_eq = "%.17g" % eq.time if eq is not None else "none (tail never rests for a full delay window)"
        tag = ("%g" % delta).replace(".", "p").replace("-", "m")
        paths.append(
            emit_csv(
                res.trajectory,
                _meta(point, "delay-sweep", [("stability_bound", bound), ("t_equilibrium", t_eq)]),
                out_dir / ("delay_sweep_delta%s.csv" % tag),
                stride=TRAJECTORY_STRIDE,
            )
        )
        if json_dump:
            paths.append(_write_json(res.trajectory, out_dir / ("delay_sweep_delta%s.json" % tag)))
    return paths


def _run_irs_size_sweep(cfg: ScenarioConfig, out_dir: Path, json_dump: bool = False) -> list:
    if len(cfg.sps) < 2:
        raise ConfigurationError("irs-size-sweep needs a second provider to resize")
    # keep the surface price low enough that the rate gain of extra elements
    # is not eaten by the element price across the whole default grid
    base = replace(
        cfg,
        sps=[replace(sp, price_irs=min(sp.price_irs, 0.05)) for sp in cfg.sps],
        integrator=replace(cfg.integrator, dt=cfg.integrator.dt * IRS_SWEEP_DT_FACTOR),
    )
    rows = []
    n_groups = base.n_groups
    for k2 in base.grids.irs_elements_sp2:
        sps = list(base.sps)
        sps[1] = replace(sps[1], irs_elements=int(k2))
        point = replace(base, sps=sps)
        res = simulate(point)
        _require_equilibrium(res.trajectory, "grid point irs_elements_sp2=%d" % k2)
        rows.append((int(k2), *res.trajectory.terminal_state))
    path = _write_csv(
        out_dir / "irs_size_sweep.csv",
        _meta(base, "irs-size-sweep"),
        ["irs_elements_sp2"] + ["p_%d" % (g + 1) for g in range(n_groups)],
        rows,
    )
    return [path]


def _run_distance_price_sweep(cfg: ScenarioConfig, out_dir: Path, json_dump: bool = False) -> list:
    sp1 = cfg.sps[0]
    axis = np.array(
        [sp1.irs_position.x - sp1.bs_position.x, sp1.irs_position.y - sp1.bs_position.y]
    )
    norm = float(np.hypot(*axis))
    if norm == 0:
        raise ConfigurationError("sp.1 BS and surface positions coincide; no sweep axis")
    axis = axis / norm
    sp1_groups = cfg.groups_of_sp(1)
    sp2_groups = cfg.groups_of_sp(2) if len(cfg.sps) > 1 else []
    integrator = replace(
        cfg.integrator,
        dt=cfg.integrator.dt * DISTANCE_SWEEP_DT_FACTOR,
        horizon=cfg.integrator.horizon * DISTANCE_SWEEP_HORIZON_FACTOR,
    )
    rows = []
    for price in cfg.grids.price_irs_sp1:
        for dist in cfg.grids.distance:
            user = Position(
                sp1.irs_position.x + axis[0] * dist, sp1.irs_position.y + axis[1] * dist
            )
            sps = list(cfg.sps)
            sps[0] = replace(sp1, price_irs=price, user_position=user)
            point = replace(cfg, sps=sps, integrator=integrator)
            res = simulate(point)
            _require_equilibrium(
                res.trajectory, "grid point distance=%g price_irs_sp1=%g" % (dist, price)
            )
            p_end = res.trajectory.terminal_state
            rows.append(
                (
                    dist,
                    price,
                    float(p_end[sp1_groups].sum()),
                    float(p_end[sp2_groups].sum()),
                )
            )
    path = _write_csv(
        out_dir / "distance_price_sweep.csv",
        _meta(cfg, "distance-price-sweep"),
        ["distance", "price_irs_sp1", "share_sp1", "share_sp2"],
        rows,
    )
    return [path]


_RUNNERS = {
    "utilities-vs-time": _run_utilities_vs_time,
    "convergence-speed": _run_convergence_speed,
    "delay-sweep": _run_delay_sweep,
    "irs-size-sweep": _run_irs_size_sweep,
    "distance-price-sweep": _run_distance_price_sweep,
}


def run_experiment(preset: str, cfg: ScenarioConfig, out_dir, json_dump: bool = False) -> list:
    """Run one preset and write its data files; returns the written paths.

    json_dump additionally writes a .json twin (arrays keyed by column name)
    for every trajectory CSV.
    """
    if preset not in _RUNNERS:
        raise ConfigurationError(
            "unknown preset %r; choose one of: %s" % (preset, ", ".join(PRESETS))
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return list(_RUNNERS[preset](cfg, out, json_dump))

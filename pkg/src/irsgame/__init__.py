"""Evolutionary service selection in IRS-assisted wireless networks.

Pipeline: static Rayleigh channels per provider geometry (channel), SNR
maximization by alternating beamforming and surface phase alignment (phy),
population utilities and replicator dynamics over service groups (game),
fixed-step ODE/DDE integration plus a Picard cross-check (dynamics), and
reproducible experiment presets with CSV output (experiments, cli).
"""

from .channel import (
    ChannelSet,
    PathLossModel,
    Position,
    complex_rayleigh,
    generate_channels,
    link_channel,
    path_loss_linear,
)
from .config import (
    ScenarioConfig,
    SpConfig,
    SweepGrids,
    config_to_text,
    dbm_to_watt,
    default_config,
    load_config,
    parse_config,
    reduced_config,
    save_config,
    with_scalar_overrides,
)
from .dynamics import HistoryBuffer, IntegratorSpec, Trajectory, integrate_dde, integrate_ode, picard_solve
from .errors import (
    ConfigurationError,
    NonConvergenceError,
    NumericalDriftError,
    NumericError,
    UnsupportedScenarioError,
)
from .game import (
    Equilibrium,
    PopulationState,
    ServiceIndex,
    UtilityParams,
    UtilityVector,
    average_utility,
    delayed_replicator_field,
    detect_equilibrium,
    expected_rate,
    make_utilities,
    replicator_field,
    stability_bound,
    utility,
)
from .phy import Beamformer, PhaseShiftVector, ServiceLink, build_all_links, compute_snr, optimize_link
from .experiments import PRESETS, SimulationResult, emit_csv, run_experiment, simulate, trajectory_json

__version__ = "0.1.0"

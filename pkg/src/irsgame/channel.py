"""Geometry, path loss and Rayleigh channel generation.

All links follow a log-distance power law referenced to 1 m, with independent
complex Gaussian small-scale fading on every entry.  Channels are static per
scenario: one realization is drawn per (provider, link type) from a counter
based sub-seed of the scenario seed, and every group served by that provider
reuses the same realization scaled by its own geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericError

# sub-seed discriminators for the three link types of one provider
_LINK_DIRECT = 0
_LINK_BS_IRS = 1
_LINK_IRS_USER = 2


@dataclass(frozen=True)
class Position:
    """A point in the 2-D deployment plane, coordinates in meters."""

    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return float(np.hypot(self.x - other.x, self.y - other.y))


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss: gain(d) = g0 * (d / d0) ** (-alpha).

    g0 is the linear gain at the reference distance d0.  Each link type
    carries its own exponent; the direct base-station/user path is heavily
    obstructed while the two reflected hops see near free-space conditions.
    """

    pl0_db: float = -30.0  # reference gain at d0, in dB
    d0: float = 1.0  # reference distance, meters
    alpha_direct: float = 6.0
    alpha_bs_irs: float = 2.0
    alpha_irs_user: float = 2.0

    def __post_init__(self):
        if self.d0 <= 0:
            raise ConfigurationError("pathloss.d0 must be positive, got %r" % (self.d0,))
        for name in ("alpha_direct", "alpha_bs_irs", "alpha_irs_user"):
            if getattr(self, name) < 0:
                raise ConfigurationError("pathloss.%s must be non-negative" % name)


def path_loss_linear(d: float, alpha: float, model: PathLossModel) -> float:
    """Linear power gain of a link of length d with exponent alpha.

    Args:
        d: link distance in meters, must be positive.
        alpha: path loss exponent.
        model: reference gain / distance parameters.

    Returns:
        Dimensionless power gain 10**(pl0_db/10) * (d/d0)**(-alpha).
    """
    if d <= 0:
        raise ConfigurationError("link distance must be positive, got %r" % (d,))
    return 10.0 ** (model.pl0_db / 10.0) * (d / model.d0) ** (-alpha)


def complex_rayleigh(shape, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance circularly symmetric complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def link_channel(d: float, alpha: float, model: PathLossModel, shape, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh-faded channel entries for one link.

    Every entry is sqrt(gain(d)) * CN(0, 1), so the mean entry power equals
    the linear path gain.
    """
    return np.sqrt(path_loss_linear(d, alpha, model)) * complex_rayleigh(shape, rng)


@dataclass
class ChannelSet:
    """The three channels seen by one group: direct, BS-to-IRS and IRS-to-user.

    Shapes: h_direct (L,), g_bs_irs (K, L), h_irs_user (K,) where L is the
    provider's antenna count and K its full IRS element count.  Reduced
    surface subsets are the leading rows/entries (see subset()).
    """

    h_direct: np.ndarray
    g_bs_irs: np.ndarray
    h_irs_user: np.ndarray

    def __post_init__(self):
        self.h_direct = np.asarray(self.h_direct, dtype=complex)
        self.g_bs_irs = np.asarray(self.g_bs_irs, dtype=complex)
        self.h_irs_user = np.asarray(self.h_irs_user, dtype=complex)
        if self.h_direct.ndim != 1 or self.g_bs_irs.ndim != 2 or self.h_irs_user.ndim != 1:
            raise ConfigurationError("channel arrays have wrong rank")
        k, l = self.g_bs_irs.shape
        if self.h_direct.shape[0] != l:
            raise ConfigurationError(
                "h_direct has %d entries but g_bs_irs has %d columns" % (self.h_direct.shape[0], l)
            )
        if self.h_irs_user.shape[0] != k:
            raise ConfigurationError(
                "h_irs_user has %d entries but g_bs_irs has %d rows" % (self.h_irs_user.shape[0], k)
            )
        for name in ("h_direct", "g_bs_irs", "h_irs_user"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise NumericError("non-finite entries in %s" % name)

    @property
    def n_antennas(self) -> int:
        return self.h_direct.shape[0]

    @property
    def n_elements(self) -> int:
        return self.h_irs_user.shape[0]

    def subset(self, n_elements: int) -> "ChannelSet":
        """The channel set restricted to the first n_elements IRS elements."""
        if not 0 <= n_elements <= self.n_elements:
            raise ConfigurationError(
                "subset size %d outside [0, %d]" % (n_elements, self.n_elements)
            )
        return ChannelSet(
            h_direct=self.h_direct,
            g_bs_irs=self.g_bs_irs[:n_elements],
            h_irs_user=self.h_irs_user[:n_elements],
        )

    def to_jsonable(self) -> dict:
        """Arrays as nested [re, im] lists, for debug dumps."""

        def c2l(a):
            return np.stack([a.real, a.imag], axis=-1).tolist()

        return {
            "h_direct": c2l(self.h_direct),
            "g_bs_irs": c2l(self.g_bs_irs),
            "h_irs_user": c2l(self.h_irs_user),
        }


def _link_rng(seed: int, sp_index: int, link_code: int) -> np.random.Generator:
    # splitting rule: PCG64 seeded by SeedSequence(entropy=[seed, provider, link])
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, sp_index, link_code])))


def generate_channels(cfg, seed: int | None = None) -> dict[int, ChannelSet]:
    """Draw the static channel realization for every group of a scenario.

    The small-scale fading of each provider is drawn once per link type from
    its own sub-seeded generator and shared by all of that provider's groups;
    each group's entries are scaled by the path gain of its own geometry.
    Groups of one provider with identical geometry therefore receive
    identical channel sets.

    Args:
        cfg: scenario configuration (providers, geometry, path loss model).
        seed: root seed; defaults to cfg.seed.

    Returns:
        Mapping from flat group index (0-based) to ChannelSet.
    """
    root = int(cfg.seed if seed is None else seed)
    model = cfg.pathloss
    fading = []
    for m, sp in enumerate(cfg.sps, start=1):
        for pos_name in ("bs_position", "irs_position", "user_position"):
            if getattr(sp, pos_name) is None:
                raise ConfigurationError("sp%d.%s is not set" % (m, pos_name))
        l, k = sp.antennas, sp.irs_elements
        fading.append(
            (
                complex_rayleigh((l,), _link_rng(root, m, _LINK_DIRECT)),
                complex_rayleigh((k, l), _link_rng(root, m, _LINK_BS_IRS)),
                complex_rayleigh((k,), _link_rng(root, m, _LINK_IRS_USER)),
            )
        )
    out: dict[int, ChannelSet] = {}
    for g, svc in enumerate(cfg.service_indices()):
        sp = cfg.sps[svc.sp - 1]
        z_d, z_g, z_u = fading[svc.sp - 1]
        d_direct = sp.bs_position.distance_to(sp.user_position)
        d_bs_irs = sp.bs_position.distance_to(sp.irs_position)
        d_irs_user = sp.irs_position.distance_to(sp.user_position)
        out[g] = ChannelSet(
            h_direct=np.sqrt(path_loss_linear(d_direct, model.alpha_direct, model)) * z_d,
            g_bs_irs=np.sqrt(path_loss_linear(d_bs_irs, model.alpha_bs_irs, model)) * z_g,
            h_irs_user=np.sqrt(path_loss_linear(d_irs_user, model.alpha_irs_user, model)) * z_u,
        )
    return out

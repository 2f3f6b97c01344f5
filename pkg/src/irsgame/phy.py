"""Beamforming, phase shifts and SNR for one provider/service link.

The received signal combines the direct path with the surface-reflected
path, y = (h^H + h_iu^H Theta^H G) w.  SNR is maximized by alternating two
closed-form steps: maximum ratio transmission on the effective channel for a
fixed surface configuration, then per-element phase alignment of every
reflected term with the direct term for a fixed beam.  Both steps never
decrease the SNR, so the iteration climbs monotonically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import ChannelSet
from .config import dbm_to_watt
from .errors import ConfigurationError, NumericError
from .game import ServiceIndex

TWO_PI = 2.0 * np.pi


@dataclass
class PhaseShiftVector:
    """Per-element surface phases, radians in [0, 2*pi).

    The reflection coefficients exp(1j * alpha) all have unit modulus; the
    surface neither amplifies nor attenuates.
    """

    alphas: np.ndarray

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        if self.alphas.ndim != 1:
            raise ConfigurationError("phase vector must be one-dimensional")
        if np.any(self.alphas < 0.0) or np.any(self.alphas >= TWO_PI):
            raise ConfigurationError("phases must lie in [0, 2*pi)")

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(1j * self.alphas)

    def __len__(self) -> int:
        return len(self.alphas)


@dataclass
class Beamformer:
    """Transmit beam w with ||w||^2 equal to the radiated power in watts."""

    w: np.ndarray
    power_w: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex)
        if self.w.ndim != 1:
            raise ConfigurationError("beamforming vector must be one-dimensional")
        if self.power_w <= 0:
            raise ConfigurationError("transmit power must be positive")
        norm_sq = float(np.vdot(self.w, self.w).real)
        if abs(norm_sq - self.power_w) > 1e-9 * self.power_w:
            raise ConfigurationError(
                "||w||^2 = %r does not match the power budget %r" % (norm_sq, self.power_w)
            )


@dataclass
class ServiceLink:
    """An optimized link: beam, surface phases and the resulting SNR."""

    service: Optional[ServiceIndex]
    beam: Beamformer
    phases: PhaseShiftVector
    snr: float


def compute_snr(
    ch: ChannelSet,
    beam: Beamformer,
    phases: PhaseShiftVector,
    bandwidth: float,
    noise_var: float,
) -> float:
    """SNR of the combined direct plus reflected link.

    snr = |(h^H + h_iu^H Theta^H G) w|^2 / (bandwidth * noise_var).  The
    phase vector may cover a leading subset of the surface; elements beyond
    it do not reflect.
    """
    if bandwidth <= 0 or noise_var <= 0:
        raise ConfigurationError("bandwidth and noise variance must be positive")
    k = len(phases)
    if k > ch.n_elements:
        raise ConfigurationError(
            "phase vector covers %d elements but the surface has %d" % (k, ch.n_elements)
        )
    if len(beam.w) != ch.n_antennas:
        raise ConfigurationError(
            "beam has %d entries but the BS has %d antennas" % (len(beam.w), ch.n_antennas)
        )
    eff = np.conj(ch.h_direct)
    if k:
        eff = eff + (np.conj(ch.h_irs_user[:k]) * np.conj(phases.coefficients)) @ ch.g_bs_irs[:k]
    amp = eff @ beam.w
    return float(abs(amp) ** 2 / (bandwidth * noise_var))


def _mrt(eff_conj: np.ndarray, power_w: float) -> np.ndarray:
    """Maximum ratio beam for the effective row channel eff_conj = (h_eff)^H."""
    norm = np.linalg.norm(eff_conj)
    if norm == 0.0:
        w = np.zeros(len(eff_conj), dtype=complex)
        w[0] = 1.0
        return np.sqrt(power_w) * w
    return np.sqrt(power_w) * np.conj(eff_conj) / norm


def optimize_link(
    ch: ChannelSet,
    power_w: float,
    bandwidth: float,
    noise_var: float,
    tol: float = 1e-6,
    max_iters: int = 100,
    service: ServiceIndex | None = None,
    trace: list | None = None,
) -> ServiceLink:
    """Alternating beam / phase optimization of one link.

    Starts from all-zero phases and stops once the relative SNR improvement
    of a full round falls below tol, or after max_iters rounds.  An optional
    trace list collects the SNR after every half step (beam update, then
    phase update) for monotonicity checks.

    Returns a ServiceLink whose cached snr field equals compute_snr for the
    returned beam and phases.
    """
    if power_w <= 0 or tol <= 0 or max_iters < 1:
        raise ConfigurationError("power, tol and max_iters must be positive")
    if not (np.all(np.isfinite(ch.h_direct)) and np.all(np.isfinite(ch.g_bs_irs)) and np.all(np.isfinite(ch.h_irs_user))):
        raise NumericError("channel entries must be finite")
    alphas = np.zeros(ch.n_elements)
    snr = -np.inf
    beam = None
    for _ in range(max_iters):
        phases = PhaseShiftVector(alphas)
        theta_conj = np.conj(phases.coefficients)
        eff = np.conj(ch.h_direct)
        if len(alphas):
            eff = eff + (np.conj(ch.h_irs_user) * theta_conj) @ ch.g_bs_irs
        beam = Beamformer(_mrt(eff, power_w), power_w)
        if trace is not None:
            trace.append(compute_snr(ch, beam, phases, bandwidth, noise_var))
        # align every reflected term with the direct term's phase
        if len(alphas):
            a0 = np.conj(ch.h_direct) @ beam.w
            b = np.conj(ch.h_irs_user) * (ch.g_bs_irs @ beam.w)
            ref = np.angle(a0) if abs(a0) > 0.0 else 0.0
            alphas = np.mod(np.angle(b) - ref, TWO_PI)
            # mod can return the period itself when the argument is a tiny negative
            alphas[alphas >= TWO_PI] = 0.0
        phases = PhaseShiftVector(alphas)
        new_snr = compute_snr(ch, beam, phases, bandwidth, noise_var)
        if trace is not None:
            trace.append(new_snr)
        if new_snr == 0.0 and snr <= 0.0:
            snr = new_snr
            break
        if snr > -np.inf and new_snr - snr <= tol * abs(snr):
            snr = max(new_snr, snr)
            break
        snr = new_snr
    return ServiceLink(service=service, beam=beam, phases=PhaseShiftVector(alphas), snr=snr)


def build_all_links(cfg, channels: dict[int, ChannelSet], tol: float = 1e-6, max_iters: int = 100) -> dict:
    """Optimize every group's link of a scenario.

    Group (sp, subset k, power j) uses the first k * elements_per_module
    surface elements of its provider and the j-th power level.
    """
    links = {}
    for g, svc in enumerate(cfg.service_indices()):
        sp = cfg.sps[svc.sp - 1]
        n_active = svc.subset * sp.irs_elements_per_module
        links[g] = optimize_link(
            channels[g].subset(n_active),
            power_w=dbm_to_watt(sp.power_levels_dbm[svc.power_level - 1]),
            bandwidth=sp.bandwidth_mhz,
            noise_var=cfg.noise_var,
            tol=tol,
            max_iters=max_iters,
            service=svc,
        )
    return links

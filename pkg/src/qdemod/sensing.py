"""Position and velocity sensing maps onto normalized PM/FM parameters.

Multipass geometry: the beam reflects off the target M times at incidence
angle theta, so target motion x(t) modulates the output phase by
2 M cos(theta) * 2 pi x / lambda0.  The Fabry-Perot arrangement realises an
effective M = (1 + sqrt(R)) / (1 - sqrt(R)) at resonance, valid only for
narrowband modulation.  Inequality constraints from the paper-level "<<"
statements are operationalised with factor-10 margins and both sides are
reported so callers can re-judge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import SpectralDensity
from .qnoise import PhysicalConstants

MULTIPASS = "multipass"
FABRY_PEROT = "fabry_perot"

NARROWBAND_BETA = 0.1          # Fabry-Perot validity flag
INTERROGATION_MARGIN = 0.1     # lhs <= margin / b passes


@dataclass(frozen=True)
class SensorConfig:
    """Geometry plus target statistics for one sensing arrangement."""

    kind: str = MULTIPASS
    passes: float = 1.0                 # M (>= 1); derived for Fabry-Perot
    reflectivity: float | None = None   # R in [0, 1), Fabry-Perot only
    incidence: float = 0.0              # theta, rad; 0 for Fabry-Perot
    wavelength: float = 1.55e-6         # lambda0, m
    rms_position: float | None = None   # sqrt(<x^2>), m
    rms_velocity: float | None = None   # sqrt(<v^2>), m/s
    message_bandwidth: float = 1.0e3    # b, Hz
    cavity_length: float = 0.0          # L_cav, m
    constants: PhysicalConstants = PhysicalConstants()

    def __post_init__(self) -> None:
        if self.kind not in (MULTIPASS, FABRY_PEROT):
            raise ValueError(f"unknown sensor kind {self.kind!r}")
        if self.kind == MULTIPASS and self.passes < 1:
            raise ValueError("multipass sensor needs M >= 1")
        if self.kind == FABRY_PEROT:
            if self.reflectivity is None or not 0.0 <= self.reflectivity < 1.0:
                raise ValueError("Fabry-Perot needs reflectivity in [0, 1)")
            if self.incidence != 0.0:
                raise ValueError("Fabry-Perot operates at normal incidence")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")

    @property
    def carrier_frequency(self) -> float:
        return self.constants.c / self.wavelength

    @property
    def effective_passes(self) -> float:
        if self.kind == FABRY_PEROT:
            return fabry_perot_m(self.reflectivity)
        return self.passes

    @property
    def geometry_factor(self) -> float:
        """2 M cos(theta): phase per unit 2 pi x / lambda0."""
        return 2.0 * self.effective_passes * np.cos(self.incidence)


def fabry_perot_m(reflectivity: float) -> float:
    """Effective pass count at resonance: (1 + sqrt(R)) / (1 - sqrt(R))."""
    if not 0.0 <= reflectivity < 1.0:
        raise ValueError("reflectivity must lie in [0, 1)")
    root = np.sqrt(reflectivity)
    return float((1.0 + root) / (1.0 - root))


@dataclass(frozen=True)
class PositionParams:
    beta: float
    normalization: float        # divide x(t) by this to get the unit message
    narrowband_ok: bool         # beta < 0.1, required for Fabry-Perot use


def position_pm_params(cfg: SensorConfig) -> PositionParams:
    """PM index beta = 2 M cos(theta) * 2 pi sqrt(<x^2>) / lambda0; m = x/rms."""
    if cfg.rms_position is None:
        raise ValueError("rms_position required for position sensing")
    beta = cfg.geometry_factor * 2.0 * np.pi * cfg.rms_position / cfg.wavelength
    return PositionParams(float(beta), cfg.rms_position, bool(beta < NARROWBAND_BETA))


@dataclass(frozen=True)
class VelocityParams:
    deviation: float            # F, Hz
    beta: float                 # 2 F / b
    normalization: float        # divide -v(t) by this to get the unit message
    sign: float                 # message is sign * v / rms; sign = -1
    narrowband_ok: bool


def velocity_fm_params(cfg: SensorConfig) -> VelocityParams:
    """FM parameters: F = 2 M cos(theta) f0 sqrt(<v^2>) / c, beta = 2F/b.

    The unit message is m(t) = -v(t)/rms: a positive velocity lowers the
    instantaneous frequency.
    """
    if cfg.rms_velocity is None:
        raise ValueError("rms_velocity required for velocity sensing")
    f0 = cfg.carrier_frequency
    dev = cfg.geometry_factor * f0 * cfg.rms_velocity / cfg.constants.c
    beta = 2.0 * dev / cfg.message_bandwidth
    return VelocityParams(float(dev), float(beta), cfg.rms_velocity, -1.0,
                          bool(beta < NARROWBAND_BETA))


def interrogation_constraint(cfg: SensorConfig):
    """(lhs seconds, pass): total interrogation time vs the message time scale.

    lhs = 2 (M - 1) L_cav / (c cos(theta)); passes when lhs <= 0.1 / b.
    """
    m_eff = cfg.effective_passes
    lhs = 2.0 * (m_eff - 1.0) * cfg.cavity_length / (
        cfg.constants.c * np.cos(cfg.incidence))
    budget = INTERROGATION_MARGIN / cfg.message_bandwidth
    return float(lhs), bool(lhs <= budget)


def position_velocity_psd(s_v: SpectralDensity) -> SpectralDensity:
    """Position density S_x = S_v / (2 pi f)^2, DC bin excluded.

    The DC bin is set to zero and must be zero in the input (a velocity
    process with nonzero mean has no stationary position).
    """
    f = s_v.grid.freqs
    if s_v.values[0] != 0.0:
        raise ValueError("velocity density must vanish at DC")
    out = np.zeros_like(s_v.values)
    nz = f != 0
    out[nz] = s_v.values[nz] / (2.0 * np.pi * f[nz]) ** 2
    return SpectralDensity(s_v.grid, out, symmetric=s_v.symmetric)

"""Gaussian quadrature-noise models: coherent vacuum and broadband squeezed vacuum.

Units: the vacuum Wigner distribution has unit variance per sample per
quadrature (W0 ~ exp(-x^2/2 - y^2/2)), so every SNR formula holds with the
squeezed-quadrature density S2 = 1 for coherent states.  Squeezed vacuum with
parameter r and squeeze bandwidth B_s has quadrature densities
S1 = exp(+2r) and S2 = exp(-2r) inside |f| < B_s/2 and 1 outside,
equivalently covariances K1 = I - (1 - e^{2r}) Gamma and
K2 = I - (1 - e^{-2r}) Gamma with Gamma the brick-wall low-pass.  The
covariances are realised as circulant filters, never as dense matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import SpectralDensity, TimeGrid, color_noise
from .rng import stream

COHERENT = "coherent"
SQUEEZED_Z = "squeezed_z"
PHASE_SQUEEZED = "phase_squeezed"


@dataclass(frozen=True)
class PhysicalConstants:
    """Constants used only by the photon budget and the sensing maps."""

    h: float = 6.62607015e-34    # J s
    c: float = 299792458.0       # m/s
    f0: float = 1.935e14         # carrier, Hz (1550 nm)


@dataclass(frozen=True)
class NoiseModel:
    """Coherent or squeezed Gaussian quadrature statistics.

    alpha_mag is the per-mode mean amplitude |alpha|; r the squeeze
    parameter; squeeze_bandwidth B_s <= B (ignored for coherent).
    """

    kind: str
    alpha_mag: float
    r: float = 0.0
    squeeze_bandwidth: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (COHERENT, SQUEEZED_Z, PHASE_SQUEEZED):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.alpha_mag < 0:
            raise ValueError("|alpha| must be nonnegative")
        if self.kind == COHERENT:
            if self.r != 0.0:
                raise ValueError("coherent model must have r = 0")
        else:
            if self.r < 0:
                raise ValueError("squeeze parameter must be nonnegative")
            if self.squeeze_bandwidth is None or self.squeeze_bandwidth <= 0:
                raise ValueError("squeezed model needs a positive squeeze bandwidth")

    @property
    def squeezed(self) -> bool:
        return self.kind != COHERENT


@dataclass(frozen=True)
class QuadratureRecord:
    """One sampled realisation of the quadrature pair (x0, y0)."""

    grid: TimeGrid
    x0: np.ndarray
    y0: np.ndarray

    def __post_init__(self) -> None:
        for name in ("x0", "y0"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (self.grid.n_samples,):
                raise ValueError(f"{name} length must equal grid.n_samples")
            object.__setattr__(self, name, v)


def sample_vacuum(grid: TimeGrid, seed: int, trial: int = 0) -> QuadratureRecord:
    """Independent white unit-variance Gaussian quadratures."""
    rng = stream(seed, trial, 1)
    x0 = rng.standard_normal(grid.n_samples)
    y0 = rng.standard_normal(grid.n_samples)
    return QuadratureRecord(grid, x0, y0)


def squeezed_covariance_psds(model: NoiseModel, grid: TimeGrid):
    """(S1, S2): antisqueezed / squeezed quadrature densities on the grid."""
    if not model.squeezed:
        ones = np.ones(grid.n_samples)
        return (SpectralDensity(grid, ones), SpectralDensity(grid, ones.copy()))
    if model.squeeze_bandwidth > grid.bandwidth:
        raise ValueError("squeeze bandwidth exceeds the grid bandwidth")
    if model.squeeze_bandwidth == grid.bandwidth:  # B_s = B: Gamma = I
        gamma = np.ones(grid.n_samples, dtype=bool)
    else:
        gamma = np.abs(grid.freqs) < model.squeeze_bandwidth / 2.0
    s1 = np.where(gamma, np.exp(2.0 * model.r), 1.0)
    s2 = np.where(gamma, np.exp(-2.0 * model.r), 1.0)
    return (SpectralDensity(grid, s1), SpectralDensity(grid, s2))


def sample_squeezed(model: NoiseModel, grid: TimeGrid, seed: int, trial: int = 0) -> QuadratureRecord:
    """Stationary Gaussian quadratures with PSDs (S1, S2); x0 antisqueezed."""
    if not model.squeezed:
        return sample_vacuum(grid, seed, trial)
    s1, s2 = squeezed_covariance_psds(model, grid)
    rng = stream(seed, trial, 1)
    x0 = color_noise(rng, s1)
    y0 = color_noise(rng, s2)
    return QuadratureRecord(grid, x0, y0)


def lambda_parameter(model: NoiseModel, s_m_at_0: float,
                     n_photon: float | None = None) -> float:
    """Loop SNR parameter Lambda = 4 |alpha|^2 S_m(0) / S2(0).

    For a squeezed model with B_s equal to the message bandwidth and a fixed
    photon budget n_photon (photons per 1/b), pass n_photon to evaluate the
    budgeted form 4 (N - sinh^2 r) exp(2r) instead of using alpha_mag.
    """
    if not model.squeezed:
        return 4.0 * model.alpha_mag**2 * s_m_at_0
    if n_photon is not None:
        sh2 = np.sinh(model.r) ** 2
        if sh2 >= n_photon:
            raise ValueError("photon budget too small for the requested squeezing")
        return 4.0 * (n_photon - sh2) * np.exp(2.0 * model.r)
    return 4.0 * model.alpha_mag**2 * s_m_at_0 / np.exp(-2.0 * model.r)


def photon_budget(alpha_mag: float, r: float, bandwidth: float,
                  squeeze_bandwidth: float, message_bandwidth: float,
                  constants: PhysicalConstants = PhysicalConstants()):
    """(average power P, photons N per message correlation time 1/b).

    P = h f0 B |alpha|^2 + h f0 B_s sinh^2 r; N = P / (h f0 b).
    """
    hf0 = constants.h * constants.f0
    power = hf0 * bandwidth * alpha_mag**2 + hf0 * squeeze_bandwidth * np.sinh(r) ** 2
    n_photon = power / (hf0 * message_bandwidth)
    return power, n_photon


def alpha_for_lambda(lam: float, s_m_at_0: float, s2_at_0: float = 1.0) -> float:
    """|alpha| that realises a requested Lambda given S_m(0) and S2(0)."""
    return float(np.sqrt(lam * s2_at_0 / (4.0 * s_m_at_0)))

"""Bandlimited discrete-time foundations.

A uniform grid with bandwidth B and spacing 1/B carries every sequence in the
toolkit.  All sequences are treated as periodic on the grid (circular
convolution semantics), which makes stationarity exact and lets the Wiener
algebra diagonalise in the DFT basis.  Off-grid evaluation therefore uses the
periodised interpolation kernels, not the bare infinite-grid ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid: M_f points spaced 1/B starting at t0."""

    bandwidth: float
    n_samples: int = 4096
    t0: float = 0.0

    def __post_init__(self) -> None:
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if not _is_power_of_two(self.n_samples):
            raise ValueError("n_samples must be a power of two")

    @property
    def dt(self) -> float:
        return 1.0 / self.bandwidth

    @property
    def df(self) -> float:
        return self.bandwidth / self.n_samples

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_samples) * self.dt

    @property
    def freqs(self) -> np.ndarray:
        """Bin frequencies in Hz, numpy fft ordering (DC first)."""
        return np.fft.fftfreq(self.n_samples, self.dt)

    @property
    def span(self) -> float:
        return self.n_samples * self.dt


@dataclass(frozen=True)
class SampledEnvelope:
    """Complex baseband samples a_j = A(t_j) sqrt(dt) on a grid."""

    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n_samples,):
            raise ValueError("samples length must equal grid.n_samples")
        object.__setattr__(self, "samples", s)


@dataclass(frozen=True)
class SpectralDensity:
    """Nonnegative power density over the DFT bins of a grid.

    Normalisation: the per-sample variance of the process equals the mean of
    `values` over all bins, i.e. (1/B) * sum(values) * df.
    """

    grid: TimeGrid
    values: np.ndarray
    symmetric: bool = field(default=True)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_samples,):
            raise ValueError("values length must equal grid.n_samples")
        if np.any(v < 0):
            raise ValueError("spectral density must be nonnegative")
        object.__setattr__(self, "values", v)
        if self.symmetric:
            m = self.grid.n_samples
            idx = np.arange(m)
            if not np.allclose(v, v[(-idx) % m], rtol=0, atol=1e-12 * max(1.0, v.max())):
                raise ValueError("density of a real process must be even in f")

    @property
    def variance(self) -> float:
        return float(np.mean(self.values))


def sinc_kernel(x):
    """sin(pi x)/(pi x) with the removable singularity filled."""
    return np.sinc(x)


def periodized_sinc(x, n_samples: int):
    """Sum of sinc(x + m*M) over all integers m, for even M.

    Equals sin(pi x) / (M tan(pi x / M)); this is the interpolation kernel of
    the sampling theorem on an M-point circular grid.
    """
    m = n_samples
    if m % 2 != 0:
        raise ValueError("n_samples must be even")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xr = np.atleast_1d(x - m * np.round(x / m))  # reduce to [-M/2, M/2]
    out = np.ones_like(xr)
    away = np.abs(xr) >= 1e-9
    out[away] = np.sin(np.pi * xr[away]) / (m * np.tan(np.pi * xr[away] / m))
    return float(out[0]) if scalar else out.reshape(x.shape)


def reconstruct(env: SampledEnvelope, t) -> complex:
    """Envelope value sqrt(B) * sum_j a_j K(B (t - t_j)) at off-grid times.

    K is the periodised sinc, so in-band tones are reproduced exactly at any
    interior point; accuracy is only asserted away from the window edges.
    Raises ValueError outside the grid's time span.
    """
    g = env.grid
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    tv = np.atleast_1d(t)
    if np.any(tv < g.t0) or np.any(tv > g.t0 + g.span):
        raise ValueError("evaluation time outside the grid span")
    x = g.bandwidth * (tv[:, None] - g.times)  # in sample units
    k = periodized_sinc(x, g.n_samples)
    val = np.sqrt(g.bandwidth) * (k @ env.samples)
    return complex(val[0]) if scalar else val.reshape(t.shape)


def differentiator_kernel(n):
    """Ideal discrete differentiator taps: (-1)^n / n, and 0 at n = 0."""
    n = np.asarray(n)
    scalar = n.ndim == 0
    nv = np.atleast_1d(n)
    out = np.zeros(nv.shape, dtype=float)
    nz = nv != 0
    out[nz] = np.where(nv[nz] % 2 == 0, 1.0, -1.0) / nv[nz]
    return float(out[0]) if scalar else out.reshape(n.shape)


def periodized_differentiator(n_samples: int) -> np.ndarray:
    """Differentiator taps periodised onto an even M-point circle.

    Sum over m of d_{n + mM} = (-1)^n (pi/M) cot(pi n / M); circular
    convolution with these taps is the exact band-limited derivative
    (times dt) for every in-band bin.
    """
    m = n_samples
    if m % 2 != 0:
        raise ValueError("n_samples must be even")
    n = np.arange(m)
    taps = np.zeros(m)
    nz = n[1:]
    taps[1:] = np.where(nz % 2 == 0, 1.0, -1.0) * (np.pi / m) / np.tan(np.pi * nz / m)
    return taps


def differentiate(grid: TimeGrid, x: np.ndarray) -> np.ndarray:
    """Exact band-limited time derivative of a grid sequence (per second).

    Implemented as circular convolution with the periodised differentiator,
    evaluated in the frequency domain.
    """
    x = np.asarray(x)
    w = 2j * np.pi * grid.freqs
    # Nyquist bin has no defined sign; the periodised kernel maps it to 0.
    w[grid.n_samples // 2] = 0.0
    return np.fft.ifft(np.fft.fft(x) * w).real if np.isrealobj(x) else np.fft.ifft(np.fft.fft(x) * w)


def color_noise(rng: np.random.Generator, density: SpectralDensity) -> np.ndarray:
    """Stationary real Gaussian sequence with the given PSD (circulant exact)."""
    m = density.grid.n_samples
    white = rng.standard_normal(m)
    return np.fft.ifft(np.fft.fft(white) * np.sqrt(density.values)).real


def estimate_psd(x, grid: TimeGrid | None = None, segments: int = 1) -> SpectralDensity:
    """Averaged-periodogram PSD estimate.

    Each segment is demeaned, so the bin-mean of the estimate equals the
    per-segment sample variance exactly (Parseval).  Accepts a SampledEnvelope
    or a plain sequence plus its grid.
    """
    if isinstance(x, SampledEnvelope):
        grid = x.grid
        data = x.samples
    else:
        if grid is None:
            raise ValueError("grid required for a plain sequence")
        data = np.asarray(x)
    m = grid.n_samples
    if data.shape[-1] != m:
        raise ValueError("sequence length must equal grid.n_samples")
    if segments < 1 or m % segments != 0:
        raise ValueError("segments must be >= 1 and divide the grid length")
    seg_len = m // segments
    if seg_len < 8:
        raise ValueError("segment length below 8; use fewer segments")
    segs = data.reshape(segments, seg_len)
    segs = segs - segs.mean(axis=1, keepdims=True)
    p = np.abs(np.fft.fft(segs, axis=1)) ** 2 / seg_len
    values = p.mean(axis=0)
    seg_grid = TimeGrid(grid.bandwidth, seg_len, grid.t0)
    return SpectralDensity(seg_grid, values, symmetric=False)

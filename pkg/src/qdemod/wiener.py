"""MAP/Wiener filter synthesis on the circulant grid.

The optimum filter G, the causal closed-loop filter L' solving the discrete
Wiener-Hopf equation, the loop filter L and the delayed post-loop filter L''
are all synthesised per design.  Causal means tap support on lags
[0, M/2) of the M-point circle.

L' is computed exactly: the causal-constrained normal equations form a
symmetric positive-definite Toeplitz system (column = autocovariance taps of
U), solved by Levinson recursion, which drives the causal Wiener-Hopf
residual to rounding level even for brick-wall spectra.  The classical
construction L' = (1/X)[V/X*]_+ from the cepstral factor X is also provided;
on discontinuous (brick-wall) spectra its circular Gibbs wrap-around leaves
residuals around 1e-2 and it is kept as a cross-check for smooth spectra
only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_toeplitz

from .grids import SpectralDensity, TimeGrid
from .signals import (FM, MessageSpec, ModulationScheme, carson_bandwidth,
                      message_psd, phase_response)
from .qnoise import NoiseModel, squeezed_covariance_psds

CAUSAL_ENERGY_TOL = 1e-8


class FactorizationError(ValueError):
    pass


class LoopInstabilityError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, message: str, last_iterate: np.ndarray, iterations: int):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


def anticausal_energy_fraction(response: np.ndarray) -> float:
    """Energy fraction of the taps at negative lags (circle indices >= M/2)."""
    taps = np.fft.ifft(np.asarray(response))
    m = taps.size
    total = float(np.sum(np.abs(taps) ** 2))
    if total == 0.0:
        return 0.0
    return float(np.sum(np.abs(taps[m // 2:]) ** 2) / total)


@dataclass(frozen=True)
class FilterKernel:
    """Frequency response on the grid bins plus a measured causality flag."""

    grid: TimeGrid
    response: np.ndarray
    causal: bool = field(default=False)
    anticausal_fraction: float = field(default=0.0)

    def __post_init__(self) -> None:
        r = np.asarray(self.response, dtype=complex)
        if r.shape != (self.grid.n_samples,):
            raise ValueError("response length must equal grid.n_samples")
        object.__setattr__(self, "response", r)

    @classmethod
    def from_response(cls, grid: TimeGrid, response: np.ndarray) -> "FilterKernel":
        frac = anticausal_energy_fraction(response)
        return cls(grid, response, causal=frac < CAUSAL_ENERGY_TOL, anticausal_fraction=frac)

    def taps(self) -> np.ndarray:
        return np.fft.ifft(self.response)

    def apply(self, x: np.ndarray) -> np.ndarray:
        y = np.fft.ifft(np.fft.fft(np.asarray(x), axis=-1) * self.response, axis=-1)
        return y.real if np.isrealobj(x) else y

    def causal_taps(self) -> np.ndarray:
        """Real taps restricted to lags [0, M/2)."""
        t = self.taps().real.copy()
        t[self.grid.n_samples // 2:] = 0.0
        return t[: self.grid.n_samples // 2]


def optimum_filter(s_m: np.ndarray, h: np.ndarray, four_alpha_sq: float,
                   s2: np.ndarray, grid: TimeGrid) -> FilterKernel:
    """Noncausal MAP filter G = 4|a|^2 S_m H* / (4|a|^2 S_m |H|^2 + S2).

    Bins with no message power (including the FM DC bin) get their analytic
    limit G = 0.
    """
    s_m = np.asarray(s_m, float)
    s2 = np.asarray(s2, float)
    h = np.asarray(h, complex)
    if np.any(s2 <= 0):
        raise ValueError("S2 must be positive on every bin")
    num = four_alpha_sq * s_m * np.conj(h)
    den = four_alpha_sq * s_m * np.abs(h) ** 2 + s2
    g = np.zeros(grid.n_samples, dtype=complex)
    live = s_m * np.abs(h) ** 2 > 0
    g[live] = num[live] / den[live]
    return FilterKernel.from_response(grid, g)


def spectral_factorize(u: np.ndarray, grid: TimeGrid) -> FilterKernel:
    """Minimum-phase spectral factor X with |X(f)|^2 = U(f) exactly on bins.

    Real-cepstrum construction: fold the cepstrum of log sqrt(U) onto
    nonnegative lags and exponentiate.  Bins below the floor 1e-12 max(U)
    are clamped to it so brick-wall zeros stay finite; bins above it are
    untouched, keeping |X|^2 = U exact wherever U is alive (an additive
    floor would corrupt the small bins of wide-dynamic-range FM spectra).
    """
    u = np.asarray(u, dtype=float)
    m = grid.n_samples
    if u.shape != (m,):
        raise ValueError("U length must equal grid.n_samples")
    if np.all(u <= 0):
        raise FactorizationError("spectrum not positive after flooring")
    floored = np.maximum(u, 1e-12 * float(np.max(u)))
    ceps = np.fft.ifft(0.5 * np.log(floored))
    folded = np.zeros(m, dtype=complex)
    folded[0] = ceps[0]
    folded[1: m // 2] = 2.0 * ceps[1: m // 2]
    folded[m // 2] = ceps[m // 2]
    x = np.exp(np.fft.fft(folded))
    return FilterKernel.from_response(grid, x)


def wiener_hopf_residual(l_response: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    """max over causal lags of |(L * U - V) taps|, relative to max |V taps|."""
    r = np.fft.ifft(np.asarray(l_response) * np.asarray(u) - np.asarray(v))
    m = r.size
    scale = float(np.max(np.abs(np.fft.ifft(v))))
    if scale == 0.0:
        return float(np.max(np.abs(r[: m // 2])))
    return float(np.max(np.abs(r[: m // 2])) / scale)


def closed_loop_filter(u: np.ndarray, v: np.ndarray, grid: TimeGrid) -> FilterKernel:
    """Causal Wiener filter L' solving sum_{k>=0} L'_k U_{j-k} = V_j, j >= 0.

    Solved exactly on the circle by Levinson recursion on the symmetric
    Toeplitz normal equations restricted to lags [0, M/2).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    m = grid.n_samples
    ut = np.fft.ifft(u).real
    vt = np.fft.ifft(v).real
    half = m // 2
    col = ut[:half]
    taps = solve_toeplitz((col, col), vt[:half])
    full = np.zeros(m)
    full[:half] = taps
    response = np.fft.fft(full)
    # support is exactly causal by construction
    return FilterKernel(grid, response, causal=True, anticausal_fraction=0.0)


def causal_part_solution(u: np.ndarray, v: np.ndarray, grid: TimeGrid) -> FilterKernel:
    """Textbook L' = (1/X) [V/X*]_+ via the cepstral factor.

    Zeroes the anticausal taps of V/X* in the sample domain.  Accurate for
    smooth spectra; Gibbs-limited for brick walls (see module docstring).
    """
    x = spectral_factorize(u, grid).response
    w = np.fft.ifft(np.asarray(v) / np.conj(x))
    w[grid.n_samples // 2:] = 0.0
    response = np.fft.fft(w) / x
    return FilterKernel.from_response(grid, response)


@dataclass(frozen=True)
class LoopDesign:
    """Complete filter quadruple for one operating point.

    The consistency identities G = L'' L' exp(+i w d dt) and
    L' = 2|a| L / (1 + 2|a| L) hold per bin by construction.
    """

    grid: TimeGrid
    mod: ModulationScheme
    message: MessageSpec
    g: FilterKernel
    l_prime: FilterKernel
    l_loop: FilterKernel
    l_post: FilterKernel
    delay: int
    two_alpha: float
    s2: SpectralDensity
    s_m: np.ndarray
    h: np.ndarray
    u: np.ndarray
    v: np.ndarray
    wh_residual: float

    @property
    def four_alpha_sq(self) -> float:
        return self.two_alpha**2


def default_delay(grid: TimeGrid, message_bandwidth: float) -> int:
    """Post-loop delay: 8 message correlation times, in samples."""
    return 8 * int(np.ceil(grid.bandwidth / message_bandwidth))


def loop_and_postloop(l_prime: FilterKernel, g: FilterKernel, two_alpha: float,
                      delay: int, min_loop_margin: float = 1e-6):
    """Loop filter L = L'/(2|a|(1-L')) and delayed post-loop L'' = G e^{-iwd}/L'."""
    if delay < 0:
        raise ValueError("delay must be nonnegative")
    grid = l_prime.grid
    lp = l_prime.response
    margin = np.min(np.abs(1.0 - lp))
    if margin < min_loop_margin:
        raise LoopInstabilityError(
            f"|1 - L'| reaches {margin:.3e}; the closed loop would be unstable")
    l_resp = lp / (two_alpha * (1.0 - lp))
    l_loop = FilterKernel.from_response(grid, l_resp)
    shift = np.exp(-2j * np.pi * grid.freqs * delay * grid.dt)
    post = np.zeros(grid.n_samples, dtype=complex)
    live = np.abs(g.response) > 0
    post[live] = g.response[live] * shift[live] / lp[live]
    l_post = FilterKernel.from_response(grid, post)
    return l_loop, l_post


def design_loop(message: MessageSpec, mod: ModulationScheme, alpha_mag: float,
                noise: NoiseModel | None = None, delay: int | None = None) -> LoopDesign:
    """Synthesise the full {G, L', L, L''} quadruple for one operating point."""
    grid = message.grid
    s_m = message_psd(message, drop_dc=(mod.kind == FM)).values
    h = phase_response(mod, grid)
    if noise is not None and noise.squeezed:
        _, s2_density = squeezed_covariance_psds(noise, grid)
    else:
        s2_density = SpectralDensity(grid, np.ones(grid.n_samples))
    s2 = s2_density.values
    fa2 = 4.0 * alpha_mag**2
    v = fa2 * s_m * np.abs(h) ** 2
    u = v + s2
    g = optimum_filter(s_m, h, fa2, s2, grid)
    l_prime = closed_loop_filter(u, v, grid)
    if delay is None:
        delay = default_delay(grid, message.bandwidth)
    l_loop, l_post = loop_and_postloop(l_prime, g, 2.0 * alpha_mag, delay)
    residual = wiener_hopf_residual(l_prime.response, u, v)
    if residual > 1e-6:
        raise FactorizationError(
            f"causal Wiener-Hopf residual {residual:.3e} exceeds 1e-6")
    return LoopDesign(
        grid=grid, mod=mod, message=message, g=g, l_prime=l_prime,
        l_loop=l_loop, l_post=l_post, delay=delay, two_alpha=2.0 * alpha_mag,
        s2=s2_density, s_m=s_m, h=h, u=u, v=v, wh_residual=residual,
    )


def linearized_map_estimate(design: LoopDesign, phi: np.ndarray) -> np.ndarray:
    """m_hat = G . phi for an effective phase record phi = phibar + z'/2|a|."""
    return design.g.apply(np.asarray(phi, dtype=float))


def predicted_error_spectrum(design: LoopDesign) -> np.ndarray:
    """Per-bin error density S_m S2 / (4|a|^2 S_m |H|^2 + S2), limits at dead bins."""
    num = design.s_m * design.s2.values
    out = np.zeros(design.grid.n_samples)
    live = num > 0
    out[live] = num[live] / design.u[live]
    return out


def nonlinear_map_fixed_point(message: MessageSpec, mod: ModulationScheme,
                              two_alpha: float, a: np.ndarray,
                              init: np.ndarray | None = None,
                              damping: float = 0.5, tol: float = 1e-9,
                              max_iter: int = 10000):
    """Damped fixed-point solve of the exact MAP equation m = 2|a| K_m H^T p(m).

    p(m) = -i (a e^{-i phi} - a* e^{i phi}), phi = H m.  The iteration is run
    in the preconditioned form m <- (1-g) m + g G (H m + p(m)/2|a|), which has
    the same fixed points as the raw equation but contracts even when
    beta^2 Lambda >> 1 (the raw Picard map has spectral radius ~ beta^2 Lambda
    and diverges).  Needs the full complex field record a (oracle mode).

    Returns (estimate, iterations).  Raises NonConvergenceError carrying the
    last iterate if max_iter is exhausted.
    """
    grid = message.grid
    a = np.asarray(a, dtype=complex)
    s_m = message_psd(message, drop_dc=(mod.kind == FM)).values
    h = phase_response(mod, grid)
    fa2 = two_alpha**2
    g = optimum_filter(s_m, h, fa2, np.ones(grid.n_samples), grid).response

    def phase_of(m):
        return np.fft.ifft(np.fft.fft(m) * h).real

    if init is None:
        # linearised estimate from the record phase (oracle mode has the full
        # complex field); low-pass to the Carson band first so the per-sample
        # angle noise cannot derail the unwrap
        half = min(carson_bandwidth(mod.beta, message.bandwidth),
                   0.499 * grid.bandwidth)
        mask = np.abs(grid.freqs) <= half
        a_lp = np.fft.ifft(np.fft.fft(a) * mask)
        phi0 = np.unwrap(np.angle(a_lp))
        init = np.fft.ifft(np.fft.fft(phi0) * g).real
    m = np.asarray(init, dtype=float).copy()
    for it in range(1, max_iter + 1):
        phi = phase_of(m)
        p = 2.0 * np.imag(a * np.exp(-1j * phi))
        target = np.fft.ifft(np.fft.fft(phi + p / two_alpha) * g).real
        new = (1.0 - damping) * m + damping * target
        delta = float(np.max(np.abs(new - m)))
        m = new
        if delta < tol:
            return m, it
    raise NonConvergenceError("MAP fixed point did not converge", m, max_iter)


def dump_design(design: LoopDesign, path) -> None:
    """Plain-text spectrum dump: bin, frequency, complex response per filter."""
    g = design.grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# loop design dump\n")
        fh.write(f"# n_samples = {g.n_samples}, bandwidth = {g.bandwidth!r}, "
                 f"delay = {design.delay}, two_alpha = {design.two_alpha!r}\n")
        fh.write("# bin freq G_re G_im Lp_re Lp_im L_re L_im Lpp_re Lpp_im\n")
        f = g.freqs
        rows = zip(design.g.response, design.l_prime.response,
                   design.l_loop.response, design.l_post.response)
        for k, (gr, lp, ll, lq) in enumerate(rows):
            fh.write(f"{k} {f[k]:.9e} {gr.real:.17e} {gr.imag:.17e} "
                     f"{lp.real:.17e} {lp.imag:.17e} {ll.real:.17e} {ll.imag:.17e} "
                     f"{lq.real:.17e} {lq.imag:.17e}\n")

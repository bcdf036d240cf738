"""Exact truncated-Fock-space oracle.

Dense-matrix implementations of the canonical phase density, the phase POVM
resolution, the Pegg-Barnett exponential-phase operator, the
instantaneous-frequency operator, and the 1-D lattice fluid-velocity
commutator check.  Everything here is an oracle for the rest of the toolkit,
not a performance layer: dimensions are capped at DENSE_BUDGET.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma

import numpy as np

from .grids import differentiator_kernel

DENSE_BUDGET = 4096


class ResourceBudgetError(ValueError):
    pass


class TruncationError(ValueError):
    pass


def _check_dim(dim: int) -> None:
    if dim > DENSE_BUDGET:
        raise ResourceBudgetError(f"dense dimension {dim} exceeds budget {DENSE_BUDGET}")


@dataclass(frozen=True)
class TruncatedState:
    """Normalised coefficient tensor C[n1, ..., nJ] over number states."""

    amplitudes: np.ndarray  # shape (n_max+1,) * modes

    def __post_init__(self) -> None:
        c = np.asarray(self.amplitudes, dtype=complex)
        _check_dim(c.size)
        norm = np.sqrt(np.sum(np.abs(c) ** 2))
        if norm == 0:
            raise ValueError("state must be nonzero")
        object.__setattr__(self, "amplitudes", c / norm)

    @property
    def modes(self) -> int:
        return self.amplitudes.ndim

    @property
    def n_max(self) -> int:
        return self.amplitudes.shape[0] - 1


@dataclass(frozen=True)
class ModeOperator:
    """Dense operator with numerically verified structure flags."""

    matrix: np.ndarray
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        _check_dim(m.shape[0])
        object.__setattr__(self, "matrix", m)
        if self.hermitian and herm_defect(m) > 1e-12:
            raise ValueError("operator flagged hermitian fails the check")
        if self.unitary and unitary_defect(m) > 1e-12:
            raise ValueError("operator flagged unitary fails the check")


def herm_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def unitary_defect(m: np.ndarray) -> float:
    eye = np.eye(m.shape[0])
    return float(np.max(np.abs(m.conj().T @ m - eye)))


def coherent_coeffs(alpha: complex, n_max: int) -> TruncatedState:
    """Single-mode coherent state C_n = e^{-|a|^2/2} a^n / sqrt(n!), renormalised.

    Requires n_max >= |a|^2 + 10 |a| + 20 so the truncated tail is below
    1e-12.
    """
    a2 = abs(alpha) ** 2
    need = a2 + 10.0 * abs(alpha) + 20.0
    if alpha != 0 and n_max < need:  # the vacuum has no tail at any cutoff
        raise TruncationError(f"n_max = {n_max} below the tail rule {need:.1f}")
    n = np.arange(n_max + 1)
    log_fact = np.array([lgamma(k + 1.0) for k in n])
    mag = np.exp(-a2 / 2.0 + n * np.log(abs(alpha)) - 0.5 * log_fact) if alpha != 0 else None
    if alpha == 0:
        c = np.zeros(n_max + 1, dtype=complex)
        c[0] = 1.0
        return TruncatedState(c)
    phase = np.exp(1j * n * np.angle(alpha))
    return TruncatedState(mag * phase)


def product_state(*modes: TruncatedState) -> TruncatedState:
    """Tensor product of single-mode states."""
    c = modes[0].amplitudes
    for st in modes[1:]:
        c = np.tensordot(c, st.amplitudes, axes=0)
    return TruncatedState(c)


def phase_grid(points: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(points) / points


def canonical_phase_density(state: TruncatedState, points: int) -> np.ndarray:
    """Canonical phase density |sum_n C[n] e^{-i n.phi}|^2 / (2 pi)^J.

    Sampled on the uniform periodic phase grid of `points` points per mode
    (shape (points,)*J); the trapezoid weight (2 pi / points)^J integrates it
    to one exactly (the density is a trigonometric polynomial of per-mode
    degree n_max, so the rule is spectrally exact for points > 2 n_max).
    Requires points >= 8 (n_max + 1).
    """
    n_max = state.n_max
    if points < 8 * (n_max + 1):
        raise ValueError("phase grid too coarse; need points >= 8 (n_max + 1)")
    modes = state.modes
    padded = np.zeros((points,) * modes, dtype=complex)
    padded[tuple(slice(0, n_max + 1) for _ in range(modes))] = state.amplitudes
    # forward FFT kernel e^{-i n phi_l} with phi_l = 2 pi l / points
    amp = np.fft.fftn(padded)
    return np.abs(amp) ** 2 / (2.0 * np.pi) ** modes


def density_weight(points: int, modes: int) -> float:
    """Quadrature weight per phase-grid node."""
    return (2.0 * np.pi / points) ** modes


def phase_mean_and_variance(density: np.ndarray, points: int):
    """Circular-window mean and variance of a single-mode density around 0."""
    phi = phase_grid(points)
    phi = np.where(phi > np.pi, phi - 2.0 * np.pi, phi)  # wrap to (-pi, pi]
    w = density_weight(points, 1)
    mean = float(np.sum(phi * density) * w)
    var = float(np.sum((phi - mean) ** 2 * density) * w)
    return mean, var


def phase_shift(state: TruncatedState, theta: float) -> TruncatedState:
    """Apply exp(i theta n) per mode: translates the canonical density by theta."""
    c = state.amplitudes
    for axis in range(state.modes):
        n = np.arange(c.shape[axis])
        shape = [1] * state.modes
        shape[axis] = c.shape[axis]
        c = c * np.exp(1j * theta * n).reshape(shape)
    return TruncatedState(c)


def povm_resolution_check(n_max: int, points: int) -> float:
    """max-norm residual of the phase-POVM completeness sum on the grid.

    Quadrature of |phi><phi| over the periodic grid gives the matrix with
    entries (1/points) sum_l e^{i (n - n') phi_l}, which equals the identity
    exactly whenever points > n_max.
    """
    if points < 8 * (n_max + 1):
        raise ValueError("phase grid too coarse; need points >= 8 (n_max + 1)")
    phi = phase_grid(points)
    n = np.arange(n_max + 1)
    kernel = np.exp(1j * np.outer(n, phi))  # <n|phi> up to normalisation
    mat = kernel @ kernel.conj().T / points
    return float(np.max(np.abs(mat - np.eye(n_max + 1))))


def number_operator(s: int) -> ModeOperator:
    return ModeOperator(np.diag(np.arange(s + 1.0)).astype(complex), hermitian=True)


def pegg_barnett_unitary(s: int, phi0: float = 0.0) -> ModeOperator:
    """exp(i phi_hat) = sum_{n=1}^{s} |n-1><n| + e^{i (s+1) phi0} |s><0|."""
    if s < 1:
        raise ValueError("need s >= 1")
    u = np.zeros((s + 1, s + 1), dtype=complex)
    for n in range(1, s + 1):
        u[n - 1, n] = 1.0
    u[s, 0] = np.exp(1j * (s + 1) * phi0)
    return ModeOperator(u, unitary=True)


def pegg_barnett_commutator_residual(s: int, phi0: float = 0.0) -> float:
    """max-norm of [exp(i phi), n] - (1 - (s+1)|s><s|) exp(i phi)."""
    e = pegg_barnett_unitary(s, phi0).matrix
    n = number_operator(s).matrix
    lhs = e @ n - n @ e
    proj = np.zeros_like(e)
    proj[s, s] = 1.0
    rhs = (np.eye(s + 1) - (s + 1) * proj) @ e
    return float(np.max(np.abs(lhs - rhs)))


def _embed(op: np.ndarray, mode: int, modes: int, dim: int) -> np.ndarray:
    """Tensor op into slot `mode` of a J-mode space (identity elsewhere)."""
    out = np.array([[1.0 + 0j]])
    for j in range(modes):
        out = np.kron(out, op if j == mode else np.eye(dim))
    return out


def _sin_phase_difference(e_j: np.ndarray, e_k: np.ndarray) -> np.ndarray:
    """sin(phi_j - phi_k) = (E_j E_k^+ - H.c.)/(2i) for embedded unitaries."""
    a = e_j @ e_k.conj().T
    return (a - a.conj().T) / 2j


def instantaneous_frequency_operator(modes: int, s: int, dt: float,
                                     phi0: float = 0.0) -> list:
    """Hermitian operators F_j = (1/2 pi dt) sum_k d_{j-k} sin(phi_j - phi_k)."""
    if modes > 3 or s > 4:
        raise ResourceBudgetError("instantaneous-frequency oracle capped at J <= 3, s <= 4")
    dim = s + 1
    _check_dim(dim**modes)
    single = pegg_barnett_unitary(s, phi0).matrix
    embedded = [_embed(single, j, modes, dim) for j in range(modes)]
    out = []
    for j in range(modes):
        total = np.zeros((dim**modes, dim**modes), dtype=complex)
        for k in range(modes):
            if k == j:
                continue
            total += differentiator_kernel(j - k) * _sin_phase_difference(
                embedded[j], embedded[k])
        out.append(ModeOperator(total / (2.0 * np.pi * dt), hermitian=True))
    return out


@dataclass(frozen=True)
class FluidCommutatorReport:
    """Residuals of the lattice velocity-number commutation relation."""

    max_residual: float          # over site pairs j != j'
    projector_bound: float       # norm budget of the dropped (N+1)|N><N| terms
    projected_residual: float    # after restriction to occupations < N
    diagonal_identity: float     # [v_j, sum_j' n_j'] residual (number conservation)


def fluid_velocity_commutator_check(sites: int, bosons: int, dx: float = 1.0,
                                    phi0: float = 0.0) -> FluidCommutatorReport:
    """Verify [v_j, n_j'] ~ -i D_{j-j'} cos(phi_j' - phi_j) on a 1-D chain.

    Per-site cutoff equals the boson number N; hbar/m = 1.  The relation is
    checked for distinct sites, where the exact commutator differs from the
    right-hand side only by the dropped (N+1)|N><N| projector terms; the
    difference is bounded by the propagated projector norm and vanishes
    exactly on the subspace with every site occupation below N.  At j' = j
    the right-hand side degenerates (D_0 = 0) while number conservation
    forces [v_j, n_j] = -sum_{j' != j} [v_j, n_j']; that identity is
    reported instead.
    """
    if sites > 3 or bosons > 3:
        raise ResourceBudgetError("fluid oracle capped at 3 sites, 3 bosons")
    if sites < 1 or bosons < 1:
        raise ValueError("need at least one site and one boson")
    n_cut = bosons
    dim = n_cut + 1
    total_dim = dim**sites
    _check_dim(total_dim)

    single_e = pegg_barnett_unitary(n_cut, phi0).matrix
    single_n = number_operator(n_cut).matrix
    e_ops = [_embed(single_e, j, sites, dim) for j in range(sites)]
    n_ops = [_embed(single_n, j, sites, dim) for j in range(sites)]

    def grad(j, jp):
        return differentiator_kernel(j - jp) / dx

    velocity = []
    for j in range(sites):
        v = np.zeros((total_dim, total_dim), dtype=complex)
        for jp in range(sites):
            if jp == j:
                continue
            v += grad(j, jp) * _sin_phase_difference(e_ops[jp], e_ops[j])
        velocity.append(v)

    # projector onto states with every site occupation < N
    keep = np.ones(total_dim, dtype=bool)
    occ = np.arange(dim)
    for j in range(sites):
        site_occ = _embed(np.diag(occ).astype(complex), j, sites, dim).diagonal().real
        keep &= site_occ < n_cut
    p_sub = np.diag(keep.astype(float))

    max_resid = 0.0
    max_bound = 0.0
    max_proj = 0.0
    for j in range(sites):
        for jp in range(sites):
            if jp == j:
                continue
            comm = velocity[j] @ n_ops[jp] - n_ops[jp] @ velocity[j]
            cos = (e_ops[jp] @ e_ops[j].conj().T + e_ops[j] @ e_ops[jp].conj().T) / 2.0
            rhs = -1j * grad(j, jp) * cos
            resid = comm - rhs
            norm = float(np.linalg.norm(resid, 2))
            bound = abs(grad(j, jp)) * (n_cut + 1.0)
            proj = float(np.linalg.norm(p_sub @ resid @ p_sub, 2))
            max_resid = max(max_resid, norm)
            max_bound = max(max_bound, bound)
            max_proj = max(max_proj, proj)

    diag = 0.0
    for j in range(sites):
        total = np.zeros((total_dim, total_dim), dtype=complex)
        for jp in range(sites):
            total += velocity[j] @ n_ops[jp] - n_ops[jp] @ velocity[j]
        # velocity conserves total number except through the Pegg-Barnett wrap
        wrapless = p_sub @ total @ p_sub
        diag = max(diag, float(np.linalg.norm(wrapless, 2)))

    return FluidCommutatorReport(
        max_residual=max_resid,
        projector_bound=max_bound,
        projected_residual=max_proj,
        diagonal_identity=diag,
    )

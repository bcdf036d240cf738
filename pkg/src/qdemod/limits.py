"""Closed-form error, SNR, quantum-limit and threshold predictions.

Conventions: Lambda = 4 |alpha|^2 S_m(0) / S2(0) is the loop SNR parameter,
N the photon number per message correlation time 1/b.  Flat-band closed
forms are exact; the quoted large-argument asymptotics are provided
separately and are never used in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PM = "pm"
FM = "fm"
SQL = "sql"
HEISENBERG = "heisenberg"
LOG_BOUND = "log_bound"


def irreducible_error(s_m: np.ndarray, h: np.ndarray, four_alpha_sq: float,
                      s2: np.ndarray) -> float:
    """Minimum mean-square error (1/B) integral of S_m S2 / (4a^2 S_m|H|^2 + S2).

    Evaluated as a bin sum; bins without message power contribute their
    analytic limit zero (this covers the FM DC bin).
    """
    s_m = np.asarray(s_m, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    h2 = np.abs(np.asarray(h)) ** 2
    num = s_m * s2
    den = four_alpha_sq * s_m * h2 + s2
    live = num > 0
    return float(np.sum(num[live] / den[live]) / s_m.size)


def closed_form_snr(kind: str, beta: float, lam: float):
    """(sigma^2, SNR) for a flat-band message; exact closed forms.

    PM: sigma^2 = 1/(beta^2 Lambda + 1).
    FM: sigma^2 = 1 - sqrt(beta^2 Lambda) atan(1/sqrt(beta^2 Lambda)).
    """
    b2l = beta**2 * lam
    if kind == PM:
        sigma2 = 1.0 / (b2l + 1.0)
    elif kind == FM:
        if b2l == 0:
            sigma2 = 1.0
        else:
            root = np.sqrt(b2l)
            sigma2 = 1.0 - root * np.arctan(1.0 / root)
    else:
        raise ValueError(f"unknown modulation kind {kind!r}")
    return float(sigma2), float(1.0 / sigma2)


def snr_asymptote(kind: str, beta: float, lam: float) -> float:
    """Large beta^2 Lambda asymptotes: beta^2 Lambda (PM), 3 beta^2 Lambda (FM)."""
    if kind == PM:
        return beta**2 * lam
    if kind == FM:
        return 3.0 * beta**2 * lam
    raise ValueError(f"unknown modulation kind {kind!r}")


def quantum_limit_snr(limit: str, n_photon: float, beta: float, kind: str) -> float:
    """SQL / Heisenberg SNRs and the log-corrected upper bound.

    SQL: 4 beta^2 N (PM), 12 beta^2 N (FM).
    Heisenberg: 4 beta^2 N (N+1) (PM), 12 beta^2 N (N+1) (FM).
    Log bound (upper bound marker, not a prediction): 8 beta^2 N^2 / ln N
    (PM), 24 beta^2 N^2 / ln N (FM); defined for N > 1 only.
    """
    if kind not in (PM, FM):
        raise ValueError(f"unknown modulation kind {kind!r}")
    if n_photon <= 0:
        raise ValueError("photon number must be positive")
    fm_factor = 3.0 if kind == FM else 1.0
    if limit == SQL:
        return 4.0 * beta**2 * n_photon * fm_factor
    if limit == HEISENBERG:
        return 4.0 * beta**2 * n_photon * (n_photon + 1.0) * fm_factor
    if limit == LOG_BOUND:
        if n_photon <= 1.0:
            raise ValueError("log bound requires N > 1")
        return 8.0 * beta**2 * n_photon**2 / np.log(n_photon) * fm_factor
    raise ValueError(f"unknown limit kind {limit!r}")


def optimal_squeeze(n_photon: float):
    """(exp(2r), r) maximising the squeezed SNR at a fixed photon budget."""
    if n_photon < 0:
        raise ValueError("photon number must be nonnegative")
    e2r = 2.0 * n_photon + 1.0
    return float(e2r), float(0.5 * np.log(e2r))


def lorentzian_pm_snr(n_photon: float, beta: float) -> float:
    """Coherent PM SNR for a Lorentzian message, B >> b: sqrt(8 b^2 N / pi + 1)."""
    return float(np.sqrt(8.0 * beta**2 * n_photon / np.pi + 1.0))


def sigma0(kind: str, beta: float, lam: float) -> float:
    """Tracking error sigma0^2 of the loop, flat-band closed forms.

    PM: (1/Lambda) ln(1 + beta^2 Lambda).
    FM: (1/Lambda) [ln(1 + beta^2 Lambda)
                    + 2 beta sqrt(Lambda) atan(1/(beta sqrt(Lambda)))].
    """
    b2l = beta**2 * lam
    if kind == PM:
        return float(np.log1p(b2l) / lam)
    if kind == FM:
        root = beta * np.sqrt(lam)
        return float((np.log1p(b2l) + 2.0 * root * np.arctan(1.0 / root)) / lam)
    raise ValueError(f"unknown modulation kind {kind!r}")


def sigma0_grid(s_m: np.ndarray, h: np.ndarray, four_alpha_sq: float,
                s2: np.ndarray) -> float:
    """Bin-sum tracking error (1/B) integral of S_n ln(1 + S_phibar/S_n).

    General (colored-noise) form with S_n = S2 / 4|a|^2; reduces to the
    flat-band closed forms when the spectra are flat.  Note: this is the
    white-noise (Yovits-Jackson) expression the closed forms are borrowed
    from; for strongly colored S2 it underestimates the causal tracking
    error of the actual loop.
    """
    s_m = np.asarray(s_m, float)
    s2 = np.asarray(s2, float)
    h2 = np.abs(np.asarray(h)) ** 2
    s_n = s2 / four_alpha_sq
    ratio = np.zeros_like(s_n)
    live = s_m * h2 > 0
    ratio[live] = four_alpha_sq * s_m[live] * h2[live] / s2[live]
    return float(np.sum(s_n * np.log1p(ratio)) / s_m.size)


def threshold_check(kind: str, beta: float, lam: float, r: float = 0.0,
                    limit: float = 0.25):
    """(constraint LHS, pass) for the loop linearisation to hold.

    LHS is sigma0^2 for coherent or z'-squeezed-with-feedback operation and
    exp(4r) sigma0^2 for phase-squeezed light without feedback (the paper's
    right-hand side is an order-of-magnitude estimate, so the squeezed check
    is approximate).  pass = LHS <= 0.25 by the standard operational rule.
    """
    lhs = sigma0(kind, beta, lam) * float(np.exp(4.0 * r))
    return float(lhs), bool(lhs <= limit)


@dataclass(frozen=True)
class LimitQuery:
    """Bundle of parameters for the analytic tables."""

    kind: str = PM
    beta: float = 1.0
    lam: float | None = None
    n_photon: float | None = None
    r: float = 0.0

    def resolved_lambda(self) -> float:
        if self.lam is not None:
            return self.lam
        if self.n_photon is None:
            raise ValueError("need lambda or a photon number")
        if self.r > 0:
            sh2 = float(np.sinh(self.r) ** 2)
            if sh2 >= self.n_photon:
                raise ValueError("photon budget too small for the requested squeezing")
            return 4.0 * (self.n_photon - sh2) * float(np.exp(2.0 * self.r))
        return 4.0 * self.n_photon

    def evaluate(self) -> dict:
        lam = self.resolved_lambda()
        sigma2, snr = closed_form_snr(self.kind, self.beta, lam)
        lhs, ok = threshold_check(self.kind, self.beta, lam, self.r)
        out = {
            "kind": self.kind,
            "beta": self.beta,
            "lambda": lam,
            "sigma_sq": sigma2,
            "snr": snr,
            "sigma0_sq": sigma0(self.kind, self.beta, lam),
            "threshold_lhs": lhs,
            "pass_threshold": ok,
        }
        if self.n_photon is not None and self.n_photon > 0:
            out["snr_sql"] = quantum_limit_snr(SQL, self.n_photon, self.beta, self.kind)
            out["snr_heisenberg"] = quantum_limit_snr(
                HEISENBERG, self.n_photon, self.beta, self.kind)
            if self.n_photon > 1:
                out["snr_log_bound"] = quantum_limit_snr(
                    LOG_BOUND, self.n_photon, self.beta, self.kind)
        return out

"""Analytic escape-time distribution of a finite open-boundary section.

The density is a sum of decaying exponentials over the spectral
decomposition, P_e(t) = sum_j a_j exp(-beta_j t) with
a_j = (J . v_j)(v_j . rho0) and J the combined boundary jump vector. The
cumulative form is P_int(t) = 1 - sum_j A_j exp(-beta_j t) with
A_j = a_j / beta_j, so sum_j A_j = 1 expresses that escape is certain.
Moments are available in closed form; an independent Runge-Kutta integrator
over the same generator serves as the cross-check oracle.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .generators import ChainGenerator
from .spectral import SpectralDecomposition

#: coefficients smaller than this (in units of 1) are flagged negligible
NEGLIGIBLE_A = 1e-12

MAX_MOMENT_ORDER = 6


def symmetric_rho0(n_sites: int) -> np.ndarray:
    """Initial state with half the weight on each boundary site."""
    rho = np.zeros(n_sites)
    rho[0] += 0.5
    rho[-1] += 0.5  # n_sites = 1 collapses both halves onto the same site
    return rho


def site_rho0(n_sites: int, site: int) -> np.ndarray:
    """Initial state concentrated on one site (1-based)."""
    if not 1 <= site <= n_sites:
        raise ValueError(f"site must be in 1..{n_sites}")
    rho = np.zeros(n_sites)
    rho[site - 1] = 1.0
    return rho


def _validate_rho0(rho0: np.ndarray, n: int) -> np.ndarray:
    rho = np.asarray(rho0, dtype=float)
    if rho.shape != (n,):
        raise ValueError(f"rho0 must have length {n}")
    if rho.min() < -1e-12:
        raise ValueError("rho0 has negative entries")
    if abs(rho.sum() - 1.0) > 1e-9:
        raise ValueError(f"rho0 must sum to 1, got {rho.sum()!r}")
    return rho


@dataclass
class EtdModel:
    """Exponent/coefficient triples (beta_j, a_j, A_j) defining the escape
    density and its integral. Zero-weight terms stay in the ladder, flagged
    negligible, so the full spectrum remains comparable with fits."""

    betas: np.ndarray
    a: np.ndarray
    A: np.ndarray
    negligible: np.ndarray
    rho0: np.ndarray
    jump: np.ndarray
    parities: list[str] = field(default_factory=list)


def etd_coefficients(
    decomp: SpectralDecomposition, generator: ChainGenerator, rho0: np.ndarray
) -> EtdModel:
    """Expansion coefficients of the escape density for a given initial state."""
    rho = _validate_rho0(rho0, generator.n_sites)
    J = generator.jump_vector()
    a = (J @ decomp.vectors) * (decomp.vectors.T @ rho)
    A = a / decomp.betas
    return EtdModel(
        betas=decomp.betas.copy(),
        a=a,
        A=A,
        negligible=np.abs(A) < NEGLIGIBLE_A,
        rho0=rho,
        jump=J,
        parities=list(decomp.parities),
    )


def etd_eval(model: EtdModel, t) -> np.ndarray | float:
    """Escape density P_e(t) = sum_j a_j exp(-beta_j t), t >= 0."""
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0.0):
        raise ValueError("t must be nonnegative")
    out = np.exp(-np.multiply.outer(tt, model.betas)) @ model.a
    return float(out) if np.isscalar(t) or tt.ndim == 0 else out


def integrated_etd_eval(model: EtdModel, t) -> np.ndarray | float:
    """Cumulative escape probability P_int(t) = 1 - sum_j A_j exp(-beta_j t)."""
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0.0):
        raise ValueError("t must be nonnegative")
    out = 1.0 - np.exp(-np.multiply.outer(tt, model.betas)) @ model.A
    return float(out) if np.isscalar(t) or tt.ndim == 0 else out


def moments_and_cumulants(model: EtdModel, max_order: int) -> dict:
    """Closed-form moments mu_m = sum_j a_j m! / beta_j^(m+1) and cumulants.

    Cumulants follow the standard recursion
    kappa_m = mu_m - sum_{k<m} C(m-1, k-1) kappa_k mu_{m-k}. Index 0 holds
    mu_0 (which is 1 for any normalized model) and kappa_0 = 0.
    """
    if not 1 <= max_order <= MAX_MOMENT_ORDER:
        raise ValueError(f"max_order must be in 1..{MAX_MOMENT_ORDER}")
    mu = np.empty(max_order + 1)
    for m in range(max_order + 1):
        mu[m] = float(np.sum(model.a * math.factorial(m) / model.betas ** (m + 1)))
    kappa = np.zeros(max_order + 1)
    for m in range(1, max_order + 1):
        acc = mu[m]
        for k in range(1, m):
            acc -= math.comb(m - 1, k - 1) * kappa[k] * mu[m - k]
        kappa[m] = acc
    return {"moments": mu, "cumulants": kappa}


def ode_oracle(
    generator: ChainGenerator, rho0: np.ndarray, t_max: float, dt: float
) -> dict:
    """Direct integration of d rho/dt = L rho with absorbing boundaries.

    Classical fixed-step RK4; the escape density on the grid is J . rho(t)
    and the cumulative probability is 1 - sum_n rho_n(t). Independent of the
    spectral route, so it serves as the oracle for etd_eval. Accuracy is
    O(dt^4); a warning is emitted when dt times the fastest rate exceeds 0.5.
    """
    rho = _validate_rho0(rho0, generator.n_sites).copy()
    if dt <= 0.0 or t_max <= 0.0:
        raise ValueError("t_max and dt must be positive")
    rate_max = float(np.max(generator.escape_rates()))
    if dt * 2.0 * rate_max > 0.5:
        warnings.warn(
            f"dt * {2 * rate_max:.3g} = {dt * 2 * rate_max:.3g} > 0.5; RK4 may be unstable",
            RuntimeWarning,
        )
    diag = generator.diagonal
    off = generator.off_diagonal
    J = generator.jump_vector()

    def deriv(p):
        y = diag * p
        if off.size:
            y[:-1] += off * p[1:]
            y[1:] += off * p[:-1]
        return y

    n_steps = int(round(t_max / dt))
    t = np.empty(n_steps + 1)
    pe = np.empty(n_steps + 1)
    pint = np.empty(n_steps + 1)
    for k in range(n_steps + 1):
        t[k] = k * dt
        pe[k] = float(J @ rho)
        pint[k] = 1.0 - float(rho.sum())
        if k == n_steps:
            break
        k1 = deriv(rho)
        k2 = deriv(rho + 0.5 * dt * k1)
        k3 = deriv(rho + 0.5 * dt * k2)
        k4 = deriv(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return {"t": t, "pe": pe, "pint": pint}

"""Recover decay exponents and weights from a cumulative escape curve.

The model 1 - sum_j A_j exp(-beta_j t) with sum_j A_j = 1 is fitted by
variable projection: for fixed exponents the weights solve a linear least
squares in which the constraint is eliminated exactly (A_K substituted),
and the exponents move in log space under a Levenberg-Marquardt outer loop.
Exponential fitting is multi-modal, so every fit runs from a ladder start, a
tail-slope start, deterministic random restarts, and warm starts grown from
the best lower-order solution; the last of these makes the achieved residual
non-increasing in the number of terms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .generators import RateConfig
from .sampling import ReconstructedCurve, reconstruct_integrated_etd, sample_ensemble

#: exponents closer than this (relative) are merged into one term
MERGE_RTOL = 1e-6
MAX_TERMS = 6
MAX_OUTER_ITER = 500
XTOL = 1e-10

_trapz = getattr(np, "trapezoid", None) or np.trapz


@dataclass
class FitResult:
    """Fitted terms sorted ascending in beta; sum(A) = 1 by construction."""

    betas: np.ndarray
    A: np.ndarray
    residual: float
    k_terms: int
    iterations: int
    converged: bool
    condition: float
    diagnostics: dict = field(default_factory=dict)


def _design(t: np.ndarray, betas: np.ndarray) -> np.ndarray:
    return np.exp(-np.outer(t, betas))


def _solve_weights(t: np.ndarray, y: np.ndarray, betas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Constrained linear stage: best A with sum(A) = 1; returns (A, residual)."""
    E = _design(t, betas)
    k = betas.size
    if k == 1:
        A = np.array([1.0])
        return A, y - (1.0 - E[:, 0])
    # eliminate A_K = 1 - sum(A_j<K); columns become differences to the last
    M = E[:, :-1] - E[:, -1:]
    c = 1.0 - E[:, -1] - y
    A_free, *_ = np.linalg.lstsq(M, c, rcond=None)
    A = np.append(A_free, 1.0 - A_free.sum())
    return A, c - M @ A_free


def _projected_residual(theta: np.ndarray, t: np.ndarray, y: np.ndarray) -> np.ndarray:
    _, r = _solve_weights(t, y, np.exp(theta))
    return r


def _rate_scale(t: np.ndarray, y: np.ndarray) -> float:
    """Inverse mean escape time estimated from the curve by trapezoid rule."""
    mean_t = float(_trapz(1.0 - y, t))
    if mean_t <= 0.0:
        mean_t = float(t[-1]) / 3.0 if t[-1] > 0 else 1.0
    return 1.0 / mean_t


def _tail_slope(t: np.ndarray, y: np.ndarray) -> float | None:
    mask = (1.0 - y) > 1e-12
    if mask.sum() < 4:
        return None
    tt = t[mask]
    yy = np.log((1.0 - y)[mask])
    cut = max(4, mask.sum() // 4)
    slope = np.polyfit(tt[-cut:], yy[-cut:], 1)[0]
    return float(-slope) if slope < 0 else None


def _starts(t, y, k, scale, rng, restarts, warm):
    starts = [np.log(np.geomspace(0.3, 3.0, k) * scale)]
    b_tail = _tail_slope(t, y)
    if b_tail is not None:
        starts.append(np.log(np.geomspace(b_tail, max(10.0 * b_tail, 3.0 * scale), k)))
    for _ in range(restarts):
        starts.append(np.log(scale) + rng.uniform(np.log(0.05), np.log(20.0), k))
    for w in warm:
        starts.append(np.sort(np.append(w, np.log(np.max(np.exp(w)) * 4.0))))
        starts.append(np.sort(np.append(w, np.log(np.min(np.exp(w)) * 0.3))))
    return starts


def fit_exponential_sum(
    t: np.ndarray,
    y: np.ndarray,
    k_terms: int,
    restarts: int = 8,
    seed: int = 0,
) -> FitResult:
    """Best-of-restarts fit of 1 - sum_j A_j exp(-beta_j t) to (t, y)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if not 1 <= k_terms <= MAX_TERMS:
        raise ValueError(f"k_terms must be in 1..{MAX_TERMS}")
    if t.size < 4 * k_terms:
        raise ValueError(f"need at least {4 * k_terms} points for {k_terms} terms")
    scale = _rate_scale(t, y)
    rng = np.random.default_rng(seed)
    best = None
    total_nfev = 0
    warm: list[np.ndarray] = []
    for k in range(1, k_terms + 1):
        best_k = None
        for theta0 in _starts(t, y, k, scale, rng, restarts, warm):
            try:
                res = least_squares(
                    _projected_residual,
                    theta0,
                    args=(t, y),
                    method="lm",
                    xtol=XTOL,
                    ftol=1e-12,
                    max_nfev=MAX_OUTER_ITER * (k + 1),
                )
            except Exception:
                continue
            total_nfev += res.nfev
            if best_k is None or res.cost < best_k.cost:
                best_k = res
            if np.sqrt(2.0 * res.cost / t.size) < 1e-12:
                break
        if best_k is None:
            raise RuntimeError("all fit starts failed")
        warm = [best_k.x]
        best = best_k
    betas = np.exp(best.x)
    A, _ = _solve_weights(t, y, betas)
    order = np.argsort(betas)
    betas, A = betas[order], A[order]
    betas, A = _merge_close(betas, A)
    E = _design(t, betas)
    cond = float(np.linalg.cond(E)) if betas.size > 1 else 1.0
    # residual of the model actually returned (merging can perturb it)
    rms = float(np.sqrt(np.mean((y - (1.0 - E @ A)) ** 2)))
    converged = bool(best.status > 0)
    return FitResult(
        betas=betas,
        A=A,
        residual=rms,
        k_terms=int(betas.size),
        iterations=int(total_nfev),
        converged=converged,
        condition=cond,
        diagnostics={"requested_k": int(k_terms), "status": int(best.status)},
    )


def _merge_close(betas: np.ndarray, A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    out_b: list[float] = []
    out_A: list[float] = []
    for b, w in zip(betas, A):
        if out_b and abs(b - out_b[-1]) <= MERGE_RTOL * max(abs(b), abs(out_b[-1])):
            # near-duplicate exponents are one term with summed weight
            out_A[-1] += w
        else:
            out_b.append(float(b))
            out_A.append(float(w))
    return np.asarray(out_b), np.asarray(out_A)


def fit_integrated_etd(
    curve: ReconstructedCurve, k_terms: int, restarts: int = 8, seed: int = 0
) -> FitResult:
    """Fit the K-term cumulative ansatz to a reconstructed integrated curve."""
    if curve.kind != "integrated_etd":
        raise ValueError(f"curve kind must be 'integrated_etd', got {curve.kind!r}")
    return fit_exponential_sum(curve.t, curve.values, k_terms, restarts=restarts, seed=seed)


def fit_stability_sweep(
    config: RateConfig,
    n_sites: int,
    k_list,
    i_max_list,
    seeds,
    n_av: int = 100,
    n_step: int = 500,
    initial="symmetric_edges",
) -> list[dict]:
    """Run sample -> reconstruct -> fit over a (K, i_max, seed) grid.

    Ensembles are shared across K values of the same cell. Per-cell failures
    are recorded, not raised, so one bad fit cannot abort a sweep.
    """
    k_list, i_max_list, seeds = list(k_list), list(i_max_list), list(seeds)
    if not (k_list and i_max_list and seeds):
        raise ValueError("k_list, i_max_list and seeds must be nonempty")
    rows = []
    for i_max in i_max_list:
        for seed in seeds:
            try:
                ens = sample_ensemble(config, n_sites, int(i_max), initial, int(seed))
                curve = reconstruct_integrated_etd(ens, n_av, n_step)
                cell_error = None
            except Exception as exc:  # noqa: BLE001 - tabulated, not fatal
                curve, cell_error = None, str(exc)
            for k in k_list:
                row = {"K": int(k), "i_max": int(i_max), "seed": int(seed)}
                try:
                    if cell_error is not None:
                        raise RuntimeError(cell_error)
                    fit = fit_integrated_etd(curve, int(k), seed=int(seed))
                    row.update(
                        betas=fit.betas,
                        A=fit.A,
                        residual=fit.residual,
                        converged=fit.converged,
                        error=None,
                    )
                except Exception as exc:  # noqa: BLE001 - tabulated, not fatal
                    row.update(betas=None, A=None, residual=None, converged=False, error=str(exc))
                rows.append(row)
    return rows

"""Winding-number invariant of the counting-field generator and phase labels."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .generators import RateConfig

#: relative gap tolerance: below this the invariant is undefined
GAP_TOL = 1e-9
DEFAULT_N_GRID = 256


class GapClosedError(ValueError):
    """The curve l(chi) passes through (or too close to) the origin."""


@dataclass(frozen=True)
class WindingResult:
    winding: int
    zak_phase: float
    phase_label: str  # "trivial" | "nontrivial" | "critical"

    def as_dict(self) -> dict:
        return {"W": self.winding, "zak_phase": self.zak_phase, "label": self.phase_label}


def winding_number(config: RateConfig, n_grid: int = DEFAULT_N_GRID) -> WindingResult:
    """Winding of (l_x, l_y) around the origin as chi runs over [-pi, pi].

    Accumulates two-argument arctangent increments wrapped into (-pi, pi],
    which avoids the branch cut of arg(l_y / l_x) at l_x = 0. Raises
    GapClosedError when min |l| < GAP_TOL * (gamma_L + gamma_R), i.e. at the
    critical point alpha = 0 where the invariant is undefined.
    """
    if n_grid < 16:
        raise ValueError("n_grid must be >= 16")
    gl, gr = config.gamma_L, config.gamma_R
    chi = np.linspace(-math.pi, math.pi, n_grid + 1)
    lx = gl + gr * np.cos(chi)
    ly = gr * np.sin(chi)
    norms = np.hypot(lx, ly)
    if norms.min() < GAP_TOL * (gl + gr):
        raise GapClosedError(
            f"gap closed: min |l(chi)| = {norms.min():.3e} below tolerance; winding undefined"
        )
    theta = np.arctan2(ly, lx)
    incr = np.diff(theta)
    incr = (incr + math.pi) % (2.0 * math.pi) - math.pi
    w_float = incr.sum() / (2.0 * math.pi)
    w = int(round(w_float))
    if abs(w_float - w) > 1e-6:
        raise GapClosedError(f"winding did not quantize: {w_float!r} (n_grid too coarse?)")
    label = "nontrivial" if w == 1 else "trivial"
    return WindingResult(winding=w, zak_phase=w / 2.0, phase_label=label)


def chiral_symmetry_check(generator) -> tuple[bool, float]:
    """Check Lambda (L + g 1) Lambda = -(L + g 1) with Lambda = diag(+1,-1,...).

    g is the mean escape rate (2 gamma_bar for the alternating-bond chain).
    Conjugation by Lambda flips the sign of every off-diagonal entry, so the
    residual reduces to the largest deviation of the diagonal from -g; it is
    reported on that scale (half the max-abs violation). True iff the
    residual is below 1e-12 relative to g.
    """
    diag = np.asarray(generator.diagonal, dtype=float)
    g = -diag.mean()
    # adjacent sites carry opposite Lambda signs: conjugation flips every
    # off-diagonal entry exactly (they cancel identically in the sum), so the
    # violation lives entirely on the diagonal
    resid = float(np.max(np.abs(diag + g)))
    return bool(resid < 1e-12 * max(abs(g), 1.0)), resid

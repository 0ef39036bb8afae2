"""Rate generators for continuous-time random walks with SSH coupling geometry.

All generators act on probability column vectors, d/dt rho = L rho, and are
stored in tridiagonal form (diagonal plus off-diagonal vectors), never dense.
Boundary couplings of a finite open section are kept separately as jump
vectors; embedding the section back into the infinite chain with its jump
vectors restores exact column-sum zero (probability conservation).

Units: rates are inverse time, k_B = 1, energies in units of temperature.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

_CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True, init=False)
class RateConfig:
    """Physical rates of the alternating-bond walk.

    Accepts either (gamma_bar, alpha) or (gamma_L, gamma_R); both pairs are
    stored. If all four are given they must agree to 1e-12.
    """

    gamma_bar: float
    alpha: float
    gamma_L: float
    gamma_R: float

    def __init__(self, gamma_bar=None, alpha=None, gamma_L=None, gamma_R=None):
        have_bias = gamma_bar is not None and alpha is not None
        have_coupl = gamma_L is not None and gamma_R is not None
        if not have_bias and not have_coupl:
            raise ValueError("provide (gamma_bar, alpha) or (gamma_L, gamma_R)")
        if have_coupl:
            gl, gr = float(gamma_L), float(gamma_R)
            if have_bias:
                if abs(gl - (gamma_bar + alpha)) > _CONSISTENCY_TOL or abs(
                    gr - (gamma_bar - alpha)
                ) > _CONSISTENCY_TOL:
                    raise ValueError("(gamma_bar, alpha) and (gamma_L, gamma_R) inconsistent")
            gb, al = 0.5 * (gl + gr), 0.5 * (gl - gr)
        else:
            gb, al = float(gamma_bar), float(alpha)
            gl, gr = gb + al, gb - al
        if gl <= 0.0 or gr <= 0.0:
            raise ValueError(f"couplings must be positive, got gamma_L={gl}, gamma_R={gr}")
        object.__setattr__(self, "gamma_bar", gb)
        object.__setattr__(self, "alpha", al)
        object.__setattr__(self, "gamma_L", gl)
        object.__setattr__(self, "gamma_R", gr)

    def as_dict(self) -> dict:
        return {"gamma_bar": self.gamma_bar, "alpha": self.alpha}


@dataclass(frozen=True)
class SetLeadConfig:
    """Single-dot transport parameters: two leads with Fermi occupations."""

    mu_L: float
    mu_R: float
    T_L: float
    T_R: float
    epsilon_dot: float
    gamma_tilde_L: float
    gamma_tilde_R: float

    def __post_init__(self):
        if self.T_L <= 0.0 or self.T_R <= 0.0:
            raise ValueError("temperatures must be positive")
        if self.gamma_tilde_L <= 0.0 or self.gamma_tilde_R <= 0.0:
            raise ValueError("bare tunnel rates must be positive")

    def fermi_factors(self) -> tuple[float, float]:
        """Lead occupations f_nu = 1/(exp((eps - mu_nu)/T_nu) + 1), k_B = 1."""
        f_L = 1.0 / (math.exp((self.epsilon_dot - self.mu_L) / self.T_L) + 1.0)
        f_R = 1.0 / (math.exp((self.epsilon_dot - self.mu_R) / self.T_R) + 1.0)
        return f_L, f_R

    def as_dict(self) -> dict:
        return {
            "mu_L": self.mu_L,
            "mu_R": self.mu_R,
            "T_L": self.T_L,
            "T_R": self.T_R,
            "epsilon_dot": self.epsilon_dot,
            "gamma_tilde_L": self.gamma_tilde_L,
            "gamma_tilde_R": self.gamma_tilde_R,
        }


@dataclass(frozen=True)
class FeedbackConfig:
    """Effective rates of the measurement-conditioned walk.

    The left rate is switched according to the parity of the counted particle
    number, giving a bond pattern that repeats after four sites.
    """

    gamma_R: float
    gamma_L_even: float
    gamma_L_odd: float

    def __post_init__(self):
        if min(self.gamma_R, self.gamma_L_even, self.gamma_L_odd) <= 0.0:
            raise ValueError("all feedback rates must be positive")

    @classmethod
    def from_components(cls, gamma_L_0: float, gamma_L_1: float, gamma_R: float) -> "FeedbackConfig":
        # switched rate: gamma_L_0 + (-1)^m gamma_L_1 for counted number m
        return cls(gamma_R=gamma_R, gamma_L_even=gamma_L_0 + gamma_L_1, gamma_L_odd=gamma_L_0 - gamma_L_1)

    @classmethod
    def from_bias(cls, gamma_L_even: float, alpha: float) -> "FeedbackConfig":
        """One-parameter family gamma_R = gamma_L_even + alpha, gamma_L_odd = gamma_L_even - alpha."""
        return cls(gamma_R=gamma_L_even + alpha, gamma_L_even=gamma_L_even, gamma_L_odd=gamma_L_even - alpha)

    def as_dict(self) -> dict:
        return {
            "gamma_R": self.gamma_R,
            "gamma_L_even": self.gamma_L_even,
            "gamma_L_odd": self.gamma_L_odd,
        }


@dataclass
class ChainGenerator:
    """Symmetric tridiagonal generator of a finite open-boundary section.

    diagonal[n] is the total loss rate of site n+1 (negative), off_diagonal[k]
    the rate across bond k+1, and the jump vectors hold the escape rates of
    the boundary sites into the exterior. Treat instances as immutable.
    """

    n_sites: int
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    jump_left: np.ndarray
    jump_right: np.ndarray
    config: dict = field(default_factory=dict)

    def escape_rates(self) -> np.ndarray:
        return -self.diagonal

    def hop_rates(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-site rates (right, left); boundary entries are the jump rates."""
        n = self.n_sites
        right = np.empty(n)
        left = np.empty(n)
        right[: n - 1] = self.off_diagonal
        right[n - 1] = self.jump_right[n - 1]
        left[1:] = self.off_diagonal
        left[0] = self.jump_left[0]
        return right, left

    def jump_vector(self) -> np.ndarray:
        return self.jump_left + self.jump_right

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "diagonal": self.diagonal.tolist(),
            "off_diagonal": self.off_diagonal.tolist(),
            "jump_left": self.jump_left.tolist(),
            "jump_right": self.jump_right.tolist(),
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ChainGenerator":
        n = int(doc["n_sites"])
        gen = cls(
            n_sites=n,
            diagonal=np.asarray(doc["diagonal"], dtype=float),
            off_diagonal=np.asarray(doc["off_diagonal"], dtype=float),
            jump_left=np.asarray(doc["jump_left"], dtype=float),
            jump_right=np.asarray(doc["jump_right"], dtype=float),
            config=dict(doc.get("config", {})),
        )
        if gen.diagonal.shape != (n,) or gen.off_diagonal.shape != (max(n - 1, 0),):
            raise ValueError("inconsistent generator document")
        return gen

    @classmethod
    def from_json(cls, text: str) -> "ChainGenerator":
        return cls.from_dict(json.loads(text))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


@dataclass
class SetGenerator:
    """General (possibly non-symmetric) tridiagonal generator of the dot walk.

    lower[k] is the rate site k+1 -> k+2 and upper[k] the rate k+2 -> k+1
    (1-based sites). Reduces to a ChainGenerator when both leads sit at
    half occupation.
    """

    n_sites: int
    diagonal: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    jump_left: np.ndarray
    jump_right: np.ndarray
    config: dict = field(default_factory=dict)

    def escape_rates(self) -> np.ndarray:
        return -self.diagonal

    def hop_rates(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n_sites
        right = np.empty(n)
        left = np.empty(n)
        right[: n - 1] = self.lower
        right[n - 1] = self.jump_right[n - 1]
        left[1:] = self.upper
        left[0] = self.jump_left[0]
        return right, left

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        scale = float(np.max(np.abs(self.lower))) or 1.0
        return bool(np.max(np.abs(self.lower - self.upper)) <= tol * scale)

    def to_chain_generator(self, tol: float = 1e-9) -> ChainGenerator:
        if not self.is_symmetric(tol):
            raise ValueError("generator is not symmetric; no chain form exists")
        return ChainGenerator(
            n_sites=self.n_sites,
            diagonal=self.diagonal.copy(),
            off_diagonal=0.5 * (self.lower + self.upper),
            jump_left=self.jump_left.copy(),
            jump_right=self.jump_right.copy(),
            config=self.config,
        )


def build_local_blocks(config: RateConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Two-site unit-cell blocks (L0, Lplus, Lminus) of the infinite chain.

    The stacked columns of all three blocks sum to zero.
    """
    gb, gl, gr = config.gamma_bar, config.gamma_L, config.gamma_R
    L0 = np.array([[-2.0 * gb, gl], [gl, -2.0 * gb]])
    Lplus = np.array([[0.0, gr], [0.0, 0.0]])
    return L0, Lplus, Lplus.T.copy()


def build_ssh_generator(config: RateConfig, n_sites: int) -> ChainGenerator:
    """Finite open-boundary generator on sites 1..N with alternating bonds.

    Bond k carries gamma_bar - (-1)^k alpha; every site loses probability at
    the total rate 2 gamma_bar, which makes the matrix chiral-symmetric.
    """
    n = int(n_sites)
    if n < 1:
        raise ValueError("n_sites must be >= 1")
    gb, al = config.gamma_bar, config.alpha
    k = np.arange(1, n)
    off = gb - (-1.0) ** k * al
    diagonal = np.full(n, -2.0 * gb)
    jump_left = np.zeros(n)
    jump_right = np.zeros(n)
    jump_left[0] = config.gamma_R
    jump_right[n - 1] = gb - (-1.0) ** n * al
    return ChainGenerator(
        n_sites=n,
        diagonal=diagonal,
        off_diagonal=off,
        jump_left=jump_left,
        jump_right=jump_right,
        config={"model": "ssh", **config.as_dict()},
    )


def counting_generator(config: RateConfig, chi: float) -> tuple[np.ndarray, tuple[float, float]]:
    """Counting-field generator L_chi = -2 gamma_bar 1 + l(chi) . sigma.

    Returns the 2x2 complex matrix and the vector (l_x, l_y). No sigma_z
    component is ever present; the walk escapes even and odd sites at the
    same total rate.
    """
    gb, gl, gr = config.gamma_bar, config.gamma_L, config.gamma_R
    lx = gl + gr * math.cos(chi)
    ly = gr * math.sin(chi)
    sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sigma_y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
    L_chi = -2.0 * gb * np.eye(2, dtype=complex) + lx * sigma_x + ly * sigma_y
    return L_chi, (lx, ly)


def build_set_generator(lead: SetLeadConfig, n_blocks: int) -> SetGenerator:
    """Counting-resolved dot generator on 2*n_blocks sites.

    Odd sites hop right at gamma_tilde_L (1-f_L) and left at
    gamma_tilde_R (1-f_R); even sites hop right at gamma_tilde_R f_R and left
    at gamma_tilde_L f_L. Columns of the embedded infinite matrix sum to
    zero for any occupations.
    """
    nb = int(n_blocks)
    if nb < 1:
        raise ValueError("n_blocks must be >= 1")
    n = 2 * nb
    f_L, f_R = lead.fermi_factors()
    gtl, gtr = lead.gamma_tilde_L, lead.gamma_tilde_R
    sites = np.arange(1, n + 1)
    odd = sites % 2 == 1
    rate_right = np.where(odd, gtl * (1.0 - f_L), gtr * f_R)
    rate_left = np.where(odd, gtr * (1.0 - f_R), gtl * f_L)
    diagonal = -(rate_right + rate_left)
    jump_left = np.zeros(n)
    jump_right = np.zeros(n)
    jump_left[0] = rate_left[0]
    jump_right[n - 1] = rate_right[n - 1]
    return SetGenerator(
        n_sites=n,
        diagonal=diagonal,
        lower=rate_right[:-1].copy(),
        upper=rate_left[1:].copy(),
        jump_left=jump_left,
        jump_right=jump_right,
        config={"model": "set", **lead.as_dict()},
    )


def build_feedback_generator(fb: FeedbackConfig, n_sites: int) -> ChainGenerator:
    """Symmetric generator with the four-periodic bond pattern of the conditioned walk.

    Bonds cycle through (gamma_R, gamma_L_even, gamma_R, gamma_L_odd); the
    diagonal balances the adjacent bond and boundary jump rates so that the
    embedded infinite generator conserves probability.
    """
    n = int(n_sites)
    if n < 1:
        raise ValueError("n_sites must be >= 1")
    cycle = np.array([fb.gamma_R, fb.gamma_L_even, fb.gamma_R, fb.gamma_L_odd])

    def bond(k):
        # bond k sits between sites k and k+1; k=0 and k=N are the boundary bonds
        return cycle[(k - 1) % 4]

    off = np.array([bond(k) for k in range(1, n)])
    jump_left = np.zeros(n)
    jump_right = np.zeros(n)
    jump_left[0] = bond(0)
    jump_right[n - 1] = bond(n)
    full = np.concatenate([[jump_left[0]], off, [jump_right[n - 1]]])
    diagonal = -(full[:-1] + full[1:])
    return ChainGenerator(
        n_sites=n,
        diagonal=diagonal,
        off_diagonal=off,
        jump_left=jump_left,
        jump_right=jump_right,
        config={"model": "feedback", **fb.as_dict()},
    )

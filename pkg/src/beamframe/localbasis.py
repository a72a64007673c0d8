"""λ-dependent local spectral bases on [0, 1] and their characteristic determinants.

Lateral functions are represented internally in the overflow-free fundamental
system ``{e^{μ(x-ℓ)}, e^{-μx}, sin μx, cos μx}``; torsional/axial ones in
``{sin βx, cos βx}``. Both are shared with :mod:`beamframe.secular` and
:mod:`beamframe.modes`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

SCAN_STEP = math.pi / 8
SINGULAR_TOL = 1e-10


class ExceptionalLambdaError(ValueError):
    """λ lies (numerically) in the exceptional set where the local basis degenerates."""


@dataclass(frozen=True)
class LateralBasisParams:
    a: float = 1.0
    theta_g: float = 0.0
    theta_omega: float = 0.0
    lam: float = 1.0

    @property
    def mu(self) -> float:
        return (self.lam / self.a) ** 0.25

    def at(self, lam: float) -> "LateralBasisParams":
        return LateralBasisParams(self.a, self.theta_g, self.theta_omega, lam)


@dataclass(frozen=True)
class TorsionBasisParams:
    d: float = 1.0
    theta_eta: float = 0.0
    lam: float = 1.0

    @property
    def beta(self) -> float:
        return math.sqrt(self.lam / self.d)

    def at(self, lam: float) -> "TorsionBasisParams":
        return TorsionBasisParams(self.d, self.theta_eta, lam)


@dataclass(frozen=True)
class BasisEvaluation:
    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray | None = None


# --------------------------------------------------------------------------
# fundamental systems

def lateral_functions(mu: float, x, order: int = 0, length: float = 1.0) -> np.ndarray:
    """Derivative ``order`` of ``[e^{μ(x-ℓ)}, e^{-μx}, sin μx, cos μx]``; shape (..., 4)."""
    x = np.asarray(x, dtype=float)
    m = mu**order
    shift = order * math.pi / 2
    return np.stack(
        [
            m * np.exp(mu * (x - length)),
            (-1) ** order * m * np.exp(-mu * x),
            m * np.sin(mu * x + shift),
            m * np.cos(mu * x + shift),
        ],
        axis=-1,
    )


def torsion_functions(beta: float, x, order: int = 0) -> np.ndarray:
    """Derivative ``order`` of ``[sin βx, cos βx]``; shape (..., 2)."""
    x = np.asarray(x, dtype=float)
    m = beta**order
    shift = order * math.pi / 2
    return np.stack([m * np.sin(beta * x + shift), m * np.cos(beta * x + shift)], axis=-1)


def exp_to_trig(coef: np.ndarray, mu: float, length: float = 1.0) -> np.ndarray:
    """Convert exponential-basis coefficients to the (sinh, sin, cosh, cos) basis."""
    coef = np.asarray(coef)
    c1, c2, c3, c4 = coef[..., 0], coef[..., 1], coef[..., 2], coef[..., 3]
    c1 = c1 * math.exp(-mu * length)
    return np.stack([c1 - c2, c3, c1 + c2, c4], axis=-1)


def trig_to_exp(coef: np.ndarray, mu: float, length: float = 1.0) -> np.ndarray:
    """Inverse of :func:`exp_to_trig`; may overflow for very large μℓ."""
    A, B, C, D = (np.asarray(coef)[..., n] for n in range(4))
    return np.stack([0.5 * (A + C) * math.exp(mu * length), 0.5 * (C - A), B, D], axis=-1)


# --------------------------------------------------------------------------
# determinants

def _hyp_scaled(mu: float) -> tuple[float, float]:
    """(sinh μ, cosh μ) multiplied by e^{-μ}."""
    e = math.exp(-2.0 * mu)
    return 0.5 * (1.0 - e), 0.5 * (1.0 + e)


def det_v_scaled(p: LateralBasisParams) -> float:
    """e^{-μ} D_v, evaluated without overflow for any μ."""
    mu = p.mu
    t, r = p.a * p.theta_g, p.a * p.theta_omega
    sh, ch = _hyp_scaled(mu)
    s, c = math.sin(mu), math.cos(mu)
    em = math.exp(-mu)
    return 2.0 * (
        ch * c
        - em
        + r * mu * (sh * c - s * ch)
        - t * mu**3 * (ch * s + sh * c)
        - t * r * mu**4 * (em + ch * c)
    )


def det_v(p: LateralBasisParams) -> float:
    """D_v(λ).

    The plain product form cancels catastrophically once μ exceeds ~10;
    it is expanded into terms linear in (sinh μ, cosh μ) and evaluated via
    the e^{-μ}-scaled form. Returns ±inf beyond overflow.
    """
    scaled = det_v_scaled(p)
    mu = p.mu
    if mu > 700.0:
        return math.copysign(math.inf, scaled) if scaled != 0 else 0.0
    return scaled * math.exp(mu)


def det_v_product(p: LateralBasisParams) -> float:
    """D_v as the literal two-product expression; reference for moderate μ."""
    mu = p.mu
    S_m, S_p = math.sinh(mu) - math.sin(mu), math.sinh(mu) + math.sin(mu)
    C_m, C_p = math.cosh(mu) - math.cos(mu), math.cosh(mu) + math.cos(mu)
    t, r = p.a * p.theta_g, p.a * p.theta_omega
    return (S_m - t * mu**3 * C_p) * (S_p + r * mu * C_p) - (C_m - t * mu**3 * S_m) * (
        C_m + r * mu * S_p
    )


def det_eta(p: TorsionBasisParams) -> float:
    beta = p.beta
    return math.sin(beta) + p.d * p.theta_eta * beta * math.cos(beta)


def _sign_roots(f: Callable[[float], float], hi: float, step: float, lo: float = 1e-6) -> list[float]:
    if hi <= lo:
        return []
    grid = np.arange(lo, hi, step)
    grid = np.append(grid, hi) if grid[-1] < hi else grid
    vals = [f(x) for x in grid]
    roots = []
    for x0, x1, f0, f1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if f0 == 0.0:
            roots.append(float(x0))
        elif f0 * f1 < 0:
            roots.append(brentq(f, x0, x1, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def exceptional_set(
    lam_max: float,
    lat: LateralBasisParams | None = None,
    tor: TorsionBasisParams | None = None,
) -> list[tuple[float, str]]:
    """Sorted (λ, origin) pairs of Σ^D in [0, λ_max]; origin is 'v', 'eta' or 'zero'.

    Roots are bracketed on a uniform wavenumber grid (step π/8) and refined
    with Brent's method.
    """
    out: list[tuple[float, str]] = [(0.0, "zero")]
    if lam_max <= 0:
        return out
    if lat is not None:
        mu_max = (lam_max / lat.a) ** 0.25
        f = lambda m: det_v_scaled(lat.at(lat.a * m**4))
        out += [(lat.a * m**4, "v") for m in _sign_roots(f, mu_max, SCAN_STEP)]
    if tor is not None:
        beta_max = math.sqrt(lam_max / tor.d)
        g = lambda b: det_eta(tor.at(tor.d * b * b))
        out += [(tor.d * b * b, "eta") for b in _sign_roots(g, beta_max, SCAN_STEP)]
    return sorted((lam, o) for lam, o in out if lam <= lam_max)


# --------------------------------------------------------------------------
# basis functions

def lateral_bc_matrix(p: LateralBasisParams) -> np.ndarray:
    """Rows: v(0), v'(0), v(1) - aθ_g v'''(1), v'(1) + aθ_ω v''(1) on the exponential basis."""
    mu = p.mu
    rows = [
        lateral_functions(mu, 0.0, 0),
        lateral_functions(mu, 0.0, 1),
        lateral_functions(mu, 1.0, 0) - p.a * p.theta_g * lateral_functions(mu, 1.0, 3),
        lateral_functions(mu, 1.0, 1) + p.a * p.theta_omega * lateral_functions(mu, 1.0, 2),
    ]
    return np.array(rows)


def torsion_bc_matrix(p: TorsionBasisParams) -> np.ndarray:
    """Rows: η(0), η(1) + dθ η'(1) on the (sin, cos) basis."""
    beta = p.beta
    return np.array(
        [
            torsion_functions(beta, 0.0, 0),
            torsion_functions(beta, 1.0, 0) + p.d * p.theta_eta * torsion_functions(beta, 1.0, 1),
        ]
    )


def _solve_identity(bc: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(bc, axis=1)
    rel = abs(np.linalg.det(bc / norms[:, None]))
    if not np.isfinite(rel) or rel < SINGULAR_TOL:
        raise ExceptionalLambdaError(
            f"boundary system is singular (relative determinant {rel:.3g}); λ is exceptional"
        )
    return np.linalg.solve(bc, np.eye(len(bc)))


def phi_coefficients(p: LateralBasisParams) -> np.ndarray:
    """Column k-1 holds the exponential-basis coefficients of φ_k."""
    if p.lam <= 0:
        raise ExceptionalLambdaError("λ = 0 is exceptional")
    return _solve_identity(lateral_bc_matrix(p))


def psi_coefficients(p: TorsionBasisParams) -> np.ndarray:
    """Column k-1 holds the (sin, cos) coefficients of ψ_k."""
    if p.lam <= 0:
        raise ExceptionalLambdaError("λ = 0 is exceptional")
    return _solve_identity(torsion_bc_matrix(p))


def eval_phi(k: int, x, p: LateralBasisParams) -> BasisEvaluation:
    if k not in (1, 2, 3, 4):
        raise ValueError("k must be 1..4")
    coef = phi_coefficients(p)[:, k - 1]
    mu = p.mu
    vals = [lateral_functions(mu, x, n) @ coef for n in range(4)]
    return BasisEvaluation(*vals)


def eval_psi(k: int, x, p: TorsionBasisParams) -> BasisEvaluation:
    if k not in (1, 2):
        raise ValueError("k must be 1..2")
    coef = psi_coefficients(p)[:, k - 1]
    beta = p.beta
    vals = [torsion_functions(beta, x, n) @ coef for n in range(3)]
    return BasisEvaluation(*vals)


def phi_closed_form(k: int, x, p: LateralBasisParams) -> np.ndarray:
    """Closed forms of φ₃ and φ₄ in the (sinh, sin, cosh, cos) basis; moderate μ only."""
    mu = p.mu
    t, r = p.a * p.theta_g, p.a * p.theta_omega
    S_m, S_p = math.sinh(mu) - math.sin(mu), math.sinh(mu) + math.sin(mu)
    C_m, C_p = math.cosh(mu) - math.cos(mu), math.cosh(mu) + math.cos(mu)
    x = np.asarray(x, dtype=float)
    Sx = np.sinh(mu * x) - np.sin(mu * x)
    Cx = np.cosh(mu * x) - np.cos(mu * x)
    D = det_v(p)
    if k == 3:
        return ((S_p + r * mu * C_p) * Sx - (C_m + r * mu * S_p) * Cx) / D
    if k == 4:
        return -((C_m - t * mu**3 * S_m) * Sx - (S_m - t * mu**3 * C_p) * Cx) / (mu * D)
    raise ValueError("closed forms exist for k = 3, 4 only")


def psi_closed_form(x, p: TorsionBasisParams) -> np.ndarray:
    return np.sin(p.beta * np.asarray(x, dtype=float)) / det_eta(p)

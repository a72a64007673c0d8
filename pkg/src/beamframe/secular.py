"""Secular (characteristic) matrices, sign-tracked determinants, root scanning and null spaces."""

from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from . import fields as F
from .frame import ComplianceSpec, Edge, EdgeFrame, FrameGraph, MaterialParams, VertexSpec
from .geometry import GeometricBasis
from .localbasis import (
    LateralBasisParams,
    TorsionBasisParams,
    exceptional_set,
    lateral_functions,
    phi_coefficients,
    psi_coefficients,
    torsion_functions,
)

log = logging.getLogger(__name__)

SCAN_STEP = math.pi / 40
BISECT_RTOL = 1e-15
DEDUP_RTOL = 1e-9
GUARD_RTOL = 1e-6
NULL_TOL = 1e-8
FUNDAMENTAL_REFINE = 1e-2


class SecularError(RuntimeError):
    """Raised when a secular matrix cannot be assembled or factorized."""


# --------------------------------------------------------------------------
# containers

@dataclass(frozen=True)
class RootRecord:
    lam: float
    multiplicity: int
    null_basis: tuple[np.ndarray, ...]
    residual: float
    sigma_max: float = 1.0
    origin: str = "secular"

    @property
    def mu(self) -> float:
        return self.lam**0.25


@dataclass
class SecularProblem:
    """λ ↦ square matrix whose singular points are eigenvalues.

    ``exceptional`` maps λ_max to the sorted list of exceptional λ in
    [0, λ_max]; ``check_exceptional`` (optional) decides whether such a λ is
    a genuine eigenvalue. For ``hermitian`` problems the scan also tracks
    the number of negative eigenvalues, which changes by the multiplicity at
    every root between exceptional points.
    """

    dimension: int
    assembler: Callable[[float], np.ndarray]
    label: str
    exceptional: Callable[[float], list[float]] = field(default=lambda lam_max: [0.0])
    check_exceptional: Callable[[float], "RootRecord | None"] | None = None
    guard: float = GUARD_RTOL
    hermitian: bool = False
    refine_below: float = 0.0

    def exceptional_points(self, lam_max: float) -> list[float]:
        cached = getattr(self, "_cache", None)
        if cached is None or cached[0] < lam_max:
            cached = (lam_max, list(self.exceptional(lam_max)))
            self._cache = cached
        return [x for x in cached[1] if x <= lam_max]

    def is_guarded(self, lam: float) -> bool:
        for x in self.exceptional_points(lam * (1 + 2 * self.guard) + 1e-300):
            if abs(lam - x) <= self.guard * max(abs(x), 1e-300) or (x == 0.0 and lam <= 0.0):
                return True
        return False

    def assemble(self, lam: float) -> np.ndarray:
        if self.is_guarded(lam):
            raise SecularError(f"λ = {lam!r} lies within the exceptional guard of {self.label}")
        return self.assembler(lam)

    __call__ = assemble


@dataclass(frozen=True)
class VertexBlockPair:
    A: np.ndarray
    B: np.ndarray

    def rank(self, rtol: float = 1e-9) -> int:
        s = np.linalg.svd(np.hstack([self.A, self.B]), compute_uv=False)
        return int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0


# --------------------------------------------------------------------------
# linear algebra

def log_det_with_sign(M: np.ndarray) -> tuple[float, float]:
    """(sign, log|det M|) from an LU factorization with partial pivoting.

    For complex input the sign is the phase of the determinant; it is
    returned as a real ±1 when the phase is real to 1e-8.
    """
    M = np.asarray(M)
    if M.size == 0:
        return 1.0, 0.0
    if np.any(np.isnan(M)):
        raise SecularError("matrix has NaN entries")
    with warnings.catch_warnings():
        # an exactly zero pivot is reported through the sign below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    diag = np.diag(lu)
    parity = -1.0 if np.count_nonzero(piv != np.arange(len(piv))) % 2 else 1.0
    mags = np.abs(diag)
    if np.any(mags < 1e-300):
        return 0.0, -math.inf
    logmag = float(np.sum(np.log(mags)))
    if np.iscomplexobj(lu):
        phase = parity * np.prod(diag / mags)
        if abs(phase.imag) < 1e-8:
            return float(np.sign(phase.real)), logmag
        return complex(phase), logmag
    sign = parity * float(np.prod(np.sign(diag)))
    return sign, logmag


def null_space(M: np.ndarray, tol: float = NULL_TOL) -> tuple[int, list[np.ndarray]]:
    """Multiplicity and orthonormal basis of the numerical kernel (σ < tol·σ_max)."""
    _, s, vh = np.linalg.svd(np.asarray(M))
    if s[0] == 0:
        return M.shape[1], [np.eye(M.shape[1])[i] for i in range(M.shape[1])]
    idx = np.nonzero(s < tol * s[0])[0]
    return len(idx), [np.conj(vh[i]) for i in idx]


def _equilibrate(M: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(M), axis=1)
    scale[scale == 0] = 1.0
    return M / scale[:, None]


def _svals(M: np.ndarray) -> np.ndarray:
    return np.linalg.svd(M, compute_uv=False)


def make_record(M: np.ndarray, lam: float, origin: str = "secular", tol: float = NULL_TOL) -> RootRecord:
    _, s, vh = np.linalg.svd(M)
    idx = np.nonzero(s < tol * s[0])[0]
    basis = tuple(np.conj(vh[i]) for i in idx) if len(idx) else (np.conj(vh[-1]),)
    return RootRecord(float(lam), int(len(idx)), basis, float(s[-1]), float(s[0]), origin)


# --------------------------------------------------------------------------
# root scanning

def _threads(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    try:
        return max(1, int(os.environ.get("BEAMFRAME_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, xs, workers: int):
    if workers <= 1 or len(xs) < 16:
        return [fn(x) for x in xs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, xs))


def _sign(problem: SecularProblem, lam: float) -> float:
    s, _ = log_det_with_sign(problem.assembler(lam))
    if isinstance(s, complex):
        s = float(np.sign(s.real))
    return s


def _bisect(problem: SecularProblem, lo: float, hi: float, s_lo: float) -> float:
    while hi - lo > BISECT_RTOL * hi:
        mid = 0.5 * (lo + hi)
        s_mid = _sign(problem, mid)
        if s_mid == 0:
            return mid
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _segments(problem: SecularProblem, lo: float, hi: float) -> list[tuple[float, float]]:
    cuts = [x for x in problem.exceptional_points(hi) if lo <= x <= hi]
    points = sorted(set([lo, hi] + cuts))
    segs = []
    for a, b in zip(points[:-1], points[1:]):
        a2 = a * (1 + problem.guard) if a in cuts or a == lo and problem.is_guarded(a) else a
        b2 = b * (1 - problem.guard) if b in cuts else b
        if a2 <= 0:
            # the edge bases degenerate as μ -> 0
            a2 = problem.guard
        if b2 > a2:
            segs.append((a2, b2))
    return segs


def _ratios(M: np.ndarray) -> tuple[float, float]:
    """(σ_min, σ₂)/σ_max with σ₂ the second smallest singular value.

    σ₂ vanishes only at roots of multiplicity >= 2, so unlike σ_min it is not
    pulled down by a nearby simple root.
    """
    sv = _svals(M)
    if not sv[0] > 0:
        return 0.0, 0.0
    return float(sv[-1] / sv[0]), float(sv[-min(2, len(sv))] / sv[0])


def _probe(
    problem: SecularProblem, mus: np.ndarray, workers: int = 1
) -> tuple[list[float], np.ndarray]:
    mats = _map(problem.assembler, [float(m) ** 4 for m in mus], workers)
    signs = []
    for M in mats:
        sg, _ = log_det_with_sign(M)
        signs.append(float(np.sign(sg.real)) if isinstance(sg, complex) else sg)
    return signs, np.array([_ratios(M) for M in mats])


def _local_minima(r: np.ndarray) -> list[int]:
    n = len(r)
    out = []
    for i in range(n):
        left = r[i - 1] if i > 0 else np.inf
        right = r[i + 1] if i < n - 1 else np.inf
        if r[i] <= left and r[i] <= right:
            out.append(i)
    return out


def _golden(f, a: float, b: float, rtol: float = 1e-15, give_up: float = 1e-3) -> tuple[float, float]:
    """Golden-section minimum of a unimodal (possibly V-shaped) function.

    Stops early once the bracket is below 1e-6 relative width while the
    minimum is still above ``give_up``: such a minimum is not a root.
    """
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > rtol * abs(b):
        if b - a < 1e-6 * abs(b) and min(fc, fd) > give_up:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _deflated_bisect(problem: SecularProblem, lo: float, hi: float, known: list[RootRecord]) -> float:
    """Bisect the sign of det with the known roots divided out."""

    def sign(lam):
        sg = _sign(problem, lam)
        for r in known:
            if r.multiplicity % 2 and lam < r.lam:
                sg = -sg
        return sg

    s_lo = sign(lo)
    while hi - lo > BISECT_RTOL * hi:
        mid = 0.5 * (lo + hi)
        s_mid = sign(mid)
        if s_mid == 0:
            return mid
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _refine_window(
    problem: SecularProblem, m0: float, m1: float, sub: int = 24, interior_only: bool = False
) -> list[RootRecord]:
    """Resample a coarse window, bisect sign changes and polish singular-value minima.

    ``interior_only`` skips minima at the window ends (windows that tile a
    range overlap their neighbours there).
    """
    mus = np.linspace(m0, m1, sub + 1)
    lams = mus**4
    signs, ratios = _probe(problem, mus)
    out = []
    for i in range(sub):
        s0, s1 = signs[i], signs[i + 1]
        if s0 == 0:
            lam = lams[i]
        elif s0 * s1 < 0:
            lam = _bisect(problem, lams[i], lams[i + 1], s0)
        else:
            continue
        out.append(make_record(problem.assembler(lam), lam))
    for col in (1, 0):
        for i in _local_minima(ratios[:, col]):
            if interior_only and i in (0, sub):
                continue
            x0, x1 = mus[max(i - 1, 0)], mus[min(i + 1, sub)]
            if col == 0 and any(x0**4 <= r.lam <= x1**4 for r in out):
                continue
            m_star, val = _golden(lambda m: _ratios(problem.assembler(m**4))[col], x0, x1)
            if val < NULL_TOL and min(m_star - x0, x1 - m_star) > 1e-12 * x1:
                lam = m_star**4
                out.append(make_record(problem.assembler(lam), lam))
    # odd-multiplicity roots hidden in a cell next to a known one
    for i in range(sub):
        s0, s1 = signs[i], signs[i + 1]
        if s0 == 0 or s1 == 0:
            continue
        for _ in range(4):
            inside = [r for r in out if lams[i] < r.lam < lams[i + 1]]
            if not inside:
                break
            parity = sum(r.multiplicity for r in inside) % 2
            if (s0 * s1 < 0) == bool(parity):
                break
            lam = _deflated_bisect(problem, lams[i], lams[i + 1], inside)
            rec = make_record(problem.assembler(lam), lam)
            if rec.multiplicity == 0 or any(abs(r.lam - lam) <= DEDUP_RTOL * lam for r in inside):
                break
            out.append(rec)
    return out


def _inertia(problem: SecularProblem, lam: float) -> int:
    return int(np.sum(np.linalg.eigvalsh(problem.assembler(lam)) < 0))


def _inertia_roots(problem: SecularProblem, lams: np.ndarray, workers: int = 1) -> list[RootRecord]:
    """Every λ where the negative-eigenvalue count jumps, located by bisection."""
    counts = _map(lambda x: _inertia(problem, x), list(lams), workers)
    out: list[RootRecord] = []

    def locate(lo, hi, c_lo, c_hi):
        if c_lo == c_hi:
            return
        if hi - lo <= BISECT_RTOL * hi:
            # the jump certifies the multiplicity even where σ_min is steep
            lam = 0.5 * (lo + hi)
            _, sv, vh = np.linalg.svd(problem.assembler(lam))
            k = abs(c_hi - c_lo)
            basis = tuple(np.conj(vh[-1 - n]) for n in range(k))
            out.append(RootRecord(float(lam), k, basis, float(sv[-1]), float(sv[0]), "inertia"))
            return
        mid = 0.5 * (lo + hi)
        c_mid = _inertia(problem, mid)
        locate(lo, mid, c_lo, c_mid)
        locate(mid, hi, c_mid, c_hi)

    for i in range(len(lams) - 1):
        locate(lams[i], lams[i + 1], counts[i], counts[i + 1])
    return out


def _grid(mu_a: float, mu_b: float, step: float, guard: float) -> np.ndarray:
    """Uniform μ grid plus geometric clusters next to both ends (poles sit there)."""
    n = max(3, int(math.ceil((mu_b - mu_a) / step)) + 1)
    grid = np.linspace(mu_a, mu_b, n)
    h = grid[1] - grid[0]
    offsets = mu_a * guard * 10.0 ** (0.25 * np.arange(1, 48))
    offsets = offsets[offsets < 0.5 * h]
    return np.unique(np.concatenate([grid, mu_a + offsets, mu_b - offsets]))


def _prefer(p: RootRecord, q: RootRecord, problem: SecularProblem) -> RootRecord:
    """Pick one record for two detections of the same root."""
    for origin in ("exceptional", "inertia"):
        if p.origin == origin or q.origin == origin:
            return p if p.origin == origin else q
    best = min((p, q), key=lambda r: r.residual / r.sigma_max)
    if max(p.multiplicity, q.multiplicity) > best.multiplicity:
        best = make_record(problem.assembler(best.lam), best.lam, tol=NULL_TOL * 10)
    return best


def scan_roots(
    problem: SecularProblem,
    lam_range: tuple[float, float],
    target_count: int | None = None,
    step: float = SCAN_STEP,
    workers: int | None = None,
) -> list[RootRecord]:
    """Eigenvalues of ``problem`` in ``lam_range`` (sorted, deduplicated, at most target_count).

    Sign changes of det on a uniform μ = λ^{1/4} grid are bisected; even
    multiplicity roots are picked up from local minima of the normalized
    smallest and second smallest singular values; exceptional points are delegated to
    ``problem.check_exceptional``.
    """
    lo, hi = float(lam_range[0]), float(lam_range[1])
    lo = max(lo, 0.0)
    if hi <= lo:
        return []
    nthreads = _threads(workers)
    found: list[RootRecord] = []

    for a, b in _segments(problem, lo, hi):
        grid = _grid(a**0.25, b**0.25, step, problem.guard)
        n = len(grid)
        signs, ratios = _probe(problem, grid, nthreads)
        windows = set()
        for i in range(n - 1):
            if signs[i] == 0 or signs[i] * signs[i + 1] < 0:
                windows.add((i, i + 1))
        for col in (0, 1):
            for i in _local_minima(ratios[:, col]):
                windows.add((max(i - 1, 0), min(i + 1, n - 1)))
        for i0, i1 in sorted(windows):
            found += _refine_window(problem, grid[i0], grid[i1])
        if problem.refine_below > 0:
            # clustered simple roots leave neither a sign change nor a minimum
            for i in range(n - 1):
                wide = grid[i + 1] - grid[i] > 0.5 * step
                if wide and (i, i + 1) not in windows and min(ratios[i, 0], ratios[i + 1, 0]) < problem.refine_below:
                    found += _refine_window(problem, grid[i], grid[i + 1], interior_only=True)
        if problem.hermitian:
            found += _inertia_roots(problem, grid**4, nthreads)

    if problem.check_exceptional is not None:
        for x in problem.exceptional_points(hi):
            if lo <= x <= hi and x > 0:
                rec = problem.check_exceptional(x)
                if rec is not None:
                    found.append(rec)

    found = [
        r
        for r in found
        if r.origin == "inertia" or (r.residual < NULL_TOL * r.sigma_max and r.multiplicity > 0)
    ]
    found.sort(key=lambda r: r.lam)
    merged: list[RootRecord] = []
    for r in found:
        if merged and abs(r.lam - merged[-1].lam) <= DEDUP_RTOL * r.lam:
            merged.append(_prefer(merged.pop(), r, problem))
        else:
            merged.append(r)
    if target_count is not None:
        if len(merged) < target_count:
            warnings.warn(
                f"{problem.label}: found {len(merged)} roots in [{lo:g}, {hi:g}], "
                f"fewer than the {target_count} requested",
                RuntimeWarning,
                stacklevel=2,
            )
        merged = merged[:target_count]
    return merged


def expand_multiplicities(records: Sequence[RootRecord]) -> list[float]:
    out = []
    for r in records:
        out.extend([r.lam] * r.multiplicity)
    return out


# --------------------------------------------------------------------------
# two-beam example

@dataclass(frozen=True)
class TwoBeamParams:
    l1: float = 0.5
    l2: float = 0.5
    b1: float = 1.0
    b2: float = 1.0
    theta_g1: float = 0.0
    theta_g2: float = 0.0
    theta_omega1: float = 0.0
    theta_omega2: float = 0.0
    mass: float = 0.0

    def __post_init__(self):
        if min(self.l1, self.l2, self.b1, self.b2) <= 0:
            raise ValueError("lengths and stiffnesses must be positive")
        if min(self.theta_g1, self.theta_g2, self.theta_omega1, self.theta_omega2, self.mass) < 0:
            raise ValueError("compliances and mass must be nonnegative")

    @classmethod
    def uniform(cls, l1=0.5, l2=0.5, mass=0.0, theta_g=0.0, theta_omega=0.0, b1=1.0, b2=1.0):
        return cls(l1, l2, b1, b2, theta_g, theta_g, theta_omega, theta_omega, mass)


def _SC(x: float) -> tuple[float, float, float, float]:
    sh, s, ch, c = math.sinh(x), math.sin(x), math.cosh(x), math.cos(x)
    return sh - s, sh + s, ch - c, ch + c


def assemble_1d(lam: float, p: TwoBeamParams) -> np.ndarray:
    """6x6 matrix in unknowns [A₁, B₁, A₂, B₂, w°, ω°/μ] with μ = λ^{1/4}.

    Rows: displacement and rotation relations for edge 1, then edge 2, then
    net force and net moment. With b = 1 the entries coincide with the
    classical cantilever construction.
    """
    if lam <= 0:
        raise SecularError("λ must be positive")
    mu = lam**0.25
    mu1, mu2 = (lam / p.b1) ** 0.25, (lam / p.b2) ** 0.25
    S1m, S1p, C1m, C1p = _SC(mu1 * p.l1)
    S2m, S2p, C2m, C2p = _SC(mu2 * p.l2)
    tg1, tg2 = p.theta_g1 * p.b1 * mu1**3, p.theta_g2 * p.b2 * mu2**3
    to1, to2 = p.theta_omega1 * p.b1 * mu1, p.theta_omega2 * p.b2 * mu2
    r1, r2 = mu1 / mu, mu2 / mu
    f1, f2 = p.b1 * (mu1 / mu) ** 3, p.b2 * (mu2 / mu) ** 3
    m1, m2 = p.b1 * (mu1 / mu) ** 2, p.b2 * (mu2 / mu) ** 2
    m = p.mass
    return np.array(
        [
            [S1m - tg1 * C1p, C1m - tg1 * S1m, 0, 0, -1, 0],
            [r1 * (C1m + to1 * S1p), r1 * (S1p + to1 * C1p), 0, 0, 0, -1],
            [0, 0, S2p - tg2 * C2m, C2p - tg2 * S2p, 1, 0],
            [0, 0, r2 * (C2p + to2 * S2m), r2 * (S2m + to2 * C2m), 0, -1],
            [f1 * C1p, f1 * S1m, -f2 * C2m, -f2 * S2p, mu * m, 0],
            [m1 * S1p, m1 * C1p, m2 * S2m, m2 * C2m, 0, -(mu**3) * m],
        ],
        dtype=float,
    )


def problem_1d(p: TwoBeamParams) -> SecularProblem:
    return SecularProblem(6, lambda lam: assemble_1d(lam, p), "two-beam-1d")


# --------------------------------------------------------------------------
# antenna, H_ω sector

def antenna_parts(
    lam: float, alpha: float, mass: float = 0.0, theta_g0: float = 0.0, theta_omega0: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(M_r, M_g0, M_ω0) in unknowns [A_v, B_v, A_w, B_w, A_u, A_η, A₀, B₀, g°·E₁, ω°·E₂].

    Unit materials, rigid legs. The (10, 10) mass entry is +μ²𝔪 (see notes).
    """
    if not 0.0 < alpha < math.pi / 2:
        raise SecularError(f"alpha must lie in (0, pi/2), got {alpha}")
    if lam <= 0:
        raise SecularError("λ must be positive")
    mu = lam**0.25
    Sm, Sp, Cm, Cp = _SC(mu)
    Sa, Ca = math.sin(alpha), math.cos(alpha)
    Sb, Cb = math.sin(mu * mu), math.cos(mu * mu)
    h = 1.5
    m = mass
    Mr = np.array(
        [
            [mu * Cm, mu * Sp, 0, 0, 0, 0, 0, 0, 0, 1],
            [Sm * Sa, Cm * Sa, 0, 0, -Sb * Ca, 0, 0, 0, 1, 0],
            [Sm * Ca, Cm * Ca, 0, 0, Sb * Sa, 0, 0, 0, 0, 0],
            [0, 0, Sm, Cm, 0, 0, 0, 0, 1, 0],
            [0, 0, mu * Cm * Sa, mu * Sp * Sa, 0, -Sb * Ca, 0, 0, 0, 1],
            [0, 0, mu * Cm * Ca, mu * Sp * Ca, 0, Sb * Sa, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, Sp, Cp, -1, 0],
            [0, 0, 0, 0, 0, 0, mu * Cp, mu * Sm, 0, 1],
            [h * mu * Cp * Sa, h * mu * Sm * Sa, h * mu * Cp, h * mu * Sm, h * Cb * Ca, 0,
             -mu * Cm, -mu * Sp, -mu * mu * m, 0],
            [h * Sp, h * Cp, h * Sp * Sa, h * Cp * Sa, 0, -h * Cb * Ca, Sm, Cm, 0, mu * mu * m],
        ],
        dtype=complex,
    )
    Mg = np.zeros((10, 10), dtype=complex)
    Mg[6, 6] = -theta_g0 * mu**3 * Cm
    Mg[6, 7] = -theta_g0 * mu**3 * Sp
    Mw = np.zeros((10, 10), dtype=complex)
    Mw[7, 6] = theta_omega0 * mu**2 * Sm
    Mw[7, 7] = theta_omega0 * mu**2 * Cm
    return Mr, Mg, Mw


def assemble_antenna_omega(
    lam: float,
    alpha: float,
    mass: float = 0.0,
    theta_g0: float = 0.0,
    theta_omega0: float = 0.0,
    conjugate: bool = False,
) -> np.ndarray:
    """M = M_r + M_g0 + M_ω0 for the H_ω sector (``conjugate=True``: the H_ω̄ sector)."""
    Mr, Mg, Mw = antenna_parts(lam, alpha, mass, theta_g0, theta_omega0)
    M = Mr + Mg + Mw
    return np.conj(M) if conjugate else M


def problem_antenna_omega(
    alpha: float, mass: float = 0.0, theta_g0: float = 0.0, theta_omega0: float = 0.0, conjugate: bool = False
) -> SecularProblem:
    label = "antenna-omega-bar" if conjugate else "antenna-omega"
    return SecularProblem(
        10, lambda lam: assemble_antenna_omega(lam, alpha, mass, theta_g0, theta_omega0, conjugate), label
    )


# --------------------------------------------------------------------------
# planar 3-star, out-of-plane sector

@dataclass(frozen=True)
class StarParams:
    a: float = 1.0
    d: float = 1.0
    theta_gv: float = 0.0
    theta_omega_v: float = 0.0
    theta_omega_eta: float = 0.0
    mass: float = 0.0

    @property
    def lateral(self) -> LateralBasisParams:
        return LateralBasisParams(self.a, self.theta_gv, self.theta_omega_v, 1.0)

    @property
    def torsion(self) -> TorsionBasisParams:
        return TorsionBasisParams(self.d, self.theta_omega_eta, 1.0)


@dataclass(frozen=True)
class StarBasisValues:
    phi3_d2: float
    phi3_d3: float
    phi4_d2: float
    phi4_d3: float
    psi2_d1: float


def star_basis_values(lam: float, p: StarParams) -> StarBasisValues:
    lat, tor = p.lateral.at(lam), p.torsion.at(lam)
    C, D = phi_coefficients(lat), psi_coefficients(tor)
    mu = lat.mu
    d2, d3 = lateral_functions(mu, 1.0, 2) @ C, lateral_functions(mu, 1.0, 3) @ C
    t1 = torsion_functions(tor.beta, 1.0, 1) @ D
    return StarBasisValues(float(d2[2]), float(d3[2]), float(d2[3]), float(d3[3]), float(t1[1]))


def assemble_3star_planar(lam: float, geom: GeometricBasis, p: StarParams, form: str = "expanded") -> np.ndarray:
    """3x3 matrix in unknowns [v°, ω°·E₁, ω°·E₂].

    ``form="expanded"`` uses the G-matrix factorization, ``form="split"``
    builds a·M_v + d·M_η − λ𝔪I entrywise from the I/J vectors.
    """
    bv = star_basis_values(lam, p)
    a, d, m = p.a, p.d, p.mass
    if form == "expanded":
        return (
            -a * (bv.phi3_d3 * geom.G0 + bv.phi3_d2 * geom.G1 - bv.phi4_d3 * geom.G1.T - bv.phi4_d2 * geom.GJ)
            + d * bv.psi2_d1 * geom.GI
            - lam * m * np.eye(3)
        )
    if form != "split":
        raise ValueError(f"unknown form {form!r}")
    one = np.ones(geom.size)
    J = (geom.J_E1, geom.J_E2)
    I = (geom.I_E1, geom.I_E2)
    Mv = np.zeros((3, 3))
    Mv[0, 0] = -bv.phi3_d3 * (one @ one)
    for l in range(2):
        Mv[0, l + 1] = bv.phi4_d3 * (one @ J[l])
        Mv[l + 1, 0] = -bv.phi3_d2 * (one @ J[l])
        for q in range(2):
            Mv[l + 1, q + 1] = bv.phi4_d2 * (J[l] @ J[q])
    Me = np.zeros((3, 3))
    for l in range(2):
        for q in range(2):
            Me[l + 1, q + 1] = bv.psi2_d1 * (I[l] @ I[q])
    return a * Mv + d * Me - lam * m * np.eye(3)


def star_exceptional(p: StarParams) -> Callable[[float], list[float]]:
    def points(lam_max: float) -> list[float]:
        return [x for x, _ in exceptional_set(lam_max, p.lateral, p.torsion)]

    return points


def star_frame(geom: GeometricBasis, p: StarParams) -> FrameGraph:
    """Star frame (unit fixed edges into a joint at the origin) matching ``geom`` and ``p``."""
    coupling = ComplianceSpec(
        np.diag([0.0, 0.0, p.theta_gv]), np.diag([p.theta_omega_eta, p.theta_omega_v, 0.0])
    )
    center = VertexSpec("vc", (0, 0, 0), p.mass, "joint", {f"e{s + 1}": coupling for s in range(geom.size)})
    vertices, edges = [center], []
    for s in range(geom.size):
        i, j = geom.axis(s), geom.lateral(s)
        leaf = VertexSpec(f"v{s + 1}", -i, 0.0, "fixed")
        vertices.append(leaf)
        edges.append(
            Edge(f"e{s + 1}", leaf.id, "vc", 1.0, EdgeFrame(i, j, np.cross(i, j)), MaterialParams(a=p.a, d=p.d))
        )
    return FrameGraph(vertices, edges)


def problem_3star_planar(geom: GeometricBasis, p: StarParams, form: str = "expanded") -> SecularProblem:
    system = FundamentalSystem(star_frame(geom, p), ("v", "eta"))
    return SecularProblem(
        3,
        lambda lam: assemble_3star_planar(lam, geom, p, form),
        "star3-planar",
        star_exceptional(p),
        lambda lam: check_exceptional(lam, system),
        hermitian=True,
    )


# --------------------------------------------------------------------------
# general vertex blocks

def _edge_blocks(spec: ComplianceSpec, kind: str) -> tuple[np.ndarray, tuple[bool, bool, bool]]:
    return spec.theta(kind), spec.free(kind)


def _pair(frame: FrameGraph, vid: str, lam: float, kind: str) -> VertexBlockPair:
    v = frame.vertex(vid)
    inc = frame.incidence[vid]
    n = len(inc)
    Bt = [e.frame.matrix.T for e, _ in inc]
    S = [s for _, s in inc]
    Th = [v.couplings[e.id].theta(kind) for e, _ in inc]
    free = [v.couplings[e.id].free(kind) for e, _ in inc]
    m = v.mass
    if not any(any(f) for f in free):
        A = np.zeros((3 * n, 3 * n))
        B = np.zeros((3 * n, 3 * n))
        for r in range(n - 1):
            A[3 * r : 3 * r + 3, 3 * r : 3 * r + 3] = Bt[r]
            A[3 * r : 3 * r + 3, 3 * r + 3 : 3 * r + 6] = -Bt[r + 1]
            B[3 * r : 3 * r + 3, 3 * r : 3 * r + 3] = S[r] * Bt[r] @ Th[r]
            B[3 * r : 3 * r + 3, 3 * r + 3 : 3 * r + 6] = -S[r + 1] * Bt[r + 1] @ Th[r + 1]
        last = slice(3 * n - 3, 3 * n)
        A[last, 0:3] = -lam * m * Bt[0]
        for r in range(n):
            B[last, 3 * r : 3 * r + 3] = S[r] * Bt[r]
        B[last, 0:3] -= lam * m * S[0] * Bt[0] @ Th[0]
        return VertexBlockPair(A, B)

    # Free axes: write every condition with g° explicit, then eliminate g°.
    rows_g, rows_f, rows_o = [], [], []
    for r in range(n):
        Bl = Bt[r].T
        for ax in range(3):
            rg = np.zeros(3 * n)
            rf = np.zeros(3 * n)
            ro = np.zeros(3)
            if free[r][ax]:
                rf[3 * r + ax] = 1.0
            else:
                rg[3 * r + ax] = 1.0
                rf[3 * r : 3 * r + 3] = S[r] * Th[r][ax]
                ro = -Bl[ax]
            rows_g.append(rg)
            rows_f.append(rf)
            rows_o.append(ro)
    for ax in range(3):
        rg = np.zeros(3 * n)
        rf = np.concatenate([S[r] * Bt[r][ax] for r in range(n)])
        ro = -lam * m * np.eye(3)[ax]
        rows_g.append(rg)
        rows_f.append(rf)
        rows_o.append(ro)
    G, Fm, Z = np.array(rows_g), np.array(rows_f), np.array(rows_o)
    left = scipy.linalg.null_space(Z.T).T
    A, B = left @ G, left @ Fm
    keep = np.linalg.norm(np.hstack([A, B]), axis=1) > 1e-12
    return VertexBlockPair(A[keep], B[keep])


def assemble_vertex_blocks(frame: FrameGraph, vertex: str, lam: float) -> tuple[VertexBlockPair, VertexBlockPair]:
    """(displacement, rotation) block pairs with 𝔸 g + 𝔹 f = 0 at a joint.

    Continuity rows are expressed in global components (Bᵀ of the local
    traces); the mass row includes the compliance jump of the first edge.
    """
    v = frame.vertex(vertex)
    if v.kind != "joint":
        raise SecularError(f"vertex {vertex!r} is not a joint")
    for e, _ in frame.incidence[vertex]:
        if e.id not in v.couplings:
            raise SecularError(f"vertex {vertex!r} has no coupling for edge {e.id!r}")
    return _pair(frame, vertex, lam, "g"), _pair(frame, vertex, lam, "omega")


# --------------------------------------------------------------------------
# generic fundamental-system assembly (any frame)

def _span_basis(vectors: list[np.ndarray]) -> np.ndarray:
    if not vectors:
        return np.zeros((3, 0))
    u, s, _ = np.linalg.svd(np.array(vectors).T)
    rank = int(np.sum(s > 1e-10 * max(s[0], 1.0)))
    return u[:, :rank]


class FundamentalSystem:
    """Raw boundary/vertex-condition matrix of a frame on the fundamental solutions.

    Unknowns are the coefficients of every active field on every edge (in
    the overflow-free exponential/trigonometric system) followed by the
    joint unknowns g°, ω° restricted to the span reachable from non-free
    active axes. The matrix is entire in λ > 0; it is singular exactly at
    eigenvalues of the (field-restricted) frame.
    """

    def __init__(self, frame: FrameGraph, fields: Sequence[str] = F.FIELDS):
        self.frame = frame
        self.fields = tuple(f for f in F.FIELDS if f in fields)
        self.slots: dict[tuple[str, str], slice] = {}
        off = 0
        for e in frame.edges:
            for f in self.fields:
                n = F.basis_size(f)
                self.slots[(e.id, f)] = slice(off, off + n)
                off += n
        self.n_edge = off
        self.vertex_slots: dict[tuple[str, str], tuple[slice, np.ndarray]] = {}
        inc = frame.incidence
        for v in frame.joints():
            for kind in ("g", "omega"):
                vecs = []
                for e, _ in inc[v.id]:
                    free = v.couplings[e.id].free(kind)
                    for ax in range(3):
                        if self._axis_active(kind, ax) and not free[ax]:
                            vecs.append(e.frame.matrix[ax])
                W = _span_basis(vecs)
                self.vertex_slots[(v.id, kind)] = (slice(off, off + W.shape[1]), W)
                off += W.shape[1]
        self.dimension = off

    def _axis_active(self, kind: str, ax: int) -> bool:
        return F.TRACE[kind][ax][0] in self.fields

    def _functional(self, lam: float, e: Edge, x: float, table, kind: str, ax: int, flux: bool) -> np.ndarray:
        row = np.zeros(self.dimension)
        field_name, order, sign = table[kind][ax]
        stiff = getattr(e.material, F.STIFFNESS[field_name])
        k = F.wavenumber(field_name, lam, stiff)
        coeff = sign * (stiff if flux else 1.0)
        row[self.slots[(e.id, field_name)]] = coeff * F.basis_row(field_name, k, x, order, e.length)
        return row

    def trace(self, lam, e, x, kind, ax):
        return self._functional(lam, e, x, F.TRACE, kind, ax, False)

    def flux(self, lam, e, x, kind, ax):
        return self._functional(lam, e, x, F.FLUX, kind, ax, True)

    def matrix(self, lam: float) -> np.ndarray:
        rows: list[np.ndarray] = []
        inc = self.frame.incidence
        for v in self.frame.vertices:
            for e, s in inc[v.id]:
                x = 0.0 if s < 0 else e.length
                for kind in ("g", "omega"):
                    axes = [ax for ax in range(3) if self._axis_active(kind, ax)]
                    if v.kind == "fixed":
                        rows += [self.trace(lam, e, x, kind, ax) for ax in axes]
                    elif v.kind == "free":
                        rows += [self.flux(lam, e, x, kind, ax) for ax in axes]
                    else:
                        spec = v.couplings[e.id]
                        free = spec.free(kind)
                        theta = spec.theta(kind)
                        sl, W = self.vertex_slots[(v.id, kind)]
                        Bw = e.frame.matrix @ W
                        fluxes = {ax: self.flux(lam, e, x, kind, ax) for ax in axes}
                        for ax in axes:
                            if free[ax]:
                                rows.append(fluxes[ax])
                                continue
                            row = self.trace(lam, e, x, kind, ax)
                            for bx in axes:
                                if not free[bx] and theta[ax, bx] != 0.0:
                                    row = row + s * theta[ax, bx] * fluxes[bx]
                            row[sl] -= Bw[ax]
                            rows.append(row)
            if v.kind == "joint":
                for kind in ("g", "omega"):
                    sl, W = self.vertex_slots[(v.id, kind)]
                    if W.shape[1] == 0:
                        continue
                    bal = np.zeros((W.shape[1], self.dimension))
                    for e, s in inc[v.id]:
                        x = 0.0 if s < 0 else e.length
                        proj = W.T @ e.frame.matrix.T
                        for ax in range(3):
                            if self._axis_active(kind, ax):
                                bal += s * np.outer(proj[:, ax], self.flux(lam, e, x, kind, ax))
                    bal[:, sl] -= lam * v.mass * np.eye(W.shape[1])
                    rows += list(bal)
        M = np.array(rows)
        if M.shape != (self.dimension, self.dimension):
            raise SecularError(f"fundamental system is not square: {M.shape}")
        return M

    def problem(self, label: str = "fundamental") -> SecularProblem:
        return SecularProblem(
            self.dimension, lambda lam: _equilibrate(self.matrix(lam)), label, refine_below=FUNDAMENTAL_REFINE
        )

    def edge_fields(self, lam: float, x: np.ndarray) -> dict[str, dict[str, F.FieldFunction]]:
        out: dict[str, dict[str, F.FieldFunction]] = {}
        for e in self.frame.edges:
            per = {}
            for f in F.FIELDS:
                if f in self.fields:
                    stiff = getattr(e.material, F.STIFFNESS[f])
                    per[f] = F.FieldFunction(f, F.wavenumber(f, lam, stiff), x[self.slots[(e.id, f)]], e.length)
                else:
                    per[f] = F.zero_field(f, e.length)
            out[e.id] = per
        return out

    def vertex_values(self, x: np.ndarray) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        out = {}
        for v in self.frame.joints():
            sl_g, Wg = self.vertex_slots[(v.id, "g")]
            sl_o, Wo = self.vertex_slots[(v.id, "omega")]
            out[v.id] = (Wg @ x[sl_g], Wo @ x[sl_o])
        return out


def check_exceptional(
    lam: float,
    context: FrameGraph | FundamentalSystem,
    fields: Sequence[str] = F.FIELDS,
    tol: float = NULL_TOL,
) -> RootRecord | None:
    """Decide whether an exceptional λ is an eigenvalue using the raw fundamental system."""
    if lam <= 0:
        return None
    system = context if isinstance(context, FundamentalSystem) else FundamentalSystem(context, fields)
    rec = make_record(_equilibrate(system.matrix(lam)), lam, origin="exceptional", tol=tol)
    return rec if rec.multiplicity > 0 else None

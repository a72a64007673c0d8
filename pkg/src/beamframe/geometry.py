"""Local/global transformations, k-plane preserving stiffness and planar geometric data."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

PLANAR_TOL = 1e-12
KPLANE_TOL = 1e-12


class _HasBasis(Protocol):
    i: np.ndarray
    j: np.ndarray
    k: np.ndarray


def rotation_to_local(frame: _HasBasis) -> np.ndarray:
    """Matrix B with rows (i, j, k): ``B @ x_global`` gives local components."""
    return np.vstack([frame.i, frame.j, frame.k]).astype(float)


def derive_edge_frame(
    chord: Sequence[float], j_hint: Sequence[float] | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed frame with ``i`` along ``chord``.

    Without a hint, ``j = E3 x i`` (normalized) for non-vertical edges, which
    keeps ``k = E3`` for edges in the E1E2 plane; vertical edges use ``j = E2``.
    A hint is Gram-Schmidt projected against ``i``.
    """
    chord = np.asarray(chord, dtype=float)
    i = chord / np.linalg.norm(chord)
    if j_hint is not None:
        j = np.asarray(j_hint, dtype=float)
        if abs(j @ i) > 1e-14 or abs(np.linalg.norm(j) - 1.0) > 1e-14:
            j = j - (j @ i) * i
            nrm = np.linalg.norm(j)
            if nrm < 1e-8:
                raise ValueError("j_hint is parallel to the edge axis")
            j = j / nrm
    elif abs(i @ E3) < 1.0 - 1e-8:
        j = np.cross(E3, i)
        j = j / np.linalg.norm(j)
    else:
        j = E2 - (E2 @ i) * i
        j = j / np.linalg.norm(j)
    k = np.cross(i, j)
    return i, j, k


def is_k_plane_preserving(K: np.ndarray, tol: float = KPLANE_TOL) -> bool:
    """True when K couples nothing to the k axis and is positive definite."""
    K = np.asarray(K, dtype=float)
    if max(abs(K[0, 2]), abs(K[1, 2]), abs(K[2, 0]), abs(K[2, 1])) > tol:
        return False
    k1, k2, k3, kc = K[0, 0], K[1, 1], K[2, 2], K[0, 1]
    return bool(k3 > 0 and k1 > 0 and k1 * k2 - kc * kc > 0)


def apply_k_inverse(K: np.ndarray, x: Sequence[float], tol: float = 1e-14) -> np.ndarray:
    """K⁻¹x for a k-plane preserving K using the 2x2 + 1x1 block structure."""
    K = np.asarray(K, dtype=float)
    x = np.asarray(x)
    k1, k2, k3, kc = K[0, 0], K[1, 1], K[2, 2], K[0, 1]
    det = k1 * k2 - kc * kc
    scale = max(1.0, abs(k1 * k2))
    if det <= tol * scale or k3 <= tol * max(1.0, abs(k3)):
        raise np.linalg.LinAlgError("k-plane block is singular")
    return np.array(
        [(k2 * x[0] - kc * x[1]) / det, (k1 * x[1] - kc * x[0]) / det, x[2] / k3]
    )


@dataclass(frozen=True)
class GeometricBasis:
    """Projections of the planar edge axes onto E1, E2 and the derived 3x3 matrices.

    Rows/columns of the 3x3 matrices are ordered (v°, ω°·E1, ω°·E2).
    """

    I_E1: np.ndarray
    I_E2: np.ndarray
    J_E1: np.ndarray
    J_E2: np.ndarray
    G0: np.ndarray
    G1: np.ndarray
    GJ: np.ndarray
    GI: np.ndarray

    @property
    def size(self) -> int:
        return len(self.I_E1)

    def axis(self, s: int) -> np.ndarray:
        return np.array([self.I_E1[s], self.I_E2[s], 0.0])

    def lateral(self, s: int) -> np.ndarray:
        return np.array([self.J_E1[s], self.J_E2[s], 0.0])


def geometric_vectors(frames: Sequence[_HasBasis]) -> GeometricBasis:
    """Geometric vectors and matrices of a planar star (all ``k_e = E3``)."""
    for n, f in enumerate(frames):
        if abs(f.k[0]) > PLANAR_TOL or abs(f.k[1]) > PLANAR_TOL or abs(f.k[2] - 1.0) > PLANAR_TOL:
            raise ValueError(f"frame {n} is not planar (k != E3)")
    I = np.array([[f.i @ E1 for f in frames], [f.i @ E2 for f in frames]])
    J = np.array([[f.j @ E1 for f in frames], [f.j @ E2 for f in frames]])
    ones = np.ones(len(frames))

    G0 = np.zeros((3, 3))
    G0[0, 0] = ones @ ones
    G1 = np.zeros((3, 3))
    G1[1, 0] = ones @ J[0]
    G1[2, 0] = ones @ J[1]
    GJ = np.zeros((3, 3))
    GJ[1:, 1:] = J @ J.T
    GI = np.zeros((3, 3))
    GI[1:, 1:] = I @ I.T
    return GeometricBasis(I[0], I[1], J[0], J[1], G0, G1, GJ, GI)


def d3_matrices() -> tuple[np.ndarray, np.ndarray]:
    """Rotation by 2π/3 about E3 and the reflection diag(1, -1, 1)."""
    c, s = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    F = np.diag([1.0, -1.0, 1.0])
    return R, F


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of SO(3)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q

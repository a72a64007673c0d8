"""Conforming Galerkin discretization of the frame energy form.

Lateral fields v, w use cubic Hermite elements, u and η quadratic Lagrange
elements. Joint unknowns g°, ω° are explicit degrees of freedom restricted to
the span reachable from non-free axes. Semi-rigid axes become springs with
stiffness 1/θ along the eigenvectors of the non-free compliance block; rigid
directions (θ = 0) are imposed by eliminating edge-end traces. Massless joint
coordinates are condensed statically before the generalized eigenproblem
K x = λ M x is solved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq

from . import fields as F
from .frame import FrameGraph, FrameError, validate

RIGID_RTOL = 1e-12
DENSE_LIMIT = 200
SUBSPACE_MAXITER = 500
SUBSPACE_RTOL = 1e-10
SUBSPACE_POLISH = 2
SUBSPACE_STALL = 12
SUBSPACE_SEED = 20240601


class OracleError(RuntimeError):
    """Discretization or eigensolver failure."""


# --------------------------------------------------------------------------
# element matrices

def hermite_element(h: float) -> tuple[np.ndarray, np.ndarray]:
    """(∫φ''φ'', ∫φφ) for cubic Hermite dofs (w0, w0', w1, w1')."""
    K = np.array(
        [
            [12.0, 6 * h, -12.0, 6 * h],
            [6 * h, 4 * h * h, -6 * h, 2 * h * h],
            [-12.0, -6 * h, 12.0, -6 * h],
            [6 * h, 2 * h * h, -6 * h, 4 * h * h],
        ]
    ) / h**3
    M = np.array(
        [
            [156.0, 22 * h, 54.0, -13 * h],
            [22 * h, 4 * h * h, 13 * h, -3 * h * h],
            [54.0, 13 * h, 156.0, -22 * h],
            [-13 * h, -3 * h * h, -22 * h, 4 * h * h],
        ]
    ) * h / 420.0
    return K, M


def lagrange_element(h: float) -> tuple[np.ndarray, np.ndarray]:
    """(∫φ'φ', ∫φφ) for quadratic Lagrange nodes (0, h/2, h)."""
    K = np.array([[7.0, -8.0, 1.0], [-8.0, 16.0, -8.0], [1.0, -8.0, 7.0]]) / (3 * h)
    M = np.array([[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]]) * h / 30.0
    return K, M


def hermite_shape(xi: np.ndarray, h: float, order: int = 0) -> np.ndarray:
    """Hermite shape functions (or their x-derivatives) at local ξ ∈ [0, 1]; shape (..., 4)."""
    xi = np.asarray(xi, dtype=float)
    if order == 0:
        cols = [1 - 3 * xi**2 + 2 * xi**3, h * (xi - 2 * xi**2 + xi**3), 3 * xi**2 - 2 * xi**3, h * (xi**3 - xi**2)]
    elif order == 1:
        cols = [(-6 * xi + 6 * xi**2) / h, 1 - 4 * xi + 3 * xi**2, (6 * xi - 6 * xi**2) / h, 3 * xi**2 - 2 * xi]
    else:
        raise ValueError("order must be 0 or 1")
    return np.stack(cols, axis=-1)


def lagrange_shape(xi: np.ndarray, h: float, order: int = 0) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if order == 0:
        cols = [2 * (xi - 0.5) * (xi - 1), -4 * xi * (xi - 1), 2 * xi * (xi - 0.5)]
    elif order == 1:
        cols = [(4 * xi - 3) / h, (-8 * xi + 4) / h, (4 * xi - 1) / h]
    else:
        raise ValueError("order must be 0 or 1")
    return np.stack(cols, axis=-1)


# --------------------------------------------------------------------------
# discrete form

@dataclass
class DiscreteForm:
    """Reduced pencil (K, M) plus the map back to the full degree-of-freedom vector.

    ``dof_map[n]`` describes full dof n as ``(edge, field, node, derivative)``
    or ``(vertex, 'g'|'omega', coordinate)`` where joint coordinates live in
    the orthonormal span ``spans[(vertex, kind)]``.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix
    dof_map: list[tuple]
    frame: FrameGraph
    elements: int
    fields: tuple[str, ...]
    spans: dict[tuple[str, str], np.ndarray]
    _recover: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    springs: list[tuple[float, dict[int, float]]] = field(repr=False)
    _edge_dofs: dict[tuple[str, str], np.ndarray] = field(repr=False)
    _vertex_dofs: dict[tuple[str, str], np.ndarray] = field(repr=False)

    @property
    def size(self) -> int:
        return self.K.shape[0]

    def recover(self, y: np.ndarray) -> np.ndarray:
        """Full dof vector (edge nodes and joint coordinates) from a reduced vector."""
        return self._recover(np.asarray(y))

    def edge_dofs(self, edge: str, fld: str) -> np.ndarray:
        return self._edge_dofs[(edge, fld)]

    def sample(self, x_full: np.ndarray, edge: str, fld: str, xs, order: int = 0) -> np.ndarray:
        """Field (or its first derivative) on ``edge`` at abscissae ``xs``."""
        e = self.frame.edge(edge)
        xs = np.asarray(xs, dtype=float)
        if fld not in self.fields:
            return np.zeros(xs.shape, dtype=x_full.dtype)
        n = self.elements
        h = e.length / n
        idx = np.clip((xs / h).astype(int), 0, n - 1)
        xi = xs / h - idx
        dofs = self._edge_dofs[(edge, fld)]
        if fld in F.LATERAL:
            N = hermite_shape(xi, h, order)
            loc = np.stack([2 * idx, 2 * idx + 1, 2 * idx + 2, 2 * idx + 3], axis=-1)
        else:
            N = lagrange_shape(xi, h, order)
            loc = np.stack([2 * idx, 2 * idx + 1, 2 * idx + 2], axis=-1)
        return np.sum(N * x_full[dofs[loc]], axis=-1)

    def rayleigh(self, x_full: np.ndarray) -> float:
        """Energy quotient 𝒮(x, x)/‖x‖² evaluated element by element.

        Assembled K applied to a smooth vector cancels catastrophically on
        fine meshes; local curvatures do not, so this recovers eigenvalues
        to near machine precision from moderately accurate eigenvectors.
        """
        num = den = 0.0
        for e in self.frame.edges:
            h = e.length / self.elements
            for f in self.fields:
                stiff = getattr(e.material, F.STIFFNESS[f])
                loc = x_full[self._edge_dofs[(e.id, f)][_LOCAL[f](self.elements)]]
                d_hi, d_lo = _QUAD[f](h)
                num += stiff * h * np.sum(_GW * np.abs(loc @ d_hi.T) ** 2)
                den += h * np.sum(_GW * np.abs(loc @ d_lo.T) ** 2)
        for kappa, fn in self.springs:
            val = sum(c * x_full[d] for d, c in fn.items())
            num += kappa * abs(val) ** 2
        for v in self.frame.joints():
            if v.mass > 0:
                for kind in ("g", "omega"):
                    den += v.mass * float(np.sum(np.abs(x_full[self._vertex_dofs[(v.id, kind)]]) ** 2))
        return float(num / den)

    def vertex_values(self, x_full: np.ndarray) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        out = {}
        for v in self.frame.joints():
            vals = []
            for kind in ("g", "omega"):
                W = self.spans[(v.id, kind)]
                vals.append(W @ x_full[self._vertex_dofs[(v.id, kind)]])
            out[v.id] = (vals[0], vals[1])
        return out


_GX, _GW = np.polynomial.legendre.leggauss(4)
_GX = 0.5 * (_GX + 1.0)
_GW = 0.5 * _GW


def _hermite_quad(h: float) -> tuple[np.ndarray, np.ndarray]:
    xi = _GX
    d2 = np.stack([(-6 + 12 * xi) / h**2, (-4 + 6 * xi) / h, (6 - 12 * xi) / h**2, (6 * xi - 2) / h], -1)
    return d2, hermite_shape(xi, h, 0)


def _lagrange_quad(h: float) -> tuple[np.ndarray, np.ndarray]:
    return lagrange_shape(_GX, h, 1), lagrange_shape(_GX, h, 0)


def _hermite_local(n: int) -> np.ndarray:
    e = np.arange(n)[:, None]
    return 2 * e + np.arange(4)[None, :]


def _lagrange_local(n: int) -> np.ndarray:
    e = np.arange(n)[:, None]
    return 2 * e + np.arange(3)[None, :]


_QUAD = {"v": _hermite_quad, "w": _hermite_quad, "u": _lagrange_quad, "eta": _lagrange_quad}
_LOCAL = {"v": _hermite_local, "w": _hermite_local, "u": _lagrange_local, "eta": _lagrange_local}


def _span_basis(vectors: list[np.ndarray]) -> np.ndarray:
    if not vectors:
        return np.zeros((3, 0))
    u, s, _ = np.linalg.svd(np.array(vectors).T)
    rank = int(np.sum(s > 1e-10 * max(s[0], 1.0)))
    return u[:, :rank]


def _axis_active(fields: Sequence[str], kind: str, ax: int) -> bool:
    return F.TRACE[kind][ax][0] in fields


class _Builder:
    def __init__(self, frame: FrameGraph, n: int, fields: tuple[str, ...]):
        self.frame, self.n, self.fields = frame, n, fields
        self.dof_map: list[tuple] = []
        self.edge_dofs: dict[tuple[str, str], np.ndarray] = {}
        self.vertex_dofs: dict[tuple[str, str], np.ndarray] = {}
        self.spans: dict[tuple[str, str], np.ndarray] = {}
        for e in frame.edges:
            for f in fields:
                start = len(self.dof_map)
                if f in F.LATERAL:
                    self.dof_map += [(e.id, f, node, d) for node in range(n + 1) for d in (0, 1)]
                else:
                    self.dof_map += [(e.id, f, node, 0) for node in range(2 * n + 1)]
                self.edge_dofs[(e.id, f)] = np.arange(start, len(self.dof_map))
        inc = frame.incidence
        for v in frame.joints():
            for kind in ("g", "omega"):
                vecs = [
                    e.frame.matrix[ax]
                    for e, _ in inc[v.id]
                    for ax in range(3)
                    if _axis_active(fields, kind, ax) and not v.couplings[e.id].free(kind)[ax]
                ]
                W = _span_basis(vecs)
                self.spans[(v.id, kind)] = W
                start = len(self.dof_map)
                self.dof_map += [(v.id, kind, c) for c in range(W.shape[1])]
                self.vertex_dofs[(v.id, kind)] = np.arange(start, len(self.dof_map))
        self.size = len(self.dof_map)

    def trace_dof(self, e, s: int, kind: str, ax: int) -> tuple[int, float]:
        """(dof index, sign) of a trace component at the edge end with orientation s."""
        fld, order, sign = F.TRACE[kind][ax]
        dofs = self.edge_dofs[(e.id, fld)]
        if fld in F.LATERAL:
            node = 0 if s < 0 else self.n
            return int(dofs[2 * node + order]), sign
        return int(dofs[0 if s < 0 else -1]), sign

    def assemble(self):
        rows, cols, kv, mv = [], [], [], []

        def add(idx, Ke, Me):
            r = np.repeat(idx, len(idx))
            c = np.tile(idx, len(idx))
            rows.append(r)
            cols.append(c)
            kv.append(Ke.ravel())
            mv.append(Me.ravel())

        for e in self.frame.edges:
            h = e.length / self.n
            for f in self.fields:
                stiff = getattr(e.material, F.STIFFNESS[f])
                dofs = self.edge_dofs[(e.id, f)]
                if f in F.LATERAL:
                    Ke, Me = hermite_element(h)
                    for el in range(self.n):
                        add(dofs[2 * el : 2 * el + 4], stiff * Ke, Me)
                else:
                    Ke, Me = lagrange_element(h)
                    for el in range(self.n):
                        add(dofs[2 * el : 2 * el + 3], stiff * Ke, Me)

        constraints: list[dict[int, float]] = []
        springs: list[tuple[float, dict[int, float]]] = []
        inc = self.frame.incidence
        for v in self.frame.vertices:
            for e, s in inc[v.id]:
                for kind in ("g", "omega"):
                    axes = [ax for ax in range(3) if _axis_active(self.fields, kind, ax)]
                    if v.kind == "fixed":
                        for ax in axes:
                            d, _ = self.trace_dof(e, s, kind, ax)
                            constraints.append({d: 1.0})
                        continue
                    if v.kind != "joint":
                        continue
                    spec = v.couplings[e.id]
                    free = spec.free(kind)
                    N = [ax for ax in axes if not free[ax]]
                    if not N:
                        continue
                    theta = spec.theta(kind)[np.ix_(N, N)]
                    W = self.spans[(v.id, kind)]
                    BW = e.frame.matrix @ W
                    zdofs = self.vertex_dofs[(v.id, kind)]
                    tvals, q_vecs = np.linalg.eigh(0.5 * (theta + theta.T))
                    scale = max(1.0, float(np.max(np.abs(tvals))))
                    for t, q in zip(tvals, q_vecs.T):
                        # functional q·((B W z)_N − trace_N)
                        fn: dict[int, float] = {}
                        for n_ax, ax in enumerate(N):
                            if q[n_ax] == 0.0:
                                continue
                            d, sign = self.trace_dof(e, s, kind, ax)
                            fn[d] = fn.get(d, 0.0) - q[n_ax] * sign
                            for c, zd in enumerate(zdofs):
                                fn[int(zd)] = fn.get(int(zd), 0.0) + q[n_ax] * BW[ax, c]
                        if t <= RIGID_RTOL * scale:
                            constraints.append(fn)
                        else:
                            springs.append((1.0 / t, fn))

        for kappa, fn in springs:
            idx = np.array(list(fn.keys()))
            val = np.array(list(fn.values()))
            add(idx, kappa * np.outer(val, val), np.zeros((len(idx), len(idx))))
        for v in self.frame.joints():
            if v.mass > 0:
                for kind in ("g", "omega"):
                    idx = self.vertex_dofs[(v.id, kind)]
                    if len(idx):
                        add(idx, np.zeros((len(idx), len(idx))), v.mass * np.eye(len(idx)))

        r = np.concatenate(rows)
        c = np.concatenate(cols)
        K = sp.coo_matrix((np.concatenate(kv), (r, c)), shape=(self.size, self.size)).tocsr()
        M = sp.coo_matrix((np.concatenate(mv), (r, c)), shape=(self.size, self.size)).tocsr()
        return K, M, constraints, springs


def _elimination(size: int, constraints: list[dict[int, float]], prefer_slave: np.ndarray) -> sp.csr_matrix:
    """Sparse Z with columns spanning {x : C x = 0}; slaves picked among preferred dofs first."""
    if not constraints:
        return sp.identity(size, format="csr")
    # group constraints into connected local systems
    parent = list(range(len(constraints)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    owner: dict[int, int] = {}
    for n, fn in enumerate(constraints):
        for d in fn:
            if d in owner:
                ra, rb = find(owner[d]), find(n)
                if ra != rb:
                    parent[ra] = rb
            else:
                owner[d] = n
    groups: dict[int, list[int]] = {}
    for n in range(len(constraints)):
        groups.setdefault(find(n), []).append(n)

    slave_rows: dict[int, dict[int, float]] = {}
    for members in groups.values():
        dofs = sorted({d for n in members for d in constraints[n]})
        pos = {d: k for k, d in enumerate(dofs)}
        C = np.zeros((len(members), len(dofs)))
        for r_, n in enumerate(members):
            for d, val in constraints[n].items():
                C[r_, pos[d]] += val
        rank = np.linalg.matrix_rank(C, tol=1e-12 * max(1.0, np.abs(C).max()))
        if rank == 0:
            continue
        order = sorted(dofs, key=lambda d: (not prefer_slave[d], d))
        slaves: list[int] = []
        for d in order:
            trial = slaves + [d]
            if np.linalg.matrix_rank(C[:, [pos[t] for t in trial]], tol=1e-12 * max(1.0, np.abs(C).max())) == len(trial):
                slaves = trial
            if len(slaves) == rank:
                break
        masters = [d for d in dofs if d not in slaves]
        CS = C[:, [pos[d] for d in slaves]]
        CM = C[:, [pos[d] for d in masters]]
        T = -np.linalg.lstsq(CS, CM, rcond=None)[0] if masters else np.zeros((len(slaves), 0))
        for k, d in enumerate(slaves):
            slave_rows[d] = {m: T[k, j] for j, m in enumerate(masters) if T[k, j] != 0.0}

    masters_all = [d for d in range(size) if d not in slave_rows]
    col = {d: k for k, d in enumerate(masters_all)}
    rr, cc, vv = [], [], []
    for d in range(size):
        if d in col:
            rr.append(d)
            cc.append(col[d])
            vv.append(1.0)
        else:
            for m, val in slave_rows[d].items():
                rr.append(d)
                cc.append(col[m])
                vv.append(val)
    return sp.csr_matrix((vv, (rr, cc)), shape=(size, len(masters_all)))


def discretize_form(
    frame: FrameGraph, elements_per_edge: int, fields: Sequence[str] = F.FIELDS
) -> DiscreteForm:
    """Assemble the reduced generalized eigenproblem for ``frame``.

    ``fields`` restricts the discretization to an invariant subset (for
    example ``("w",)`` for the in-plane lateral problem of a straight frame);
    omitted fields are identically zero.
    """
    if elements_per_edge < 2:
        raise OracleError("elements_per_edge must be >= 2")
    bad = [d for d in validate(frame)]
    if bad:
        raise FrameError("frame failed validation", bad)
    fields = tuple(f for f in F.FIELDS if f in fields)
    if not fields:
        raise OracleError("no fields selected")
    for v in frame.joints():
        for eid, spec in v.couplings.items():
            for kind in ("g", "omega"):
                th, free = spec.theta(kind), spec.free(kind)
                for ax in range(3):
                    if free[ax] and np.any(th[ax] != 0.0):
                        raise OracleError(
                            f"vertex {v.id!r}, edge {eid!r}: free {kind} axis {ax} has nonzero compliance"
                        )

    b = _Builder(frame, elements_per_edge, fields)
    K, M, constraints, springs = b.assemble()
    prefer = np.zeros(b.size, dtype=bool)
    for idx in b.edge_dofs.values():
        prefer[idx] = True
    Z = _elimination(b.size, constraints, prefer)
    Kr = (Z.T @ K @ Z).tocsr()
    Mr = (Z.T @ M @ Z).tocsr()

    # static condensation of massless coordinates
    diag = Mr.diagonal()
    mscale = max(float(np.max(np.abs(diag))), 1e-300)
    massless = np.nonzero(np.abs(diag) <= 1e-14 * mscale)[0]
    keep = np.setdiff1d(np.arange(Kr.shape[0]), massless)
    if len(massless):
        Knn = Kr[massless][:, massless].toarray()
        Knm = Kr[massless][:, keep]
        try:
            cho = scipy.linalg.cho_factor(Knn)
        except np.linalg.LinAlgError as exc:
            raise OracleError("massless joint coordinates without stiffness (mechanism)") from exc
        X = scipy.linalg.cho_solve(cho, Knm.toarray())
        X[np.abs(X) < 1e-300] = 0.0
        Xs = sp.csr_matrix(X)
        Kc = (Kr[keep][:, keep] - Knm.T @ Xs).tocsr()
        Mc = Mr[keep][:, keep].tocsr()
    else:
        Xs = None
        Kc, Mc = Kr, Mr
    Kc = 0.5 * (Kc + Kc.T)
    Mc = 0.5 * (Mc + Mc.T)

    def recover(y: np.ndarray) -> np.ndarray:
        yr = np.zeros((Kr.shape[0],) + y.shape[1:], dtype=y.dtype)
        yr[keep] = y
        if Xs is not None:
            yr[massless] = -(Xs @ y)
        return Z @ yr

    return DiscreteForm(
        Kc.tocsr(), Mc.tocsr(), b.dof_map, frame, elements_per_edge, fields, b.spans,
        recover, springs, b.edge_dofs, b.vertex_dofs,
    )


# --------------------------------------------------------------------------
# solver

def solve_generalized(
    discrete: DiscreteForm | tuple, count: int, vectors: bool = False, refine: bool = True
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Smallest ``count`` eigenvalues of K x = λ M x (ascending).

    ``discrete`` may also be a plain (K, M) pair. With ``vectors=True`` the
    reduced, M-orthonormal eigenvectors are returned as columns. For a
    :class:`DiscreteForm` the eigenvalues are replaced by element-wise energy
    quotients of the eigenvectors unless ``refine`` is false.
    """
    K, M = (discrete.K, discrete.M) if isinstance(discrete, DiscreteForm) else discrete
    n = K.shape[0]
    if count < 1:
        raise ValueError("count must be >= 1")
    count = min(count, n)
    try:
        if n <= DENSE_LIMIT or count >= n - 1 or n < 3 * count + 20:
            Kd = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
            Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
            w, V = scipy.linalg.eigh(Kd, Md, subset_by_index=[0, count - 1])
        else:
            K, M = sp.csc_matrix(K), sp.csc_matrix(M)
            shift = -1e-3 * abs(K.diagonal()).max() / max(abs(M.diagonal()).max(), 1e-300)
            shift = max(shift, -1.0)
            w, V = _subspace_iteration(K, M, count, shift)
    except (np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        cond = _condition_estimate(M)
        raise OracleError(f"eigensolver failed ({exc}); mass matrix condition estimate {cond:.3g}") from exc
    for c in range(V.shape[1]):
        piv = np.argmax(np.abs(V[:, c]))
        if V[piv, c] < 0:
            V[:, c] = -V[:, c]
    if isinstance(discrete, DiscreteForm) and refine:
        w = np.array([discrete.rayleigh(discrete.recover(V[:, c])) for c in range(V.shape[1])])
        order = np.argsort(w, kind="stable")
        w, V = w[order], V[:, order]
    return (w, V) if vectors else w


def _subspace_iteration(K, M, count: int, shift: float, max_iter: int = SUBSPACE_MAXITER):
    """Block shift-invert iteration with Rayleigh-Ritz.

    The block is wider than any eigenvalue multiplicity that fits in the
    requested range, so degenerate eigenvalues come out with their full
    multiplicity (a single-vector Krylov method can miss copies).
    """
    n = K.shape[0]
    p = min(n, max(2 * count, count + 12))
    # K - shift M is SPD: symmetric ordering without pivoting keeps the factor
    # banded and far less noisy than partial pivoting on fine meshes
    lu = spla.splu(
        sp.csc_matrix(K - shift * M),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )
    Q, _ = np.linalg.qr(np.random.default_rng(SUBSPACE_SEED).standard_normal((n, p)))
    prev, polish, best, since = None, -1, np.inf, 0
    for _ in range(max_iter):
        # Ritz pairs of the inverted operator; K itself is never applied
        Y = lu.solve(M @ Q)
        A, B = Q.T @ (M @ Y), Q.T @ (M @ Q)
        theta, Z = scipy.linalg.eigh(0.5 * (A + A.T), 0.5 * (B + B.T))
        theta, Z = theta[::-1], Z[:, ::-1]
        lam = shift + 1.0 / theta[:count]
        if polish == 0:
            return lam, Q @ Z[:, :count]
        if polish > 0:
            polish -= 1
        elif prev is not None:
            delta = float(np.max(np.abs(lam - prev) / np.maximum(np.abs(lam), 1e-300)))
            if delta < 0.5 * best:
                best, since = delta, 0
            else:
                since += 1
            # stop at the tolerance, or once the change has hit the noise floor of an ill-conditioned solve
            if delta <= SUBSPACE_RTOL or since >= SUBSPACE_STALL:
                polish = SUBSPACE_POLISH - 1
        prev = lam
        Q, _ = np.linalg.qr(Y @ Z)
    raise RuntimeError(f"subspace iteration did not converge in {max_iter} steps")


def _condition_estimate(M) -> float:
    try:
        Md = M.toarray() if sp.issparse(M) else np.asarray(M)
        if Md.shape[0] > 4000:
            return float("nan")
        return float(np.linalg.cond(Md))
    except Exception:  # noqa: BLE001 - diagnostic only
        return float("nan")


def oracle_spectrum(
    frame: FrameGraph, count: int, elements_per_edge: int = 100, fields: Sequence[str] = F.FIELDS
) -> np.ndarray:
    return solve_generalized(discretize_form(frame, elements_per_edge, fields), count)


# --------------------------------------------------------------------------
# convergence

@dataclass(frozen=True)
class ConvergenceRow:
    elements: int
    h: float
    eigenvalues: np.ndarray
    order: np.ndarray | None


def observed_order(values: Sequence[float], hs: Sequence[float]) -> float:
    """Richardson order p from three approximations on meshes h₁ > h₂ > h₃."""
    l1, l2, l3 = values
    h1, h2, h3 = hs
    d12, d23 = l1 - l2, l2 - l3
    if d23 == 0.0 or d12 == 0.0 or np.sign(d12) != np.sign(d23):
        return float("nan")
    ratio = d12 / d23

    def g(p):
        return (h1**p - h2**p) / (h2**p - h3**p) - ratio

    if math.isclose(h1 / h2, h2 / h3, rel_tol=1e-12):
        return math.log(ratio) / math.log(h1 / h2)
    try:
        return brentq(g, 0.05, 30.0)
    except ValueError:
        return float("nan")


def convergence_study(
    frame: FrameGraph,
    counts: Sequence[int],
    count: int,
    fields: Sequence[str] = F.FIELDS,
) -> list[ConvergenceRow]:
    """Eigenvalues at several refinements plus the observed order from each consecutive triple."""
    counts = sorted(int(c) for c in counts)
    if len(counts) < 3:
        raise ValueError("convergence_study needs at least three element counts")
    L = max(e.length for e in frame.edges)
    results = [oracle_spectrum(frame, count, n, fields) for n in counts]
    rows = []
    for k, n in enumerate(counts):
        order = None
        if k >= 2:
            hs = [L / counts[k - 2], L / counts[k - 1], L / n]
            order = np.array(
                [observed_order([results[k - 2][j], results[k - 1][j], results[k][j]], hs) for j in range(len(results[k]))]
            )
        rows.append(ConvergenceRow(n, L / n, results[k], order))
    return rows

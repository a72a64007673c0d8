"""Eigenmodes: reconstruction, normalization, residual checks, symmetry and planar decompositions.

Every reconstruction path produces the same representation: analytic
:class:`~beamframe.fields.FieldFunction` objects per edge and field plus the
joint unknowns g°, ω° in global components. Residual checks evaluate the
vertex conditions of the *frame* on that representation, so they are
independent of the closed-form matrix that produced the null vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import fields as F
from . import oracle
from .frame import ComplianceSpec, FrameGraph, VertexSpec, antenna as antenna_frame, two_beam_1d
from .geometry import GeometricBasis
from .localbasis import ExceptionalLambdaError, phi_coefficients, psi_coefficients, trig_to_exp
from .secular import (
    FundamentalSystem,
    RootRecord,
    StarParams,
    TwoBeamParams,
    assemble_1d,
    assemble_3star_planar,
    _equilibrate,
    assemble_antenna_omega,
    star_frame,
)

NORM_TOL = 1e-8
CLASSIFY_TOL = 1e-6
NULL_RTOL = 1e-6
DEFAULT_SAMPLES = 101
OMEGA = complex(math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3))

SAMPLE_KEYS = ("v", "w", "u", "eta", "dv", "dw")
TAGS = ("out-of-plane", "in-plane", "tri", "alt", "omega", "omega-bar", "coupled")


class ModeError(ValueError):
    """Raised when a mode cannot be reconstructed or a decomposition precondition fails."""


# --------------------------------------------------------------------------
# sampled state

@dataclass
class SampledState:
    """Edge fields sampled on per-edge abscissae plus joint unknowns (global components)."""

    x: dict[str, np.ndarray]
    values: dict[str, dict[str, np.ndarray]]
    g0: dict[str, np.ndarray]
    omega0: dict[str, np.ndarray]

    def copy(self) -> "SampledState":
        return SampledState(
            {e: a.copy() for e, a in self.x.items()},
            {e: {k: a.copy() for k, a in d.items()} for e, d in self.values.items()},
            {v: a.copy() for v, a in self.g0.items()},
            {v: a.copy() for v, a in self.omega0.items()},
        )

    def vector(self) -> np.ndarray:
        """Flatten in deterministic (sorted id) order."""
        parts = [self.values[e][k] for e in sorted(self.values) for k in SAMPLE_KEYS if k in self.values[e]]
        parts += [self.g0[v] for v in sorted(self.g0)] + [self.omega0[v] for v in sorted(self.omega0)]
        return np.concatenate([np.asarray(p, dtype=complex).ravel() for p in parts])

    def scaled(self, factor: complex) -> "SampledState":
        out = self.copy()
        for d in out.values.values():
            for k in d:
                d[k] = d[k] * factor
        for v in out.g0:
            out.g0[v] = out.g0[v] * factor
            out.omega0[v] = out.omega0[v] * factor
        return out

    def norm_squared(self, masses: Mapping[str, float] | None = None, keys: Sequence[str] = F.FIELDS) -> float:
        """Trapezoid L² norm of the sampled fields plus mass-weighted joint terms."""
        total = 0.0
        for e, d in self.values.items():
            xs = self.x[e]
            for k in keys:
                if k in d:
                    total += float(np.trapezoid(np.abs(d[k]) ** 2, xs))
        for v in self.g0:
            m = (masses or {}).get(v, 0.0)
            total += m * float(np.sum(np.abs(self.g0[v]) ** 2) + np.sum(np.abs(self.omega0[v]) ** 2))
        return total


@dataclass
class EigenMode:
    """A normalized eigenfunction (Ψ, g°, ω°) with samples and classification tags."""

    lam: float
    multiplicity: int
    state: SampledState
    classification: frozenset[str] = frozenset()
    functions: dict[str, dict[str, F.FieldFunction]] | None = field(default=None, repr=False)
    frame: FrameGraph | None = field(default=None, repr=False)
    method: str = "secular"

    @property
    def mu(self) -> float:
        return self.lam**0.25

    @property
    def g0(self) -> dict[str, np.ndarray]:
        return self.state.g0

    @property
    def omega0(self) -> dict[str, np.ndarray]:
        return self.state.omega0

    @property
    def samples(self) -> dict[str, dict[str, np.ndarray]]:
        return self.state.values

    def norm_squared(self) -> float:
        """Inner-product norm: exact quadrature for analytic modes, trapezoid otherwise."""
        masses = _masses(self.frame)
        if self.functions is None:
            return self.state.norm_squared(masses)
        total = sum(fn.l2_squared() for per in self.functions.values() for fn in per.values())
        for v, g in self.state.g0.items():
            m = masses.get(v, 0.0)
            total += m * float(np.sum(np.abs(g) ** 2) + np.sum(np.abs(self.state.omega0[v]) ** 2))
        return float(total)


def _masses(frame: FrameGraph | None) -> dict[str, float]:
    return {} if frame is None else {v.id: v.mass for v in frame.joints()}


def _sample(functions: dict[str, dict[str, F.FieldFunction]], frame: FrameGraph, samples: int):
    xs, vals = {}, {}
    for e in frame.edges:
        x = np.linspace(0.0, e.length, samples)
        per = functions[e.id]
        d = {f: per[f](x) for f in F.FIELDS}
        d["dv"] = per["v"](x, 1)
        d["dw"] = per["w"](x, 1)
        xs[e.id], vals[e.id] = x, d
    return xs, vals


def _first_nonzero(state: SampledState) -> complex:
    vec = [state.values[e][k] for e in sorted(state.values) for k in F.FIELDS]
    scale = max(float(np.max(np.abs(a))) if a.size else 0.0 for a in vec)
    if scale == 0.0:
        raise ModeError("mode vanishes identically")
    for a in vec:
        idx = np.nonzero(np.abs(a) > 1e-8 * scale)[0]
        if idx.size:
            return complex(a[idx[0]])
    raise ModeError("mode vanishes identically")


def build_mode(
    lam: float,
    multiplicity: int,
    functions: dict[str, dict[str, F.FieldFunction]],
    g0: dict[str, np.ndarray],
    omega0: dict[str, np.ndarray],
    frame: FrameGraph,
    samples: int = DEFAULT_SAMPLES,
    method: str = "secular",
) -> EigenMode:
    """Normalize, fix the sign/phase convention, sample and classify."""
    raw = EigenMode(lam, multiplicity, SampledState({}, {}, g0, omega0), functions=functions, frame=frame)
    nrm = math.sqrt(raw.norm_squared())
    if not nrm > 0:
        raise ModeError(f"mode at λ = {lam!r} has zero norm")
    xs, vals = _sample(functions, frame, samples)
    first = _first_nonzero(SampledState(xs, vals, g0, omega0))
    factor = abs(first) / first / nrm
    if all(np.isrealobj(fn.coef) for per in functions.values() for fn in per.values()) and not any(
        np.iscomplexobj(a) for a in list(g0.values()) + list(omega0.values())
    ):
        factor = factor.real
    functions = {e: {f: fn.scaled(factor) for f, fn in per.items()} for e, per in functions.items()}
    g0 = {v: np.asarray(a) * factor for v, a in g0.items()}
    omega0 = {v: np.asarray(a) * factor for v, a in omega0.items()}
    xs, vals = _sample(functions, frame, samples)
    mode = EigenMode(lam, multiplicity, SampledState(xs, vals, g0, omega0), functions=functions, frame=frame, method=method)
    mode.classification = classify_mode(mode, frame)
    return mode


def _null_vectors(M: np.ndarray, record: RootRecord) -> list[np.ndarray]:
    """The ``record.multiplicity`` right singular vectors for the smallest singular values."""
    k = record.multiplicity
    if k < 1:
        raise ModeError(f"record at λ = {record.lam!r} has multiplicity {k}")
    _, sv, vh = np.linalg.svd(M)
    if k > len(sv):
        raise ModeError(f"multiplicity {k} exceeds the matrix size {len(sv)}")
    if sv[-k] > NULL_RTOL * sv[0]:
        raise ModeError(
            f"multiplicity mismatch at λ = {record.lam!r}: record claims {k}, "
            f"but σ_{len(sv) - k + 1}/σ_max = {sv[-k] / sv[0]:.3g}"
        )
    if k < len(sv) and sv[-k - 1] <= 1e-12 * sv[0]:
        raise ModeError(f"multiplicity mismatch at λ = {record.lam!r}: null space is larger than {k}")
    return [np.conj(vh[-1 - n]) for n in range(k)]


def _lateral(coef_trig, mu: float, length: float) -> F.FieldFunction:
    """Lateral field from (sinh, sin, cosh, cos) coefficients."""
    return F.FieldFunction("v", mu, trig_to_exp(np.asarray(coef_trig), mu, length), length)


def _with_field(fn: F.FieldFunction, name: str) -> F.FieldFunction:
    return F.FieldFunction(name, fn.k, fn.coef, fn.length)


def _zero_fields(frame: FrameGraph) -> dict[str, dict[str, F.FieldFunction]]:
    return {e.id: {f: F.zero_field(f, e.length) for f in F.FIELDS} for e in frame.edges}


# --------------------------------------------------------------------------
# reconstruction

def reconstruct_1d_mode(
    record: RootRecord, params: TwoBeamParams, index: int = 0, samples: int = DEFAULT_SAMPLES
) -> EigenMode:
    """Mode of the two-beam example from a root of :func:`assemble_1d`."""
    vecs = _null_vectors(assemble_1d(record.lam, params), record)
    if not 0 <= index < len(vecs):
        raise ModeError(f"index {index} out of range for multiplicity {record.multiplicity}")
    x = np.real_if_close(vecs[index], tol=1e6)
    lam = record.lam
    mu = lam**0.25
    frame = _two_beam_frame(params)
    mu1, mu2 = (lam / params.b1) ** 0.25, (lam / params.b2) ** 0.25
    fns = _zero_fields(frame)
    fns["e1"]["w"] = _with_field(_lateral([x[0], -x[0], x[1], -x[1]], mu1, params.l1), "w")
    fns["e2"]["w"] = _with_field(_lateral([x[2], x[2], x[3], x[3]], mu2, params.l2), "w")
    j1 = frame.edge("e1").frame.j
    k1 = frame.edge("e1").frame.k
    g0 = {"vc": x[4] * j1}
    om = {"vc": mu * x[5] * k1}
    return build_mode(lam, record.multiplicity, fns, g0, om, frame, samples)


def _two_beam_frame(p: TwoBeamParams) -> FrameGraph:
    base = two_beam_1d(p.l1, p.l2, p.mass, 0.0, 0.0, p.b1, p.b2)
    vc = base.vertex("vc")
    couplings = {
        "e1": ComplianceSpec.isotropic(p.theta_g1, p.theta_omega1),
        "e2": ComplianceSpec.isotropic(p.theta_g2, p.theta_omega2),
    }
    new_vc = VertexSpec(vc.id, vc.coords, vc.mass, vc.kind, couplings)
    vertices = [new_vc if v.id == "vc" else v for v in base.vertices]
    return FrameGraph(vertices, base.edges, base.family)


def reconstruct_3star_mode(
    record: RootRecord, geom: GeometricBasis, params: StarParams, index: int = 0, samples: int = DEFAULT_SAMPLES
) -> EigenMode:
    """Out-of-plane mode of the planar 3-star from a root of the 3x3 secular matrix."""
    lam = record.lam
    try:
        C = phi_coefficients(params.lateral.at(lam))
        D = psi_coefficients(params.torsion.at(lam))
    except ExceptionalLambdaError as exc:
        raise ModeError(f"λ = {lam!r} is exceptional; use modes_from_fundamental") from exc
    vecs = _null_vectors(assemble_3star_planar(lam, geom, params), record)
    if not 0 <= index < len(vecs):
        raise ModeError(f"index {index} out of range for multiplicity {record.multiplicity}")
    x = np.real_if_close(vecs[index], tol=1e6)
    v0, w_glob = x[0], np.array([x[1], x[2], 0.0])
    frame = star_frame(geom, params)
    mu = params.lateral.at(lam).mu
    beta = params.torsion.at(lam).beta
    fns = _zero_fields(frame)
    for s, e in enumerate(frame.edges):
        i_s, j_s = geom.axis(s), geom.lateral(s)
        fns[e.id]["v"] = F.FieldFunction("v", mu, v0 * C[:, 2] - (w_glob @ j_s) * C[:, 3], e.length)
        fns[e.id]["eta"] = F.FieldFunction("eta", beta, (w_glob @ i_s) * D[:, 1], e.length)
    g0 = {"vc": v0 * np.array([0.0, 0.0, 1.0])}
    return build_mode(lam, record.multiplicity, fns, g0, {"vc": w_glob}, frame, samples)


def reconstruct_antenna_mode(
    record: RootRecord,
    alpha: float,
    mass: float = 0.0,
    theta_g0: float = 0.0,
    theta_omega0: float = 0.0,
    conjugate: bool = False,
    index: int = 0,
    samples: int = DEFAULT_SAMPLES,
) -> EigenMode:
    """Antenna mode in the H_ω sector (H_ω̄ with ``conjugate=True``) from a root of the 10x10 matrix."""
    lam = record.lam
    vecs = _null_vectors(assemble_antenna_omega(lam, alpha, mass, theta_g0, theta_omega0, conjugate), record)
    if not 0 <= index < len(vecs):
        raise ModeError(f"index {index} out of range for multiplicity {record.multiplicity}")
    c = np.asarray(vecs[index], dtype=complex)
    if conjugate:
        c = np.conj(c)
    Av, Bv, Aw, Bw, Au, Ae, A0, B0, g1, w2 = c
    mu = lam**0.25
    beta = math.sqrt(lam)
    frame = antenna_frame(alpha, mass, theta_g0, theta_omega0)
    fns = _zero_fields(frame)
    leg = {
        "v": _with_field(_lateral([Av, -Av, Bv, -Bv], mu, 1.0), "v"),
        "w": _with_field(_lateral([-1j * Aw, 1j * Aw, -1j * Bw, 1j * Bw], mu, 1.0), "w"),
        "u": F.FieldFunction("u", beta, np.array([Au, 0.0], dtype=complex), 1.0),
        "eta": F.FieldFunction("eta", beta, np.array([-1j * Ae, 0.0], dtype=complex), 1.0),
    }
    for s in (1, 2, 3):
        phase = OMEGA ** (s - 1)
        fns[f"e{s}"] = {f: fn.scaled(phase) for f, fn in leg.items()}
    v0 = _with_field(_lateral([A0, A0, B0, B0], mu, 1.0), "v")
    fns["e0"]["v"] = v0
    fns["e0"]["w"] = _with_field(v0.scaled(1j), "w")
    g0 = {"vc": g1 * np.array([1.0, 1j, 0.0])}
    om = {"vc": w2 * np.array([-1j, 1.0, 0.0])}
    if conjugate:
        fns = {e: {f: fn.conj() for f, fn in per.items()} for e, per in fns.items()}
        g0 = {v: np.conj(a) for v, a in g0.items()}
        om = {v: np.conj(a) for v, a in om.items()}
    return build_mode(lam, record.multiplicity, fns, g0, om, frame, samples)


def conjugate_mode(mode: EigenMode) -> EigenMode:
    """Complex conjugate of a mode (maps H_ω onto H_ω̄ for the antenna)."""
    if mode.functions is None:
        raise ModeError("conjugation needs an analytic mode")
    fns = {e: {f: fn.conj() for f, fn in per.items()} for e, per in mode.functions.items()}
    g0 = {v: np.conj(a) for v, a in mode.g0.items()}
    om = {v: np.conj(a) for v, a in mode.omega0.items()}
    samples = len(next(iter(mode.state.x.values())))
    return build_mode(mode.lam, mode.multiplicity, fns, g0, om, mode.frame, samples, mode.method)


def real_basis(mode: EigenMode) -> list[EigenMode]:
    """Normalized real and imaginary parts of a complex analytic mode (one mode if it is already real)."""
    if mode.functions is None:
        raise ModeError("real_basis needs an analytic mode")
    samples = len(next(iter(mode.state.x.values())))
    out = []
    for part in (np.real, np.imag):
        fns = {
            e: {f: F.FieldFunction(f, fn.k, part(fn.coef), fn.length) for f, fn in per.items()}
            for e, per in mode.functions.items()
        }
        g0 = {v: part(a) for v, a in mode.g0.items()}
        om = {v: part(a) for v, a in mode.omega0.items()}
        probe = EigenMode(mode.lam, mode.multiplicity, SampledState({}, {}, g0, om), functions=fns, frame=mode.frame)
        if probe.norm_squared() > 1e-12 * mode.norm_squared():
            out.append(build_mode(mode.lam, mode.multiplicity, fns, g0, om, mode.frame, samples, mode.method))
    return out


def modes_from_fundamental(
    system: FundamentalSystem, record: RootRecord, samples: int = DEFAULT_SAMPLES
) -> list[EigenMode]:
    """All modes of a root of the generic fundamental system (any frame, including exceptional λ)."""
    vecs = _null_vectors(_equilibrate(system.matrix(record.lam)), record)
    out = []
    for x in vecs:
        x = np.real_if_close(x, tol=1e6)
        fns = system.edge_fields(record.lam, x)
        vv = system.vertex_values(x)
        g0 = {v: a[0] for v, a in vv.items()}
        om = {v: a[1] for v, a in vv.items()}
        out.append(build_mode(record.lam, record.multiplicity, fns, g0, om, system.frame, samples, "fundamental"))
    return out


def modes_from_oracle(
    discrete: oracle.DiscreteForm, count: int, samples: int = DEFAULT_SAMPLES, cluster_rtol: float = 1e-8
) -> list[EigenMode]:
    """Sampled modes from discrete eigenvectors (mass-orthonormal, so unit norm by construction)."""
    lams, V = oracle.solve_generalized(discrete, count, vectors=True)
    frame = discrete.frame
    mult = np.ones(len(lams), dtype=int)
    for i in range(len(lams)):
        mult[i] = int(np.sum(np.abs(lams - lams[i]) <= cluster_rtol * max(abs(lams[i]), 1e-300)))
    out = []
    for c in range(V.shape[1]):
        full = discrete.recover(V[:, c])
        xs, vals = {}, {}
        for e in frame.edges:
            x = np.linspace(0.0, e.length, samples)
            d = {f: discrete.sample(full, e.id, f, x) for f in F.FIELDS}
            d["dv"] = discrete.sample(full, e.id, "v", x, 1)
            d["dw"] = discrete.sample(full, e.id, "w", x, 1)
            xs[e.id], vals[e.id] = x, d
        vv = discrete.vertex_values(full)
        state = SampledState(xs, vals, {v: a[0] for v, a in vv.items()}, {v: a[1] for v, a in vv.items()})
        first = _first_nonzero(state)
        if first.real < 0:
            state = state.scaled(-1.0)
        mode = EigenMode(float(lams[c]), int(mult[c]), state, frame=frame, method="oracle")
        mode.classification = classify_mode(mode, frame)
        out.append(mode)
    return out


# --------------------------------------------------------------------------
# residual checks

@dataclass(frozen=True)
class Residual:
    vertex: str
    edge: str | None
    condition: str
    value: float
    scale: float

    @property
    def relative(self) -> float:
        return self.value / max(self.scale, 1.0)


def _local_traces(fns: dict[str, F.FieldFunction], e, x: float):
    """Local (g, ω, f, m) at abscissa x; each a complex 3-vector."""

    def comp(table, kind, flux):
        out = np.zeros(3, dtype=complex)
        for ax, (name, order, sign) in enumerate(table[kind]):
            val = complex(np.asarray(fns[name](x, order)))
            stiff = getattr(e.material, F.STIFFNESS[name]) if flux else 1.0
            out[ax] = sign * stiff * val
        return out

    return comp(F.TRACE, "g", False), comp(F.TRACE, "omega", False), comp(F.FLUX, "g", True), comp(F.FLUX, "omega", True)


def vertex_residuals(mode: EigenMode, frame: FrameGraph | None = None) -> list[Residual]:
    """Absolute residuals of every boundary and joint condition of ``frame`` on ``mode``.

    ``scale`` is the largest magnitude among the terms of each condition, so
    ``Residual.relative`` is a cancellation-aware relative error.
    """
    frame = frame or mode.frame
    if mode.functions is None or frame is None:
        raise ModeError("vertex residuals need an analytic mode and its frame")
    out: list[Residual] = []
    inc = frame.incidence
    for v in frame.vertices:
        bal = {"g": np.zeros(3, dtype=complex), "omega": np.zeros(3, dtype=complex)}
        bal_scale = {"g": 0.0, "omega": 0.0}
        for e, s in inc[v.id]:
            x = 0.0 if s < 0 else e.length
            g, om, f, m = _local_traces(mode.functions[e.id], e, x)
            traces, fluxes = {"g": g, "omega": om}, {"g": f, "omega": m}
            for kind in ("g", "omega"):
                t, fl = traces[kind], fluxes[kind]
                if v.kind == "fixed":
                    out.append(Residual(v.id, e.id, f"{kind}-fixed", float(np.max(np.abs(t))), float(np.max(np.abs(fl)))))
                elif v.kind == "free":
                    out.append(Residual(v.id, e.id, f"{kind}-free", float(np.max(np.abs(fl))), float(np.max(np.abs(t)))))
                else:
                    spec = v.couplings[e.id]
                    theta, free = spec.theta(kind), spec.free(kind)
                    target = e.frame.matrix @ (mode.g0[v.id] if kind == "g" else mode.omega0[v.id])
                    for ax in range(3):
                        if free[ax]:
                            out.append(Residual(v.id, e.id, f"{kind}-free-axis-{ax}", abs(fl[ax]), abs(t[ax])))
                            continue
                        jump = s * sum(theta[ax, bx] * fl[bx] for bx in range(3) if not free[bx])
                        terms = [abs(t[ax]), abs(jump), abs(target[ax])]
                        out.append(
                            Residual(v.id, e.id, f"{kind}-semi-rigid-{ax}", abs(t[ax] + jump - target[ax]), max(terms))
                        )
                    contrib = s * e.frame.matrix.T @ fl
                    bal[kind] += contrib
                    bal_scale[kind] = max(bal_scale[kind], float(np.max(np.abs(contrib))))
        if v.kind == "joint":
            for kind, unknown in (("g", mode.g0[v.id]), ("omega", mode.omega0[v.id])):
                inertia = mode.lam * v.mass * np.asarray(unknown)
                res = bal[kind] - inertia
                scale = max(bal_scale[kind], float(np.max(np.abs(inertia))))
                out.append(Residual(v.id, None, f"{kind}-balance", float(np.max(np.abs(res))), scale))
    return out


def max_vertex_residual(mode: EigenMode, frame: FrameGraph | None = None, relative: bool = True) -> float:
    res = vertex_residuals(mode, frame)
    return max((r.relative if relative else r.value) for r in res) if res else 0.0


def ode_residuals(mode: EigenMode, points: int = 9) -> dict[tuple[str, str], float]:
    """Relative finite-difference residual of the field equations per (edge, field).

    Lateral fields: a v'''' = λ v via a 7-point fourth-difference stencil;
    axial/torsional: -c u'' = λ u via a 5-point second-difference stencil.
    Steps are scaled with the local wavenumber to balance truncation and round-off.
    """
    if mode.functions is None or mode.frame is None:
        raise ModeError("ODE residuals need an analytic mode")
    out = {}
    for e in mode.frame.edges:
        xs = np.linspace(0.0, e.length, points)
        for name, fn in mode.functions[e.id].items():
            vals = fn(xs)
            peak = float(np.max(np.abs(vals))) if vals.size else 0.0
            if peak == 0.0:
                continue
            stiff = getattr(e.material, F.STIFFNESS[name])
            if name in F.LATERAL:
                h = 0.02 / max(fn.k, 1.0)
                w = np.array([-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0]) / 6.0
                d = sum(c * fn(xs + (n - 3) * h) for n, c in enumerate(w)) / h**4
                res = stiff * d - mode.lam * vals
            else:
                h = 0.005 / max(fn.k, 1.0)
                w = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
                d = sum(c * fn(xs + (n - 2) * h) for n, c in enumerate(w)) / h**2
                res = -stiff * d - mode.lam * vals
            out[(e.id, name)] = float(np.max(np.abs(res)) / (mode.lam * peak))
    return out


# --------------------------------------------------------------------------
# D3 symmetry of the antenna

_ANTENNA_EDGES = ("e0", "e1", "e2", "e3")


@dataclass(frozen=True)
class SymmetryProjector:
    """Orthogonal projector onto one D₃-reducing subspace of the antenna state space."""

    name: str
    description: str

    def apply(self, state: SampledState) -> SampledState:
        _check_antenna_state(state)
        return _PROJECT[self.name](state)

    __call__ = apply


def _check_antenna_state(state: SampledState) -> None:
    if set(state.values) != set(_ANTENNA_EDGES) or set(state.g0) != {"vc"}:
        raise ModeError("symmetry projectors apply to the canonical antenna (edges e0..e3, joint vc)")
    n = {len(state.x[e]) for e in _ANTENNA_EDGES[1:]}
    if len(n) != 1:
        raise ModeError("antenna legs must share one sampling grid")


def _leg_component(state: SampledState, key: str, char: complex) -> np.ndarray:
    """(1/3) Σ_s conj(char^{s-1}) x_s: coefficient of the leg pattern (1, char, char²)."""
    legs = [np.asarray(state.values[f"e{s}"][key], dtype=complex) for s in (1, 2, 3)]
    return (legs[0] + np.conj(char) * legs[1] + np.conj(char) ** 2 * legs[2]) / 3.0


def _blank(state: SampledState) -> SampledState:
    out = state.copy()
    for d in out.values.values():
        for k in d:
            d[k] = np.zeros_like(d[k], dtype=complex)
    out.g0 = {v: np.zeros(3, dtype=complex) for v in state.g0}
    out.omega0 = {v: np.zeros(3, dtype=complex) for v in state.omega0}
    return out


def _project_symmetric(state: SampledState, keys: Sequence[str], beam_keys: Sequence[str], g_axes, o_axes):
    out = _blank(state)
    for k in keys:
        if k in state.values["e1"]:
            c = _leg_component(state, k, 1.0)
            for s in (1, 2, 3):
                out.values[f"e{s}"][k] = c.copy()
    for k in beam_keys:
        if k in state.values["e0"]:
            out.values["e0"][k] = np.asarray(state.values["e0"][k], dtype=complex).copy()
    for ax in g_axes:
        out.g0["vc"][ax] = state.g0["vc"][ax]
    for ax in o_axes:
        out.omega0["vc"][ax] = state.omega0["vc"][ax]
    return out


def _project_rotating(state: SampledState, char: complex) -> SampledState:
    out = _blank(state)
    for k in SAMPLE_KEYS:
        if k in state.values["e1"]:
            c = _leg_component(state, k, char)
            for s in (1, 2, 3):
                out.values[f"e{s}"][k] = c * char ** (s - 1)
    sign = 1.0 if char == OMEGA else -1.0
    beam = state.values["e0"]
    for kv, kw in (("v", "w"), ("dv", "dw")):
        if kv in beam and kw in beam:
            c = (np.asarray(beam[kv], dtype=complex) - sign * 1j * np.asarray(beam[kw], dtype=complex)) / 2.0
            out.values["e0"][kv] = c
            out.values["e0"][kw] = sign * 1j * c
    g, o = state.g0["vc"], state.omega0["vc"]
    cg = (g[0] - sign * 1j * g[1]) / 2.0
    out.g0["vc"] = np.array([cg, sign * 1j * cg, 0.0])
    co = (sign * 1j * o[0] + o[1]) / 2.0
    out.omega0["vc"] = np.array([-sign * 1j * co, co, 0.0])
    return out


_PROJECT = {
    "tri": lambda st: _project_symmetric(st, ("v", "u", "dv"), ("u",), (2,), ()),
    "alt": lambda st: _project_symmetric(st, ("w", "eta", "dw"), ("eta",), (), (2,)),
    "omega": lambda st: _project_rotating(st, OMEGA),
    "omega-bar": lambda st: _project_rotating(st, np.conj(OMEGA)),
}


def symmetry_projectors() -> dict[str, SymmetryProjector]:
    """Projectors onto H_tri, H_alt, H_ω, H_ω̄ acting on sampled antenna states.

    Leg patterns follow Ψ₂ = χΨ₁, Ψ₃ = χ²Ψ₁ with χ ∈ {1, ω, ω̄}; on the
    vertical edge H_ω carries w₀ = i v₀ (unit materials) and the joint
    unknowns satisfy g°·E₂ = i g°·E₁, ω°·E₁ = -i ω°·E₂.
    """
    return {
        "tri": SymmetryProjector("tri", "w_s = η_s = 0, equal v_s and u_s, v₀ = w₀ = η₀ = 0, g° ∥ E₃, ω° = 0"),
        "alt": SymmetryProjector("alt", "u_s = v_s = 0, equal w_s and η_s, v₀ = w₀ = u₀ = 0, g° = 0, ω° ∥ E₃"),
        "omega": SymmetryProjector("omega", "Ψ_s = ω^{s-1}Ψ₁, w₀ = i v₀, u₀ = η₀ = 0, g°₂ = i g°₁, ω°₁ = -i ω°₂"),
        "omega-bar": SymmetryProjector("omega-bar", "complex conjugate of the H_ω subspace"),
    }


def random_antenna_state(rng: np.random.Generator, samples: int = 11, complex_values: bool = False) -> SampledState:
    def draw(shape):
        a = rng.standard_normal(shape)
        return a + 1j * rng.standard_normal(shape) if complex_values else a

    x = {e: np.linspace(0.0, 1.0, samples) for e in _ANTENNA_EDGES}
    vals = {e: {k: draw(samples) for k in SAMPLE_KEYS} for e in _ANTENNA_EDGES}
    return SampledState(x, vals, {"vc": draw(3)}, {"vc": draw(3)})


# --------------------------------------------------------------------------
# classification

def _split_norm(state: SampledState, masses: Mapping[str, float], keep) -> tuple[float, float]:
    """(kept, complementary) squared norms; ``keep(edge, key)`` / ``keep(vertex, kind, axis)``."""
    inside = outside = 0.0
    for e, d in state.values.items():
        xs = state.x[e]
        for k in F.FIELDS:
            val = float(np.trapezoid(np.abs(d[k]) ** 2, xs)) if len(xs) > 1 else 0.0
            if keep(e, k):
                inside += val
            else:
                outside += val
    for v in state.g0:
        m = masses.get(v, 0.0)
        for kind, vec in (("g", state.g0[v]), ("omega", state.omega0[v])):
            for ax in range(3):
                val = m * abs(vec[ax]) ** 2
                if keep(v, kind, ax):
                    inside += val
                else:
                    outside += val
    return inside, outside


def classify_mode(mode: EigenMode, frame: FrameGraph | None = None, tol: float = CLASSIFY_TOL) -> frozenset[str]:
    """Tags from {out-of-plane, in-plane, tri, alt, omega, omega-bar, coupled}.

    A tag is assigned when the complementary components have relative norm
    below ``tol``; otherwise the mode is ``coupled``.
    """
    frame = frame or mode.frame
    state = mode.state
    masses = _masses(frame)
    tags: set[str] = set()
    if frame is not None and frame.is_planar():
        out_keys = {"v", "eta"}

        def out_plane(*key):
            if len(key) == 2:
                return key[1] in out_keys
            _, kind, ax = key
            return (ax == 2) if kind == "g" else (ax != 2)

        inside, outside = _split_norm(state, masses, out_plane)
        total = inside + outside
        if total > 0:
            if outside <= tol**2 * total:
                tags.add("out-of-plane")
            if inside <= tol**2 * total:
                tags.add("in-plane")
    elif frame is not None and (frame.family or {}).get("name") == "antenna":
        total = state.norm_squared(masses)
        if total > 0:
            projs = symmetry_projectors()
            parts = {name: proj(state) for name, proj in projs.items()}
            for name, part in parts.items():
                if _difference(state, part).norm_squared(masses) <= tol**2 * total:
                    tags.add(name)
            if not tags:
                # a real mode of a degenerate pair lives in H_ω ⊕ H_ω̄
                rest = _difference(_difference(state, parts["omega"]), parts["omega-bar"])
                if rest.norm_squared(masses) <= tol**2 * total:
                    tags.update({"omega", "omega-bar"})
    return frozenset(tags or {"coupled"})


def _inner(a: SampledState, b: SampledState, masses: Mapping[str, float]) -> complex:
    total = 0j
    for e, d in a.values.items():
        xs = a.x[e]
        for k in F.FIELDS:
            if len(xs) > 1:
                total += complex(np.trapezoid(np.conj(d[k]) * b.values[e][k], xs))
    for v in a.g0:
        m = masses.get(v, 0.0)
        total += m * complex(np.vdot(a.g0[v], b.g0[v]) + np.vdot(a.omega0[v], b.omega0[v]))
    return total


def _planar_part(state: SampledState, out_of_plane: bool) -> SampledState:
    out = state.copy()
    keep = {"v", "eta", "dv"} if out_of_plane else {"w", "u", "dw"}
    for d in out.values.values():
        for k in d:
            if k not in keep:
                d[k] = np.zeros_like(d[k])
    g_mask = np.array([0.0, 0.0, 1.0]) if out_of_plane else np.array([1.0, 1.0, 0.0])
    out.g0 = {v: a * g_mask for v, a in out.g0.items()}
    out.omega0 = {v: a * (1.0 - g_mask) for v, a in out.omega0.items()}
    return out


def classify_eigenspace(
    modes: Sequence[EigenMode], frame: FrameGraph | None = None, tol: float = CLASSIFY_TOL
) -> frozenset[str]:
    """Tags of a (possibly degenerate) eigenspace spanned by ``modes``.

    Individual basis vectors of a degenerate eigenspace are arbitrary
    mixtures, so the sectors are read off the eigenvalues of the Gram
    matrices of the sector projections: sector S is present when 1 is an
    eigenvalue, and the space splits when every eigenvalue is 0 or 1 and the
    sector dimensions add up.
    """
    if not modes:
        raise ModeError("empty eigenspace")
    frame = frame or modes[0].frame
    if len(modes) == 1:
        return classify_mode(modes[0], frame, tol)
    masses = _masses(frame)
    states = [m.state for m in modes]
    if frame is not None and frame.is_planar():
        sectors = {
            "out-of-plane": lambda st: _planar_part(st, True),
            "in-plane": lambda st: _planar_part(st, False),
        }
    elif frame is not None and (frame.family or {}).get("name") == "antenna":
        sectors = dict(symmetry_projectors())
    else:
        return frozenset({"coupled"})
    G0 = np.array([[_inner(a, b, masses) for b in states] for a in states])
    tags, dims = set(), 0
    for name, proj in sectors.items():
        parts = [proj(st) for st in states]
        G = np.array([[_inner(a, b, masses) for b in parts] for a in parts])
        mu = np.linalg.eigvalsh(_whiten(G0, G))
        if np.any((mu > tol) & (mu < 1.0 - tol)):
            return frozenset({"coupled"})
        k = int(np.sum(mu >= 1.0 - tol))
        if k:
            tags.add(name)
            dims += k
    return frozenset(tags) if dims == len(modes) else frozenset({"coupled"})


def _whiten(G0: np.ndarray, G: np.ndarray) -> np.ndarray:
    """L⁻¹ G L⁻ᴴ for G0 = L Lᴴ (Hermitian, same eigenvalues as G0⁻¹ G)."""
    L = np.linalg.cholesky(0.5 * (G0 + G0.conj().T))
    X = np.linalg.solve(L, 0.5 * (G + G.conj().T))
    return np.linalg.solve(L, X.conj().T).conj().T


def _difference(a: SampledState, b: SampledState) -> SampledState:
    out = a.copy()
    for e, d in out.values.items():
        for k in d:
            d[k] = np.asarray(a.values[e][k], dtype=complex) - b.values[e][k]
    out.g0 = {v: np.asarray(a.g0[v], dtype=complex) - b.g0[v] for v in a.g0}
    out.omega0 = {v: np.asarray(a.omega0[v], dtype=complex) - b.omega0[v] for v in a.omega0}
    return out


# --------------------------------------------------------------------------
# planar decoupling

P_PLANE = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
Q_NORMAL = np.array([[0.0], [0.0], [1.0]])


@dataclass(frozen=True)
class Subproblem:
    """A field-restricted problem on a frame, solvable by the discrete oracle.

    ``compliances[(vertex, edge)]`` holds the projected (displacement,
    rotation) compliance blocks in local axes; ``conditions`` lists the joint
    conditions that remain non-trivial.
    """

    name: str
    frame: FrameGraph
    fields: tuple[str, ...]
    unknowns: dict[str, tuple[int, int]]
    compliances: dict[tuple[str, str], tuple[np.ndarray, np.ndarray]]
    conditions: dict[tuple[str, str], tuple[str, ...]]

    def discretize(self, elements: int) -> oracle.DiscreteForm:
        return oracle.discretize_form(self.frame, elements, self.fields)

    def spectrum(self, count: int, elements: int = 100) -> np.ndarray:
        d = self.discretize(elements)
        return oracle.solve_generalized(d, min(count, d.size))


@dataclass(frozen=True)
class SubproblemPair:
    out_problem: Subproblem
    in_problem: Subproblem
    P: np.ndarray = field(default_factory=lambda: P_PLANE.copy())
    Q: np.ndarray = field(default_factory=lambda: Q_NORMAL.copy())


def _couples_normal(theta: np.ndarray, tol: float = 1e-12) -> bool:
    scale = max(1.0, float(np.max(np.abs(theta))))
    return max(abs(theta[0, 2]), abs(theta[1, 2]), abs(theta[2, 0]), abs(theta[2, 1])) > tol * scale


def _require_planar(frame: FrameGraph) -> None:
    if not frame.is_planar():
        bad = [e.id for e in frame.edges if np.max(np.abs(e.frame.k - np.array([0.0, 0.0, 1.0]))) > 1e-12]
        raise ModeError(f"frame is not planar: edges {bad} have k != E3")


def _block_projected(theta: np.ndarray) -> np.ndarray:
    out = np.zeros((3, 3))
    out[:2, :2] = theta[:2, :2]
    out[2, 2] = theta[2, 2]
    return out


def _replace_couplings(frame: FrameGraph, fn) -> FrameGraph:
    vertices = []
    for v in frame.vertices:
        if v.kind == "joint":
            couplings = {eid: fn(v, eid, spec) for eid, spec in v.couplings.items()}
            v = VertexSpec(v.id, v.coords, v.mass, v.kind, couplings)
        vertices.append(v)
    return FrameGraph(vertices, frame.edges, frame.family)


def decouple_planar(frame: FrameGraph) -> SubproblemPair:
    """Split a planar frame with k-plane preserving joints into out-of-plane (v, η) and in-plane (w, u) problems."""
    _require_planar(frame)
    for v in frame.joints():
        for eid, spec in v.couplings.items():
            for kind in ("g", "omega"):
                if _couples_normal(spec.theta(kind)):
                    raise ModeError(
                        f"joint {v.id!r}, edge {eid!r}: {kind} compliance couples the plane normal "
                        "(not k-plane preserving)"
                    )
    projected = _replace_couplings(
        frame,
        lambda v, eid, spec: ComplianceSpec(
            _block_projected(spec.theta_g), _block_projected(spec.theta_omega), spec.free_g, spec.free_omega
        ),
    )
    out_c, in_c, out_cond, in_cond = {}, {}, {}, {}
    out_u, in_u = {}, {}
    for v in projected.joints():
        for eid, spec in v.couplings.items():
            out_c[(v.id, eid)] = (spec.theta_g[2:, 2:].copy(), spec.theta_omega[:2, :2].copy())
            in_c[(v.id, eid)] = (spec.theta_g[:2, :2].copy(), spec.theta_omega[2:, 2:].copy())
            out_cond[(v.id, eid)] = ("displacement-k", "rotation-ij", "net-force-k", "net-moment-ij")
            in_cond[(v.id, eid)] = ("displacement-ij", "rotation-k", "net-force-ij", "net-moment-k")
        out_u[v.id] = (1, 2)
        in_u[v.id] = (2, 1)
    return SubproblemPair(
        Subproblem("out-of-plane", projected, ("v", "eta"), out_u, out_c, out_cond),
        Subproblem("in-plane", projected, ("w", "u"), in_u, in_c, in_cond),
    )


def scalar_decompositions(frame: FrameGraph) -> dict[str, Subproblem]:
    """The four scalar problems (v-out, η-out, w-in, u-in) in the torsion/axial release limit.

    Requires a planar frame, massless joints, free flags on the η-rotation
    (local i of ω) and axial displacement (local i of g) axes at every
    joint, and diagonal remaining compliances.
    """
    _require_planar(frame)
    for v in frame.joints():
        if v.mass != 0.0:
            raise ModeError(f"joint {v.id!r} carries mass {v.mass!r}; the scalar split needs massless joints")
        for eid, spec in v.couplings.items():
            where = f"joint {v.id!r}, edge {eid!r}"
            if not spec.free_omega[0]:
                raise ModeError(f"{where}: η-rotation axis must be released (free_omega[0])")
            if not spec.free_g[0]:
                raise ModeError(f"{where}: axial displacement axis must be released (free_g[0])")
            for kind in ("g", "omega"):
                th = spec.theta(kind)
                if np.any(th - np.diag(np.diag(th)) != 0.0):
                    raise ModeError(f"{where}: {kind} compliance must be diagonal")
    inc = frame.incidence
    subs = {}
    for name, fld in (("v-out", "v"), ("eta-out", "eta"), ("w-in", "w"), ("u-in", "u")):
        conditions, unknowns, compliances = {}, {}, {}
        for v in frame.joints():
            deg = len(inc[v.id])
            for e, _ in inc[v.id]:
                spec = v.couplings[e.id]
                if fld == "v":
                    cond = ("displacement-equal", "net-force", "net-moment")
                    if deg >= 3:
                        cond = cond[:1] + ("rotation-coplanarity",) + cond[1:]
                    compliances[(v.id, e.id)] = (spec.theta_g[2:, 2:].copy(), spec.theta_omega[1:2, 1:2].copy())
                elif fld == "w":
                    cond = ("rotation-equal", "displacement-coplanarity", "net-force", "net-moment")
                    compliances[(v.id, e.id)] = (spec.theta_g[1:2, 1:2].copy(), spec.theta_omega[2:, 2:].copy())
                else:
                    cond = ("neumann",)
                    compliances[(v.id, e.id)] = (np.zeros((0, 0)), np.zeros((0, 0)))
                conditions[(v.id, e.id)] = cond
            unknowns[v.id] = {"v": (1, 2), "w": (2, 1), "u": (0, 0), "eta": (0, 0)}[fld]
        subs[name] = Subproblem(name, frame, (fld,), unknowns, compliances, conditions)
    return subs


def spectrum_union(problems: Sequence[Subproblem], count: int, elements: int = 100) -> list[tuple[float, str]]:
    """Sorted multiset union of the first ``count`` eigenvalues of each problem, tagged by origin."""
    out = []
    for p in problems:
        out += [(float(x), p.name) for x in p.spectrum(count, elements)]
    out.sort()
    return out[:count]


def relative_mismatch(a: Sequence[float], b: Sequence[float]) -> float:
    """Max relative difference of two sorted lists (inf if lengths differ)."""
    a, b = np.sort(np.asarray(a, dtype=float)), np.sort(np.asarray(b, dtype=float))
    if len(a) != len(b):
        return math.inf
    if not len(a):
        return 0.0
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


# --------------------------------------------------------------------------
# planar lemma

def coplanarity_matrix(frame: FrameGraph, vertex: str) -> np.ndarray:
    """C with rigidPlane-1 for edge e equal to Σ_k C[e, k] V_k (V_k the rotation combination of edge k).

    For a degree-2 joint every row vanishes identically.
    """
    inc = frame.incidence[vertex]
    n = len(inc)
    if n < 2:
        raise ModeError(f"vertex {vertex!r} has degree {n}")
    (e1, _), (e2, _) = inc[0], inc[1]
    i1, j1, i2, j2 = e1.frame.i, e1.frame.j, e2.frame.i, e2.frame.j
    C = np.zeros((n, n))
    for r, (e, _) in enumerate(inc):
        C[r, 0] += j2 @ e.frame.i
        C[r, 1] += e.frame.j @ i1
        C[r, r] += j1 @ i2
    return C


def planar_lemma_residuals(mode: EigenMode, vertex: str) -> dict[str, list[float]]:
    """Residuals of the two planar rotation conditions and the moment identity per incident edge.

    With V_e = v'_e + s a θ_ωv v''_e and H_e = η_e + s d θ_ωη η'_e at the joint:
    ``plane1``: (j₂·i_e)V₁ + (j_e·i₁)V₂ + (j₁·i₂)V_e,
    ``plane2``: (j₂·j_e)V₁ − (j_e·j₁)V₂ + (j₁·i₂)H_e,
    ``moment``: s d θ_ωη η'_e − 𝔇_e (compliance form of the moment identity).
    """
    frame = mode.frame
    if mode.functions is None or frame is None:
        raise ModeError("planar lemma residuals need an analytic mode")
    inc = frame.incidence[vertex]
    if len(inc) < 3:
        raise ModeError(f"vertex {vertex!r} has degree {len(inc)}; the planar lemma needs degree >= 3")
    if not frame.is_planar():
        raise ModeError("planar lemma needs a planar frame")
    v = frame.vertex(vertex)
    V, H, EP = [], [], []
    for e, s in inc:
        x = 0.0 if s < 0 else e.length
        fn = mode.functions[e.id]
        spec = v.couplings[e.id]
        a, d = e.material.a, e.material.d
        th_v = spec.theta_omega[1, 1]
        th_e = spec.theta_omega[0, 0]
        V.append(complex(fn["v"](x, 1)) + s * a * th_v * complex(fn["v"](x, 2)))
        H.append(complex(fn["eta"](x)) + s * d * th_e * complex(fn["eta"](x, 1)))
        EP.append(s * d * th_e * complex(fn["eta"](x, 1)))
    (e1, _), (e2, _) = inc[0], inc[1]
    j1, i1, j2, i2 = e1.frame.j, e1.frame.i, e2.frame.j, e2.frame.i
    den = j1 @ i2
    if abs(den) < 1e-12:
        raise ModeError(f"first two edges at {vertex!r} are collinear")
    C = coplanarity_matrix(frame, vertex)
    out = {"plane1": [], "plane2": [], "moment": []}
    for r, (e, _) in enumerate(inc):
        out["plane1"].append(abs(C[r] @ np.array(V)))
        out["plane2"].append(abs((j2 @ e.frame.j) * V[0] - (e.frame.j @ j1) * V[1] + den * H[r]))
        eta_e = complex(mode.functions[e.id]["eta"](0.0 if inc[r][1] < 0 else e.length))
        De = ((e.frame.j @ j1) * V[1] - (j2 @ e.frame.j) * V[0]) / den - eta_e
        out["moment"].append(abs(EP[r] - De))
    return out


__all__ = [
    "EigenMode",
    "ModeError",
    "Residual",
    "SampledState",
    "Subproblem",
    "SubproblemPair",
    "SymmetryProjector",
    "build_mode",
    "classify_eigenspace",
    "classify_mode",
    "conjugate_mode",
    "coplanarity_matrix",
    "decouple_planar",
    "max_vertex_residual",
    "modes_from_fundamental",
    "modes_from_oracle",
    "ode_residuals",
    "planar_lemma_residuals",
    "random_antenna_state",
    "real_basis",
    "reconstruct_1d_mode",
    "reconstruct_3star_mode",
    "reconstruct_antenna_mode",
    "relative_mismatch",
    "scalar_decompositions",
    "spectrum_union",
    "symmetry_projectors",
    "vertex_residuals",
]

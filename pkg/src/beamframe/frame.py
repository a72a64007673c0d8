"""Beam frames as metric graphs: domain types, JSON ingestion and validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import jsonschema
import numpy as np

from . import geometry

ORTHO_TOL = 1e-12
AXIS_TOL = 1e-10
PSD_TOL = 1e-12

KINDS = ("fixed", "free", "joint")


class FrameError(ValueError):
    """Raised when a frame description cannot be turned into a valid frame."""

    def __init__(self, message: str, diagnostics: list["Diagnostic"] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


@dataclass(frozen=True)
class Diagnostic:
    code: str
    entity: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} [{self.entity}]: {self.message}"


@dataclass(frozen=True)
class MaterialParams:
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    d: float = 1.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True, eq=False)
class EdgeFrame:
    """Local orthonormal basis of an edge; ``i`` points from origin to terminus."""

    i: np.ndarray
    j: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        for name in ("i", "j", "k"):
            vec = np.asarray(getattr(self, name), dtype=float).reshape(3)
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)

    @property
    def matrix(self) -> np.ndarray:
        return geometry.rotation_to_local(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EdgeFrame):
            return NotImplemented
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in "ijk")


@dataclass(frozen=True, eq=False)
class ComplianceSpec:
    """Joint compliances Θ = K⁻¹ for one incident edge, in local (i, j, k) axes.

    ``free_g`` / ``free_omega`` flag axes with infinite compliance: the
    corresponding force or moment component vanishes and the trace is
    decoupled from the vertex unknown.
    """

    theta_g: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    theta_omega: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    free_g: tuple[bool, bool, bool] = (False, False, False)
    free_omega: tuple[bool, bool, bool] = (False, False, False)

    def __post_init__(self):
        for name in ("theta_g", "theta_omega"):
            mat = np.array(getattr(self, name), dtype=float)
            if mat.ndim == 0:
                mat = float(mat) * np.eye(3)
            elif mat.shape == (3,):
                mat = np.diag(mat)
            mat = mat.reshape(3, 3)
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)
        for name in ("free_g", "free_omega"):
            object.__setattr__(self, name, tuple(bool(x) for x in getattr(self, name)))

    @classmethod
    def rigid(cls) -> "ComplianceSpec":
        return cls()

    @classmethod
    def isotropic(cls, theta_g: float = 0.0, theta_omega: float = 0.0) -> "ComplianceSpec":
        return cls(theta_g * np.eye(3), theta_omega * np.eye(3))

    def theta(self, kind: str) -> np.ndarray:
        return self.theta_g if kind == "g" else self.theta_omega

    def free(self, kind: str) -> tuple[bool, bool, bool]:
        return self.free_g if kind == "g" else self.free_omega

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComplianceSpec):
            return NotImplemented
        return (
            np.array_equal(self.theta_g, other.theta_g)
            and np.array_equal(self.theta_omega, other.theta_omega)
            and self.free_g == other.free_g
            and self.free_omega == other.free_omega
        )


@dataclass(frozen=True, eq=False)
class Edge:
    id: str
    origin: str
    terminus: str
    length: float
    frame: EdgeFrame
    material: MaterialParams = MaterialParams()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Edge):
            return NotImplemented
        return (
            (self.id, self.origin, self.terminus, self.length, self.material)
            == (other.id, other.origin, other.terminus, other.length, other.material)
            and self.frame == other.frame
        )


@dataclass(frozen=True, eq=False)
class VertexSpec:
    id: str
    coords: np.ndarray
    mass: float = 0.0
    kind: str = "joint"
    couplings: Mapping[str, ComplianceSpec] = field(default_factory=dict)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float).reshape(3)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "couplings", dict(self.couplings))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VertexSpec):
            return NotImplemented
        return (
            (self.id, self.mass, self.kind) == (other.id, other.mass, other.kind)
            and np.array_equal(self.coords, other.coords)
            and self.couplings == other.couplings
        )


@dataclass(frozen=True, eq=False)
class FrameGraph:
    """Metric graph of beams.

    ``family`` optionally names the canonical construction the frame came
    from (``{"name": ..., "params": {...}}``); the CLI uses it to pick an
    analytic secular assembler.
    """

    vertices: tuple[VertexSpec, ...]
    edges: tuple[Edge, ...]
    family: Mapping[str, Any] | None = None

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))

    def vertex(self, vid: str) -> VertexSpec:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise KeyError(vid)

    def edge(self, eid: str) -> Edge:
        for e in self.edges:
            if e.id == eid:
                return e
        raise KeyError(eid)

    @property
    def incidence(self) -> dict[str, list[tuple[Edge, int]]]:
        """Vertex id -> list of (edge, s) with s = -1 at the origin, +1 at the terminus."""
        inc: dict[str, list[tuple[Edge, int]]] = {v.id: [] for v in self.vertices}
        for e in self.edges:
            inc.setdefault(e.origin, []).append((e, -1))
            inc.setdefault(e.terminus, []).append((e, +1))
        return inc

    def degree(self, vid: str) -> int:
        return len(self.incidence.get(vid, []))

    def joints(self) -> list[VertexSpec]:
        return [v for v in self.vertices if v.kind == "joint"]

    def is_planar(self, tol: float = 1e-12) -> bool:
        e3 = np.array([0.0, 0.0, 1.0])
        return all(np.max(np.abs(e.frame.k - e3)) <= tol for e in self.edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrameGraph):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.edges == other.edges
            and (self.family or None) == (other.family or None)
        )


# --------------------------------------------------------------------------
# validation

def _check_compliance(vid: str, eid: str, spec: ComplianceSpec) -> list[Diagnostic]:
    out = []
    entity = f"{vid}/{eid}"
    for kind in ("g", "omega"):
        theta = spec.theta(kind)
        if not np.all(np.isfinite(theta)):
            out.append(Diagnostic("compliance", entity, f"theta_{kind} has non-finite entries"))
            continue
        scale = max(1.0, float(np.max(np.abs(theta))))
        if np.max(np.abs(theta - theta.T)) > PSD_TOL * scale:
            out.append(Diagnostic("compliance", entity, f"theta_{kind} is not symmetric"))
        lam_min = float(np.min(np.linalg.eigvalsh(0.5 * (theta + theta.T))))
        if lam_min < -PSD_TOL * scale:
            out.append(
                Diagnostic(
                    "compliance",
                    entity,
                    f"theta_{kind} is not positive semidefinite (min eigenvalue {lam_min:.6g})",
                )
            )
        for axis, flag in enumerate(spec.free(kind)):
            if flag and (np.any(theta[axis] != 0) or np.any(theta[:, axis] != 0)):
                out.append(
                    Diagnostic(
                        "free flag",
                        entity,
                        f"free_{kind}[{axis}] set while theta_{kind} has nonzero entries on that axis",
                    )
                )
    return out


def validate(frame: FrameGraph) -> list[Diagnostic]:
    """Return one diagnostic per violated invariant; empty when the frame is valid."""
    diags: list[Diagnostic] = []
    ids = [v.id for v in frame.vertices]
    vset = set(ids)
    if len(vset) != len(ids):
        diags.append(Diagnostic("duplicate", "vertices", "vertex ids are not unique"))
    eids = [e.id for e in frame.edges]
    if len(set(eids)) != len(eids):
        diags.append(Diagnostic("duplicate", "edges", "edge ids are not unique"))
    if not frame.edges:
        diags.append(Diagnostic("empty", "edges", "frame has no edges"))

    pairs: set[frozenset[str]] = set()
    for e in frame.edges:
        for end in (e.origin, e.terminus):
            if end not in vset:
                diags.append(Diagnostic("missing vertex", e.id, f"endpoint {end!r} does not exist"))
        if e.origin == e.terminus:
            diags.append(Diagnostic("self-loop", e.id, "origin equals terminus"))
        pair = frozenset((e.origin, e.terminus))
        if pair in pairs and len(pair) == 2:
            diags.append(Diagnostic("multi-edge", e.id, "another edge joins the same vertices"))
        pairs.add(pair)
        if not (e.length > 0 and math.isfinite(e.length)):
            diags.append(Diagnostic("length", e.id, f"length must be positive, got {e.length}"))
        for name in ("a", "b", "c", "d"):
            val = getattr(e.material, name)
            if not (val > 0 and math.isfinite(val)):
                diags.append(Diagnostic("material", e.id, f"{name} must be positive, got {val}"))
        i, j, k = e.frame.i, e.frame.j, e.frame.k
        if max(abs(np.linalg.norm(x) - 1.0) for x in (i, j, k)) > ORTHO_TOL or max(
            abs(i @ j), abs(j @ k), abs(k @ i)
        ) > ORTHO_TOL:
            diags.append(Diagnostic("orthonormality", e.id, "edge frame is not orthonormal"))
        elif abs(np.cross(i, j) @ k - 1.0) > ORTHO_TOL:
            diags.append(Diagnostic("orientation", e.id, "edge frame is left-handed"))
        if e.origin in vset and e.terminus in vset and e.length > 0:
            chord = frame.vertex(e.terminus).coords - frame.vertex(e.origin).coords
            if np.max(np.abs(chord / e.length - i)) > AXIS_TOL:
                diags.append(
                    Diagnostic("axis", e.id, "frame.i does not point from origin to terminus")
                )

    inc = frame.incidence
    for v in frame.vertices:
        if v.kind not in KINDS:
            diags.append(Diagnostic("kind", v.id, f"unknown vertex kind {v.kind!r}"))
            continue
        if not (v.mass >= 0 and math.isfinite(v.mass)):
            diags.append(Diagnostic("mass", v.id, f"mass must be nonnegative, got {v.mass}"))
        deg = len(inc.get(v.id, []))
        if deg == 0:
            diags.append(Diagnostic("isolated", v.id, "vertex has no incident edges"))
        if v.kind in ("fixed", "free"):
            if deg != 1:
                diags.append(
                    Diagnostic("boundary degree", v.id, f"{v.kind} vertex must have degree 1, has {deg}")
                )
            if v.couplings:
                diags.append(Diagnostic("coupling", v.id, f"{v.kind} vertex cannot carry couplings"))
            continue
        incident = {e.id for e, _ in inc.get(v.id, [])}
        for eid in sorted(incident - set(v.couplings)):
            diags.append(Diagnostic("missing coupling", v.id, f"no coupling for incident edge {eid!r}"))
        for eid in sorted(set(v.couplings) - incident):
            diags.append(Diagnostic("coupling", v.id, f"coupling for non-incident edge {eid!r}"))
        for eid in sorted(set(v.couplings) & incident):
            diags.extend(_check_compliance(v.id, eid, v.couplings[eid]))

    if frame.vertices and frame.edges and not diags:
        adj: dict[str, set[str]] = {vid: set() for vid in ids}
        for e in frame.edges:
            adj[e.origin].add(e.terminus)
            adj[e.terminus].add(e.origin)
        seen = {ids[0]}
        stack = [ids[0]]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        if seen != vset:
            diags.append(
                Diagnostic("disconnected", ",".join(sorted(vset - seen)), "graph is not connected")
            )
    return diags


# --------------------------------------------------------------------------
# JSON ingestion

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_MAT3 = {"type": "array", "items": _VEC3, "minItems": 3, "maxItems": 3}
_FLAGS = {"type": "array", "items": {"type": "boolean"}, "minItems": 3, "maxItems": 3}

FRAME_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["vertices", "edges"],
    "properties": {
        "vertices": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "coords", "kind"],
                "properties": {
                    "id": {"type": "string"},
                    "coords": _VEC3,
                    "mass": {"type": "number", "minimum": 0},
                    "kind": {"enum": list(KINDS)},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "from", "to"],
                "properties": {
                    "id": {"type": "string"},
                    "from": {"type": "string"},
                    "to": {"type": "string"},
                    "length": {"type": "number"},
                    "j_hint": _VEC3,
                    "material": {
                        "type": "object",
                        "properties": {k: {"type": "number"} for k in "abcd"},
                    },
                },
            },
        },
        "joints": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["vertex", "couplings"],
                "properties": {
                    "vertex": {"type": "string"},
                    "couplings": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["edge"],
                            "properties": {
                                "edge": {"type": "string"},
                                "theta_g": _MAT3,
                                "theta_omega": _MAT3,
                                "free_g": _FLAGS,
                                "free_omega": _FLAGS,
                            },
                        },
                    },
                },
            },
        },
        "family": {
            "type": "object",
            "required": ["name"],
            "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
        },
    },
}


def _raise_if_invalid(frame: FrameGraph) -> FrameGraph:
    diags = validate(frame)
    if diags:
        raise FrameError("; ".join(str(d) for d in diags), diags)
    return frame


def frame_from_dict(doc: Mapping[str, Any]) -> FrameGraph:
    """Build and validate a frame from an already-decoded JSON document."""
    try:
        jsonschema.validate(doc, FRAME_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise FrameError(f"schema violation at {path}: {exc.message}") from None

    coords = {v["id"]: np.asarray(v["coords"], dtype=float) for v in doc["vertices"]}
    couplings: dict[str, dict[str, ComplianceSpec]] = {}
    for jt in doc.get("joints", []):
        target = couplings.setdefault(jt["vertex"], {})
        for c in jt["couplings"]:
            target[c["edge"]] = ComplianceSpec(
                c.get("theta_g", np.zeros((3, 3))),
                c.get("theta_omega", np.zeros((3, 3))),
                tuple(c.get("free_g", (False,) * 3)),
                tuple(c.get("free_omega", (False,) * 3)),
            )
    for vid in couplings:
        if vid not in coords:
            raise FrameError(f"joint entry refers to unknown vertex {vid!r}")

    vertices = [
        VertexSpec(
            v["id"],
            coords[v["id"]],
            float(v.get("mass", 0.0)),
            v["kind"],
            couplings.get(v["id"], {}),
        )
        for v in doc["vertices"]
    ]

    edges = []
    for item in doc["edges"]:
        eid = item["id"]
        for end in (item["from"], item["to"]):
            if end not in coords:
                raise FrameError(f"edge {eid!r} refers to unknown vertex {end!r}")
        chord = coords[item["to"]] - coords[item["from"]]
        chord_len = float(np.linalg.norm(chord))
        if chord_len == 0.0:
            raise FrameError(f"edge {eid!r} is degenerate (zero length)")
        length = float(item.get("length", chord_len))
        i, j, k = geometry.derive_edge_frame(chord, item.get("j_hint"))
        mat = item.get("material", {})
        edges.append(
            Edge(
                eid,
                item["from"],
                item["to"],
                length,
                EdgeFrame(i, j, k),
                MaterialParams(*(float(mat.get(n, 1.0)) for n in "abcd")),
            )
        )
    family = doc.get("family")
    return _raise_if_invalid(FrameGraph(vertices, edges, dict(family) if family else None))


def parse_frame(document: str) -> FrameGraph:
    """Parse a JSON frame description; raises :class:`FrameError` on any problem."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise FrameError(f"invalid JSON: {exc}") from None
    return frame_from_dict(doc)


def frame_to_dict(frame: FrameGraph) -> dict[str, Any]:
    """Inverse of :func:`frame_from_dict`. Frames are written out via ``j_hint``."""
    doc: dict[str, Any] = {
        "vertices": [
            {"id": v.id, "coords": v.coords.tolist(), "mass": v.mass, "kind": v.kind}
            for v in frame.vertices
        ],
        "edges": [
            {
                "id": e.id,
                "from": e.origin,
                "to": e.terminus,
                "length": e.length,
                "j_hint": e.frame.j.tolist(),
                "material": dict(zip("abcd", e.material.as_tuple())),
            }
            for e in frame.edges
        ],
        "joints": [
            {
                "vertex": v.id,
                "couplings": [
                    {
                        "edge": eid,
                        "theta_g": c.theta_g.tolist(),
                        "theta_omega": c.theta_omega.tolist(),
                        "free_g": list(c.free_g),
                        "free_omega": list(c.free_omega),
                    }
                    for eid, c in v.couplings.items()
                ],
            }
            for v in frame.vertices
            if v.kind == "joint"
        ],
    }
    if frame.family:
        doc["family"] = dict(frame.family)
    return doc


def serialize(frame: FrameGraph) -> str:
    return json.dumps(frame_to_dict(frame), indent=2, sort_keys=True)


# --------------------------------------------------------------------------
# canonical frames

def _edge(eid: str, origin: VertexSpec, terminus: VertexSpec, material: MaterialParams) -> Edge:
    chord = terminus.coords - origin.coords
    return Edge(
        eid,
        origin.id,
        terminus.id,
        float(np.linalg.norm(chord)),
        EdgeFrame(*geometry.derive_edge_frame(chord)),
        material,
    )


def two_beam_1d(
    l1: float = 0.5,
    l2: float = 0.5,
    mass: float = 0.0,
    theta_g: float = 0.0,
    theta_omega: float = 0.0,
    b1: float = 1.0,
    b2: float = 1.0,
) -> FrameGraph:
    """Clamped beam e1 and free beam e2, both oriented toward the joint ``vc``."""
    if l1 <= 0 or l2 <= 0:
        raise FrameError("edge lengths must be positive")
    if theta_g < 0 or theta_omega < 0 or mass < 0:
        raise FrameError("compliances and mass must be nonnegative")
    coupling = ComplianceSpec.isotropic(theta_g, theta_omega)
    v1 = VertexSpec("v1", (0.0, 0.0, 0.0), 0.0, "fixed")
    v2 = VertexSpec("v2", (l1 + l2, 0.0, 0.0), 0.0, "free")
    vc = VertexSpec("vc", (l1, 0.0, 0.0), mass, "joint", {"e1": coupling, "e2": coupling})
    edges = [
        _edge("e1", v1, vc, MaterialParams(b=b1)),
        _edge("e2", v2, vc, MaterialParams(b=b2)),
    ]
    params = dict(l1=l1, l2=l2, mass=mass, theta_g=theta_g, theta_omega=theta_omega, b1=b1, b2=b2)
    return FrameGraph([v1, vc, v2], edges, {"name": "two-beam-1d", "params": params})


def antenna(
    alpha: float = math.pi / 4,
    mass: float = 0.0,
    theta_g0: float = 0.0,
    theta_omega0: float = 0.0,
    theta_g: float = 0.0,
    theta_omega: float = 0.0,
) -> FrameGraph:
    """Vertical free edge e0 on three fixed legs inclined by ``alpha``; unit lengths and materials."""
    if not 0.0 < alpha < math.pi / 2:
        raise FrameError(f"alpha must lie in (0, pi/2), got {alpha}")
    if min(mass, theta_g0, theta_omega0, theta_g, theta_omega) < 0:
        raise FrameError("compliances and mass must be nonnegative")
    R, _ = geometry.d3_matrices()
    i1 = np.array([math.cos(alpha), 0.0, math.sin(alpha)])
    center = VertexSpec(
        "vc",
        (0.0, 0.0, 0.0),
        mass,
        "joint",
        {
            "e0": ComplianceSpec.isotropic(theta_g0, theta_omega0),
            **{f"e{s}": ComplianceSpec.isotropic(theta_g, theta_omega) for s in (1, 2, 3)},
        },
    )
    top = VertexSpec("v0", (0.0, 0.0, 1.0), 0.0, "free")
    vertices = [center, top]
    edges = [_edge("e0", top, center, MaterialParams())]
    i_s = i1
    for s in (1, 2, 3):
        leg = VertexSpec(f"v{s}", -i_s, 0.0, "fixed")
        vertices.append(leg)
        edges.append(_edge(f"e{s}", leg, center, MaterialParams()))
        i_s = R @ i_s
    params = dict(
        alpha=alpha,
        mass=mass,
        theta_g0=theta_g0,
        theta_omega0=theta_omega0,
        theta_g=theta_g,
        theta_omega=theta_omega,
    )
    return FrameGraph(vertices, edges, {"name": "antenna", "params": params})


def star3_planar(
    delta1: float = 2 * math.pi / 3,
    delta2: float = 2 * math.pi / 3,
    mass: float = 0.0,
    theta_gv: float = 0.0,
    theta_omega_v: float = 0.0,
    theta_omega_eta: float = 0.0,
    theta_gu: float = 0.0,
    theta_gw: float = 0.0,
    theta_omega_w: float = 0.0,
    a: float = 1.0,
    b: float = 1.0,
    c: float = 1.0,
    d: float = 1.0,
) -> FrameGraph:
    """Planar star of three unit edges from fixed leaves into the central joint.

    Edge s points along (cos θ_s, sin θ_s, 0) with θ = (0, δ₁, δ₁ + δ₂).
    Compliances are diagonal in local (i, j, k) axes.
    """
    if not (delta1 > 0 and delta2 > 0 and delta1 + delta2 < 2 * math.pi):
        raise FrameError("require delta1, delta2 > 0 and delta1 + delta2 < 2 pi")
    thetas = (theta_gv, theta_omega_v, theta_omega_eta, theta_gu, theta_gw, theta_omega_w)
    if min(thetas) < 0 or mass < 0:
        raise FrameError("compliances and mass must be nonnegative")
    coupling = ComplianceSpec(
        np.diag([theta_gu, theta_gw, theta_gv]),
        np.diag([theta_omega_eta, theta_omega_v, theta_omega_w]),
    )
    material = MaterialParams(a, b, c, d)
    center = VertexSpec("vc", (0.0, 0.0, 0.0), mass, "joint", {f"e{s}": coupling for s in (1, 2, 3)})
    vertices = [center]
    edges = []
    for s, ang in enumerate((0.0, delta1, delta1 + delta2), start=1):
        leaf = VertexSpec(f"v{s}", (-math.cos(ang), -math.sin(ang), 0.0), 0.0, "fixed")
        vertices.append(leaf)
        edges.append(_edge(f"e{s}", leaf, center, material))
    params = dict(
        delta1=delta1,
        delta2=delta2,
        mass=mass,
        theta_gv=theta_gv,
        theta_omega_v=theta_omega_v,
        theta_omega_eta=theta_omega_eta,
        theta_gu=theta_gu,
        theta_gw=theta_gw,
        theta_omega_w=theta_omega_w,
        a=a,
        b=b,
        c=c,
        d=d,
    )
    return FrameGraph(vertices, edges, {"name": "star3-planar", "params": params})


_FAMILIES = {
    "two-beam-1d": two_beam_1d,
    "antenna": antenna,
    "star3-planar": star3_planar,
}


def canonical_examples(name: str, **params: float) -> FrameGraph:
    """Build one of the worked-example frames: ``two-beam-1d``, ``antenna`` or ``star3-planar``."""
    try:
        builder = _FAMILIES[name]
    except KeyError:
        raise FrameError(f"unknown canonical example {name!r}; known: {sorted(_FAMILIES)}") from None
    try:
        frame = builder(**params)
    except TypeError as exc:
        raise FrameError(f"bad parameters for {name!r}: {exc}") from None
    return _raise_if_invalid(frame)


def family_names() -> Iterable[str]:
    return tuple(_FAMILIES)

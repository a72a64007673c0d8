import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beamframe import fields as F
from beamframe import modes as md
from beamframe.frame import ComplianceSpec, Edge, EdgeFrame, FrameGraph, VertexSpec, canonical_examples
from beamframe.geometry import derive_edge_frame, geometric_vectors
from beamframe.oracle import discretize_form
from beamframe.secular import (
    FundamentalSystem,
    StarParams,
    TwoBeamParams,
    problem_1d,
    problem_3star_planar,
    problem_antenna_omega,
    scan_roots,
)


GL_X, GL_W = np.polynomial.legendre.leggauss(80)


def cantilever_shape(mu):
    sigma = (math.cosh(mu) + math.cos(mu)) / (math.sinh(mu) + math.sin(mu))
    return lambda x: np.cosh(mu * x) - np.cos(mu * x) - sigma * (np.sinh(mu * x) - np.sin(mu * x))


def merged_w(mode, X):
    """Two-beam mode as one clamped-free function along the global axis (e2 runs backward, j2 = -j1)."""
    fns = mode.functions
    X = np.asarray(X, dtype=float)
    return np.where(X <= 0.5, fns["e1"]["w"](np.minimum(X, 0.5)), -fns["e2"]["w"](np.clip(1.0 - X, 0.0, 0.5)))


@pytest.fixture(scope="module")
def rigid_1d_modes():
    recs = scan_roots(problem_1d(TwoBeamParams()), (0.0, 2e4), 4)
    return [md.reconstruct_1d_mode(r, TwoBeamParams()) for r in recs]


def test_cantilever_shape_matches(rigid_1d_modes):
    X = np.linspace(0.0, 1.0, 20)
    for mode in rigid_1d_modes:
        ref = cantilever_shape(mode.mu)
        norm = math.sqrt(0.5 * GL_W @ ref(0.5 * (GL_X + 1)) ** 2)
        got = merged_w(mode, X).real
        sign = np.sign(got @ ref(X))
        np.testing.assert_allclose(sign * got, ref(X) / norm, atol=1e-8)


def test_normalization_and_sign(rigid_1d_modes):
    for mode in rigid_1d_modes:
        assert mode.norm_squared() == pytest.approx(1.0, abs=1e-8)
        first = next(a for e in sorted(mode.samples) for k in F.FIELDS for a in mode.samples[e][k] if abs(a) > 1e-8)
        assert first.real > 0


def test_classification_1d(rigid_1d_modes):
    assert all(m.classification == frozenset({"in-plane"}) for m in rigid_1d_modes)


@pytest.mark.parametrize("mass, tg, to", list(itertools.product((0.0, 1.0), repeat=3)))
def test_1d_vertex_conditions(mass, tg, to):
    p = TwoBeamParams.uniform(mass=mass, theta_g=tg, theta_omega=to)
    for rec in scan_roots(problem_1d(p), (0.0, 2e4), 3):
        mode = md.reconstruct_1d_mode(rec, p)
        assert md.max_vertex_residual(mode) < 1e-8
        assert max(md.ode_residuals(mode).values()) < 1e-6
        # displacement jump at the joint in the local frame of e1 (s = +1)
        w = mode.functions["e1"]["w"]
        w0 = mode.frame.edge("e1").frame.matrix @ mode.g0["vc"]
        jump = w(0.5) - tg * w(0.5, 3) - w0[1]
        assert abs(jump) < 1e-8 * max(1.0, abs(w(0.5)))


def test_1d_mass_balance():
    p = TwoBeamParams.uniform(mass=0.8)
    rec = scan_roots(problem_1d(p), (0.0, 1e3), 1)[0]
    mode = md.reconstruct_1d_mode(rec, p)
    bal = [r for r in md.vertex_residuals(mode) if r.condition == "g-balance"]
    assert bal and bal[0].relative < 1e-8


@pytest.fixture(scope="module")
def star_case():
    frame = canonical_examples("star3-planar", delta1=1.8, delta2=2.1)
    geom = geometric_vectors([e.frame for e in frame.edges])
    params = StarParams(theta_gv=0.3, theta_omega_v=0.2, theta_omega_eta=0.4, mass=0.5)
    recs = scan_roots(problem_3star_planar(geom, params), (0.0, 600.0), 6)
    system = FundamentalSystem(md.star_frame(geom, params), ("v", "eta"))
    modes = []
    for r in recs:
        if r.origin == "exceptional":
            modes += md.modes_from_fundamental(system, r)
        else:
            modes.append(md.reconstruct_3star_mode(r, geom, params))
    assert any(r.origin == "exceptional" for r in recs)
    return geom, params, modes


def test_star_modes(star_case):
    _, _, modes = star_case
    assert len(modes) >= 6
    for mode in modes:
        for e in mode.frame.edges:
            fn = mode.functions[e.id]
            assert fn["v"](0.0) == pytest.approx(0, abs=1e-12)
            assert fn["v"](0.0, 1) == pytest.approx(0, abs=1e-12)
            assert fn["eta"](0.0) == pytest.approx(0, abs=1e-12)
        assert md.max_vertex_residual(mode) < 1e-8
        assert max(md.ode_residuals(mode).values()) < 1e-6
        assert mode.classification == frozenset({"out-of-plane"})


def test_planar_lemma(star_case):
    _, _, modes = star_case
    for mode in modes:
        res = md.planar_lemma_residuals(mode, "vc")
        assert max(max(v) for v in res.values()) < 1e-7


def test_corrupted_mode_detected(star_case):
    # add 1e-3 to any single coefficient of a unit-norm mode
    for mode in (m for m in star_case[2] if m.method == "secular"):
        for e, per in mode.functions.items():
            for name in ("v", "eta"):
                fn = per[name]
                for n in range(len(fn.coef)):
                    coef = np.array(fn.coef, dtype=complex)
                    coef[n] += 1e-3
                    fns = {k: dict(p) for k, p in mode.functions.items()}
                    fns[e][name] = F.FieldFunction(name, fn.k, coef, fn.length)
                    bad = md.EigenMode(mode.lam, 1, mode.state, functions=fns, frame=mode.frame)
                    res = md.planar_lemma_residuals(bad, "vc")
                    assert max(max(v) for v in res.values()) > 1e-5


def test_coplanarity_degree_two():
    f = canonical_examples("two-beam-1d")
    np.testing.assert_array_equal(md.coplanarity_matrix(f, "vc"), 0.0)
    bent = FrameGraph(
        [
            VertexSpec("vc", (0, 0, 0), 0.0, "joint", {"e1": ComplianceSpec(), "e2": ComplianceSpec()}),
            VertexSpec("a", (-1, 0, 0), kind="fixed"),
            VertexSpec("b", (-0.3, -0.8, 0), kind="fixed"),
        ],
        [
            Edge("e1", "a", "vc", 1.0, EdgeFrame(*derive_edge_frame((1, 0, 0)))),
            Edge("e2", "b", "vc", 1.0, EdgeFrame(*derive_edge_frame((0.3, 0.8, 0)))),
        ],
    )
    np.testing.assert_allclose(md.coplanarity_matrix(bent, "vc"), 0.0, atol=1e-15)


@pytest.fixture(scope="module")
def antenna_modes():
    alpha, mass, tg, to = 0.7, 0.3, 0.2, 0.1
    recs = scan_roots(problem_antenna_omega(alpha, mass, tg, to), (0.0, 800.0), 4)
    return [md.reconstruct_antenna_mode(r, alpha, mass, tg, to) for r in recs]


def test_antenna_modes(antenna_modes):
    for mode in antenna_modes:
        assert md.max_vertex_residual(mode) < 1e-8
        assert max(md.ode_residuals(mode).values()) < 1e-6
        assert mode.classification == frozenset({"omega"})
        bar = md.conjugate_mode(mode)
        assert md.max_vertex_residual(bar) < 1e-8
        assert bar.classification == frozenset({"omega-bar"})


def test_real_basis_spans_pair(antenna_modes):
    for mode in antenna_modes:
        basis = md.real_basis(mode)
        assert len(basis) == 2
        for b in basis:
            assert md.max_vertex_residual(b) < 1e-8
            assert b.classification == frozenset({"omega", "omega-bar"})
        assert md.classify_eigenspace(basis) == frozenset({"omega", "omega-bar"})


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_classification_scale_invariant(c):
    rng = np.random.default_rng(0)
    state = md.random_antenna_state(rng, complex_values=True)
    part = md.symmetry_projectors()["omega"](state)
    frame = canonical_examples("antenna")
    base = md.classify_mode(md.EigenMode(1.0, 1, part), frame)
    scaled = md.classify_mode(md.EigenMode(1.0, 1, part.scaled(c)), frame)
    assert base == scaled == frozenset({"omega"})


def test_generic_frame_is_coupled():
    v = [
        VertexSpec("vc", (0, 0, 0), 0.0, "joint", {f"e{s}": ComplianceSpec() for s in range(3)}),
        VertexSpec("a", (-1, 0, 0), kind="fixed"),
        VertexSpec("b", (0, -1, -0.4), kind="fixed"),
        VertexSpec("c", (0.3, 0.2, -1), kind="fixed"),
    ]
    edges = [
        Edge(f"e{s}", leaf.id, "vc", float(np.linalg.norm(leaf.coords)), EdgeFrame(*derive_edge_frame(-leaf.coords)))
        for s, leaf in enumerate(v[1:])
    ]
    frame = FrameGraph(v, edges)
    modes = md.modes_from_oracle(discretize_form(frame, 40), 3)
    assert all(m.classification == frozenset({"coupled"}) for m in modes)


def states(rng, n):
    return [md.random_antenna_state(rng, complex_values=bool(k % 2)) for k in range(n)]


def vec(state):
    return state.vector()


def test_projector_algebra():
    rng = np.random.default_rng(4)
    P = md.symmetry_projectors()
    for s in states(rng, 100):
        parts = {n: p(s) for n, p in P.items()}
        total = sum(vec(p) for p in parts.values())
        assert np.max(np.abs(total - vec(s))) < 1e-12
        for n, p in P.items():
            assert np.max(np.abs(vec(p(parts[n])) - vec(parts[n]))) < 1e-12
            for m in P:
                if m != n:
                    assert np.max(np.abs(vec(P[m](parts[n])))) < 1e-12


def test_projectors_conjugate_on_real_states():
    rng = np.random.default_rng(8)
    P = md.symmetry_projectors()
    s = md.random_antenna_state(rng)
    np.testing.assert_allclose(vec(P["omega"](s)), np.conj(vec(P["omega-bar"](s))), atol=1e-14)


def test_alt_subspace_fixed():
    rng = np.random.default_rng(9)
    P = md.symmetry_projectors()["alt"]
    s = P(md.random_antenna_state(rng))
    np.testing.assert_allclose(vec(P(s)), vec(s), atol=1e-14)


def test_decouple_diagonal_projection():
    f = canonical_examples("star3-planar", theta_gu=0.1, theta_gw=0.2, theta_gv=0.3, theta_omega_eta=0.4,
                           theta_omega_v=0.5, theta_omega_w=0.6)
    pair = md.decouple_planar(f)
    g_out, o_out = pair.out_problem.compliances[("vc", "e1")]
    g_in, o_in = pair.in_problem.compliances[("vc", "e1")]
    np.testing.assert_array_equal(g_out, [[0.3]])
    np.testing.assert_array_equal(o_in, [[0.6]])
    np.testing.assert_array_equal(o_out, np.diag([0.4, 0.5]))
    np.testing.assert_array_equal(g_in, np.diag([0.1, 0.2]))
    assert pair.out_problem.fields == ("v", "eta") and pair.in_problem.fields == ("w", "u")
    np.testing.assert_array_equal(pair.P.T @ pair.P, np.eye(2))
    np.testing.assert_array_equal(pair.Q.T @ pair.Q, [[1.0]])
    np.testing.assert_array_equal(pair.P.T @ pair.Q, [[0.0], [0.0]])


def replace_coupling(frame, spec):
    vc = frame.vertex("vc")
    new = VertexSpec("vc", vc.coords, vc.mass, "joint", {k: spec for k in vc.couplings})
    return FrameGraph([new if v.id == "vc" else v for v in frame.vertices], frame.edges, frame.family)


def test_decouple_rejects_normal_coupling():
    th = np.diag([1.0, 1.0, 1.0])
    th[0, 2] = th[2, 0] = 0.3
    frame = replace_coupling(canonical_examples("star3-planar"), ComplianceSpec(th, np.zeros(3)))
    with pytest.raises(md.ModeError):
        md.decouple_planar(frame)


def test_decouple_rejects_nonplanar():
    with pytest.raises(md.ModeError):
        md.decouple_planar(canonical_examples("antenna"))


def released_star():
    spec = ComplianceSpec(np.diag([0.0, 0.2, 0.1]), np.diag([0.0, 0.3, 0.4]), (True, False, False), (True, False, False))
    return replace_coupling(canonical_examples("star3-planar", delta1=1.9, delta2=2.2), spec)


def test_scalar_conditions():
    subs = md.scalar_decompositions(released_star())
    assert set(subs) == {"v-out", "eta-out", "w-in", "u-in"}
    assert all(c == ("neumann",) for c in subs["eta-out"].conditions.values())
    assert all("rotation-coplanarity" in c for c in subs["v-out"].conditions.values())


def test_scalar_preconditions():
    with pytest.raises(md.ModeError, match="released"):
        md.scalar_decompositions(canonical_examples("star3-planar"))
    with pytest.raises(md.ModeError, match="mass"):
        md.scalar_decompositions(canonical_examples("star3-planar", mass=1.0))


def test_fundamental_modes_satisfy_conditions():
    frame = released_star()
    system = FundamentalSystem(frame)
    recs = scan_roots(system.problem(), (0.0, 60.0), 4)
    for rec in recs:
        for mode in md.modes_from_fundamental(system, rec):
            assert md.max_vertex_residual(mode) < 1e-8
            assert mode.norm_squared() == pytest.approx(1.0, abs=1e-8)


def test_oracle_modes_unit_norm():
    modes = md.modes_from_oracle(discretize_form(canonical_examples("two-beam-1d", mass=0.5), 200, ("w",)), 3, 401)
    for m in modes:
        assert m.norm_squared() == pytest.approx(1.0, rel=1e-4)
        assert m.classification == frozenset({"in-plane"})


def test_relative_mismatch():
    assert md.relative_mismatch([1.0, 2.0], [2.0, 1.0]) == 0.0
    assert md.relative_mismatch([1.0], [1.0, 2.0]) == math.inf

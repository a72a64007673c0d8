import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from beamframe.frame import ComplianceSpec, FrameError, Edge, EdgeFrame, FrameGraph, VertexSpec, canonical_examples
from beamframe.geometry import derive_edge_frame
from beamframe.oracle import (
    convergence_study,
    discretize_form,
    observed_order,
    oracle_spectrum,
    solve_generalized,
)
from beamframe.secular import TwoBeamParams, problem_1d, scan_roots

MU1 = 1.8751040687119611664


def single_beam(kind_end="free", length=1.0):
    return FrameGraph(
        [VertexSpec("a", (0, 0, 0), kind="fixed"), VertexSpec("b", (length, 0, 0), kind=kind_end)],
        [Edge("e", "a", "b", length, EdgeFrame(*derive_edge_frame((1, 0, 0))))],
    )


TEST_FRAMES = {
    "two-beam": canonical_examples("two-beam-1d", mass=0.5, theta_g=0.3, theta_omega=0.2),
    "antenna": canonical_examples("antenna", alpha=0.6, mass=0.4, theta_g0=0.2, theta_omega0=0.1),
    "star": canonical_examples("star3-planar", delta1=1.9, delta2=2.3, mass=0.7, theta_gv=0.2, theta_omega_v=0.4),
    "beam": single_beam(),
}


@pytest.fixture(scope="module", params=sorted(TEST_FRAMES))
def dense_form(request):
    d = discretize_form(TEST_FRAMES[request.param], 12)
    return d, d.K.toarray(), d.M.toarray()


def test_symmetry(dense_form):
    _, K, M = dense_form
    assert np.max(np.abs(K - K.T)) <= 1e-12 * np.max(np.abs(K))
    assert np.max(np.abs(M - M.T)) <= 1e-12 * np.max(np.abs(M))


def test_positivity(dense_form):
    _, K, M = dense_form
    np.linalg.cholesky(M)
    w = np.linalg.eigvalsh(K)
    assert w[0] >= -1e-9 * w[-1]
    rng = np.random.default_rng(5)
    X = rng.standard_normal((K.shape[0], 1000))
    quad = np.einsum("ij,ij->j", X, K @ X)
    assert np.all(quad >= -1e-9 * np.einsum("ij,ij->j", X, X))


def test_cantilever_first_eigenvalue():
    lam = oracle_spectrum(single_beam(), 1, 200, ("w",))[0]
    assert lam == pytest.approx(MU1**4, rel=1e-6)


def test_axial_fixed_fixed():
    # quadratic elements: relative error ~ (n pi h)^4, below 1e-8 for n <= 3 at 200 elements
    lam = oracle_spectrum(single_beam("fixed"), 3, 200, ("u",))
    np.testing.assert_allclose(lam, [(n * math.pi) ** 2 for n in range(1, 4)], rtol=1e-8)


def test_identity_pencil():
    I = sp.identity(40, format="csr")
    np.testing.assert_allclose(solve_generalized((I, I), 5), 1.0)


def test_matches_secular_at_400():
    lam = oracle_spectrum(canonical_examples("two-beam-1d"), 4, 400, ("w",))
    ref = [r.lam for r in scan_roots(problem_1d(TwoBeamParams()), (0, 2e4), 4)]
    np.testing.assert_allclose(lam, ref, rtol=1e-4)


def test_rigid_joint_has_no_springs():
    d = discretize_form(canonical_examples("two-beam-1d"), 10, ("w",))
    assert d.springs == []
    # two edges of 10 Hermite elements, joint eliminated, clamp removes 2
    assert d.size == 2 * 22 - 2 - 2


def test_convergence_order_bending():
    rows = convergence_study(single_beam(), [25, 50, 100], 1, ("w",))
    assert rows[-1].order[0] == pytest.approx(4.0, abs=0.2)


def test_convergence_order_axial():
    rows = convergence_study(single_beam(), [4, 8, 16], 1, ("u",))
    assert rows[-1].order[0] == pytest.approx(4.0, abs=0.2)


def test_convergence_needs_three():
    with pytest.raises(ValueError):
        convergence_study(single_beam(), [10], 1, ("w",))


def test_observed_order_exact():
    hs = [0.1, 0.05, 0.025]
    assert observed_order([1 + h**4 for h in hs], hs) == pytest.approx(4.0, rel=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 2), st.floats(0, 2), st.floats(0, 2), st.floats(0.05, 1))
def test_softening_lowers_eigenvalues(tg, to, m, bump):
    base = oracle_spectrum(canonical_examples("two-beam-1d", theta_g=tg, theta_omega=to, mass=m), 5, 40, ("w",))
    softer_g = oracle_spectrum(
        canonical_examples("two-beam-1d", theta_g=tg + bump, theta_omega=to, mass=m), 5, 40, ("w",)
    )
    softer_o = oracle_spectrum(
        canonical_examples("two-beam-1d", theta_g=tg, theta_omega=to + bump, mass=m), 5, 40, ("w",)
    )
    assert np.all(softer_g <= base * (1 + 1e-10))
    assert np.all(softer_o <= base * (1 + 1e-10))


def test_softening_star_full_frame():
    rng = np.random.default_rng(2)
    kw = dict(delta1=1.7, delta2=2.4, mass=0.3)
    prev = oracle_spectrum(canonical_examples("star3-planar", **kw), 5, 30)
    t = np.zeros(6)
    names = ("theta_gv", "theta_omega_v", "theta_omega_eta", "theta_gu", "theta_gw", "theta_omega_w")
    for _ in range(6):
        t[rng.integers(6)] += rng.uniform(0.05, 0.5)
        cur = oracle_spectrum(canonical_examples("star3-planar", **kw, **dict(zip(names, t))), 5, 30)
        assert np.all(cur <= prev * (1 + 1e-10))
        prev = cur


def test_all_eigenvalues_nonnegative():
    for frame in TEST_FRAMES.values():
        assert np.min(oracle_spectrum(frame, 10, 30)) >= -1e-9


def test_free_axis_needs_zero_compliance():
    f = canonical_examples("star3-planar")
    vc = f.vertex("vc")
    bad = {k: ComplianceSpec(c.theta_g, np.eye(3), c.free_g, (True, False, False)) for k, c in vc.couplings.items()}
    frame = FrameGraph([VertexSpec("vc", vc.coords, 0.0, "joint", bad)] + list(f.vertices[1:]), f.edges)
    with pytest.raises(FrameError):
        discretize_form(frame, 10)


def test_degenerate_copies_found():
    # symmetric star with released torsion and axial axes has a six-fold eigenvalue at (pi/2)^2
    f = canonical_examples("star3-planar")
    vc = f.vertex("vc")
    rel = {k: ComplianceSpec(np.zeros(3), np.zeros(3), (True, False, False), (True, False, False)) for k in vc.couplings}
    frame = FrameGraph([VertexSpec("vc", vc.coords, 0.0, "joint", rel)] + list(f.vertices[1:]), f.edges)
    lam = oracle_spectrum(frame, 20, 300)
    assert int(np.sum(np.abs(lam - (math.pi / 2) ** 2) < 1e-6)) == 6

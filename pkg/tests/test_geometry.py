import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from beamframe.frame import EdgeFrame, canonical_examples
from beamframe.geometry import (
    E1,
    E2,
    E3,
    apply_k_inverse,
    d3_matrices,
    derive_edge_frame,
    geometric_vectors,
    is_k_plane_preserving,
    random_rotation,
    rotation_to_local,
)


def test_identity_frame():
    np.testing.assert_array_equal(rotation_to_local(EdgeFrame(E1, E2, E3)), np.eye(3))


def test_antenna_vertical_rows():
    B = rotation_to_local(EdgeFrame(-E3, E2, E1))
    np.testing.assert_array_equal(B, [[0, 0, -1], [0, 1, 0], [1, 0, 0]])


def test_antenna_leg_row():
    alpha = 0.9
    e1 = canonical_examples("antenna", alpha=alpha).edge("e1")
    np.testing.assert_allclose(e1.frame.matrix[0], [math.cos(alpha), 0, math.sin(alpha)], atol=1e-15)


def test_maps_global_to_local():
    f = canonical_examples("star3-planar", delta1=math.pi / 2, delta2=math.pi)
    B = f.edge("e2").frame.matrix
    np.testing.assert_allclose(B @ E2, [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(B.T @ [0, 1, 0], -E1, atol=1e-15)


@pytest.mark.parametrize(
    "K, expected",
    [(np.diag([2.0, 3.0, 4.0]), True), (np.array([[2, 1, 0], [1, 2, 0], [0, 0, 4.0]]), True)],
)
def test_k_plane_positive(K, expected):
    assert is_k_plane_preserving(K) is expected


def test_k_plane_coupled():
    K = np.diag([2.0, 3.0, 4.0])
    K[0, 2] = K[2, 0] = 0.5
    assert not is_k_plane_preserving(K)


def test_apply_k_inverse_examples():
    np.testing.assert_allclose(apply_k_inverse(np.eye(3), [1.5, -2, 3]), [1.5, -2, 3])
    K = np.array([[2, 1, 0], [1, 2, 0], [0, 0, 4.0]])
    np.testing.assert_allclose(apply_k_inverse(K, (1, 1, 1)), [1 / 3, 1 / 3, 1 / 4], rtol=1e-15)
    np.testing.assert_allclose(apply_k_inverse(np.diag([2.0, 5.0, 8.0]), [1, 1, 1]), [0.5, 0.2, 0.125])


def test_apply_k_inverse_singular():
    with pytest.raises(np.linalg.LinAlgError):
        apply_k_inverse(np.array([[1, 1, 0], [1, 1, 0], [0, 0, 1.0]]), [1, 0, 0])


def test_apply_k_inverse_random():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        A = rng.standard_normal((2, 2))
        K = np.zeros((3, 3))
        K[:2, :2] = A @ A.T + 0.1 * np.eye(2)
        K[2, 2] = rng.uniform(0.1, 5)
        x = rng.standard_normal(3)
        worst = max(worst, float(np.max(np.abs(apply_k_inverse(K, K @ x) - x))))
    assert worst < 1e-10


def test_star_quarter_geometry_products():
    f = canonical_examples("star3-planar", delta1=math.pi / 2, delta2=math.pi)
    g = geometric_vectors([e.frame for e in f.edges])
    one = np.ones(3)
    assert abs(one @ g.J_E1) < 1e-15 and abs(one @ g.J_E2 - 1) < 1e-15
    assert g.I_E1 @ g.I_E1 == pytest.approx(1) and g.J_E2 @ g.J_E2 == pytest.approx(1)
    assert g.I_E2 @ g.I_E2 == pytest.approx(2) and g.J_E1 @ g.J_E1 == pytest.approx(2)
    assert abs(g.I_E1 @ g.I_E2) < 1e-15 and abs(g.J_E1 @ g.J_E2) < 1e-15


def test_symmetric_star_products():
    f = canonical_examples("star3-planar")
    g = geometric_vectors([e.frame for e in f.edges])
    assert abs(g.I_E1 @ g.I_E2) < 1e-14
    assert g.I_E1 @ g.I_E1 == pytest.approx(1.5, abs=1e-14)
    assert g.I_E2 @ g.I_E2 == pytest.approx(1.5, abs=1e-14)


def test_nonplanar_rejected():
    with pytest.raises(ValueError):
        geometric_vectors([e.frame for e in canonical_examples("antenna").edges])


def test_group_relations():
    R, F = d3_matrices()
    I = np.eye(3)
    np.testing.assert_allclose(np.linalg.matrix_power(R, 3), I, atol=1e-12)
    np.testing.assert_allclose(F @ F, I, atol=1e-12)
    np.testing.assert_allclose((F @ R) @ (F @ R), I, atol=1e-12)
    np.testing.assert_array_equal(F @ E2, -E2)


def test_rotation_maps_first_leg():
    R, _ = d3_matrices()
    f = canonical_examples("antenna", alpha=0.5)
    np.testing.assert_allclose(R @ f.edge("e1").frame.i, f.edge("e2").frame.i, atol=1e-14)


unit = arrays(float, 3, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 1e-3)


@settings(max_examples=200, deadline=None)
@given(unit)
def test_derived_frame_is_rotation(chord):
    i, j, k = derive_edge_frame(chord)
    B = rotation_to_local(EdgeFrame(i, j, k))
    np.testing.assert_allclose(B.T @ B, np.eye(3), atol=1e-12)
    assert abs(np.cross(i, j) @ k - 1) < 1e-12
    np.testing.assert_allclose(i, chord / np.linalg.norm(chord), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 2 * math.pi), min_size=2, max_size=6))
def test_gram_blocks(angles):
    frames = [EdgeFrame(*derive_edge_frame([math.cos(a), math.sin(a), 0.0])) for a in angles]
    g = geometric_vectors(frames)
    J = np.vstack([g.J_E1, g.J_E2])
    I = np.vstack([g.I_E1, g.I_E2])
    np.testing.assert_array_equal(g.GJ[1:, 1:], J @ J.T)
    assert np.min(np.linalg.eigvalsh(g.GJ)) > -1e-12
    assert np.min(np.linalg.eigvalsh(g.GI)) > -1e-12
    for s, fr in enumerate(frames):
        assert g.I_E1[s] == E1 @ fr.i and g.J_E2[s] == E2 @ fr.j


def test_random_rotation():
    rng = np.random.default_rng(1)
    for _ in range(50):
        Q = random_rotation(rng)
        np.testing.assert_allclose(Q @ Q.T, np.eye(3), atol=1e-12)
        assert abs(np.linalg.det(Q) - 1) < 1e-12

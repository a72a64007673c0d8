import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from beamframe.localbasis import (
    ExceptionalLambdaError,
    LateralBasisParams,
    TorsionBasisParams,
    det_eta,
    det_v,
    det_v_product,
    det_v_scaled,
    eval_phi,
    eval_psi,
    exceptional_set,
    lateral_bc_matrix,
    lateral_functions,
    phi_closed_form,
    phi_coefficients,
    psi_closed_form,
    psi_coefficients,
    torsion_bc_matrix,
)


def lat(mu, a=1.0, tg=0.0, to=0.0):
    return LateralBasisParams(a, tg, to, a * mu**4)


def bc_trig(p: LateralBasisParams) -> np.ndarray:
    """Boundary functionals on columns sinh, sin, cosh, cos, built by hand."""
    mu, t, r = p.mu, p.a * p.theta_g, p.a * p.theta_omega

    def col(f, d1, d2, d3):
        return [f(0), d1(0), f(1) - t * d3(1), d1(1) + r * d2(1)]

    sh = col(lambda x: math.sinh(mu * x), lambda x: mu * math.cosh(mu * x),
             lambda x: mu**2 * math.sinh(mu * x), lambda x: mu**3 * math.cosh(mu * x))
    sn = col(lambda x: math.sin(mu * x), lambda x: mu * math.cos(mu * x),
             lambda x: -(mu**2) * math.sin(mu * x), lambda x: -(mu**3) * math.cos(mu * x))
    ch = col(lambda x: math.cosh(mu * x), lambda x: mu * math.sinh(mu * x),
             lambda x: mu**2 * math.cosh(mu * x), lambda x: mu**3 * math.sinh(mu * x))
    cs = col(lambda x: math.cos(mu * x), lambda x: -mu * math.sin(mu * x),
             lambda x: -(mu**2) * math.cos(mu * x), lambda x: mu**3 * math.sin(mu * x))
    return np.array([sh, sn, ch, cs]).T


def test_wavenumbers():
    p = LateralBasisParams(a=2.5, lam=7.0)
    assert p.mu**4 * p.a == pytest.approx(7.0, rel=1e-14)
    q = TorsionBasisParams(d=0.3, lam=7.0)
    assert q.beta**2 * q.d == pytest.approx(7.0, rel=1e-14)


def test_dv_clamped_root():
    assert abs(det_v_scaled(lat(4.7300408))) < 1e-6


def test_dv_at_one():
    expected = math.sinh(1) ** 2 - math.sin(1) ** 2 - (math.cosh(1) - math.cos(1)) ** 2
    assert det_v(lat(1.0)) == pytest.approx(expected, rel=1e-13)
    assert det_v_product(lat(1.0)) == pytest.approx(expected, rel=1e-13)


def test_dv_equals_brute_force_determinant():
    rng = np.random.default_rng(3)
    ratios = []
    for _ in range(100):
        p = lat(rng.uniform(0.2, 8), rng.uniform(0.5, 2), rng.uniform(0, 1), rng.uniform(0, 1))
        # the two slope rows each carry a factor mu
        ratios.append(np.linalg.det(bc_trig(p)) / (p.mu**2 * det_v(p)))
    np.testing.assert_allclose(ratios, 1.0, rtol=1e-8)


def test_clamped_clamped_first_root():
    mu = brentq(lambda m: math.cosh(m) * math.cos(m) - 1, 4, 5, xtol=1e-15)
    assert mu == pytest.approx(4.730040744862704, rel=1e-14)
    assert abs(det_v_scaled(lat(mu))) < 1e-13


def test_det_eta_values():
    q = TorsionBasisParams(1.0, 0.0, math.pi**2)
    assert abs(det_eta(q)) < 1e-15
    assert det_eta(q.at((math.pi / 2) ** 2)) == pytest.approx(1.0, rel=1e-15)


def test_det_eta_compliant_root():
    beta = brentq(lambda b: math.tan(b) + b, math.pi / 2 + 1e-9, math.pi - 1e-9)
    assert beta == pytest.approx(2.0287578381104345, rel=1e-12)
    roots = [x for x, o in exceptional_set(20.0, tor=TorsionBasisParams(1.0, 1.0)) if o == "eta"]
    assert math.sqrt(roots[0]) == pytest.approx(beta, rel=1e-12)


def test_exceptional_torsion_roots():
    pts = exceptional_set(50.0, tor=TorsionBasisParams(1.0, 0.0))
    assert pts[0] == (0.0, "zero")
    np.testing.assert_allclose([x for x, _ in pts[1:]], [math.pi**2, (2 * math.pi) ** 2], rtol=1e-13)


def test_exceptional_first_lateral_root():
    pts = [x for x, o in exceptional_set(600.0, lat=LateralBasisParams()) if o == "v"]
    assert pts[0] == pytest.approx(4.730040744862704**4, rel=1e-12)
    assert pts[0] == pytest.approx(500.5639, rel=1e-6)


def test_exceptional_tiny_range():
    assert exceptional_set(1e-9, LateralBasisParams(), TorsionBasisParams()) == [(0.0, "zero")]


def test_phi_boundary_values():
    p = lat(2.3, 1.3, 0.4, 0.7)
    f1 = eval_phi(1, 0.0, p)
    assert f1.value == pytest.approx(1.0, abs=1e-12) and abs(f1.d1) < 1e-12
    f3 = eval_phi(3, np.array([0.0, 1.0]), p)
    assert abs(f3.value[0]) < 1e-12 and abs(f3.d1[0]) < 1e-12
    assert f3.value[1] - p.a * p.theta_g * f3.d3[1] == pytest.approx(1.0, abs=1e-12)


def test_phi3_closed_form_unit():
    p = lat(1.0)
    xs = np.array([0.25, 0.5, 0.75])
    np.testing.assert_allclose(eval_phi(3, xs, p).value, phi_closed_form(3, xs, p), atol=1e-10)


def test_psi_examples():
    q = TorsionBasisParams(1.0, 0.0, (math.pi / 2) ** 2)
    xs = np.linspace(0, 1, 11)
    np.testing.assert_allclose(eval_psi(2, xs, q).value, np.sin(math.pi * xs / 2), atol=1e-14)
    assert eval_psi(2, 0.0, q).value == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 2), st.floats(0, 2), st.floats(0.05, 100))
def test_psi2_end_condition(d, theta, lam):
    q = TorsionBasisParams(d, theta, lam)
    if abs(det_eta(q)) < 1e-6:
        return
    e = eval_psi(2, 1.0, q)
    assert e.value + d * theta * e.d1 == pytest.approx(1.0, abs=1e-10)


def test_exceptional_rejected():
    with pytest.raises(ExceptionalLambdaError):
        phi_coefficients(lat(4.730040744862704))
    with pytest.raises(ExceptionalLambdaError):
        psi_coefficients(TorsionBasisParams(1.0, 0.0, math.pi**2))
    with pytest.raises(ExceptionalLambdaError):
        phi_coefficients(LateralBasisParams(lam=0.0))


def test_phi_satisfies_ode():
    for mu in (1.0, 5.0, 12.0, 20.0):
        p = lat(mu, 1.0, 0.3, 0.2)
        C = phi_coefficients(p)
        xs = np.linspace(0.02, 0.98, 50)
        h = 0.05 / mu
        w = np.array([-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0]) / 6.0
        for k in range(4):
            f = lambda x: lateral_functions(mu, x, 0) @ C[:, k]
            d4 = sum(c * f(xs + (n - 3) * h) for n, c in enumerate(w)) / h**4
            exact = lateral_functions(mu, xs, 4) @ C[:, k]
            vals = f(xs)
            assert np.max(np.abs(p.a * exact - p.lam * vals)) <= 1e-9 * p.lam * np.max(np.abs(vals))
            assert np.max(np.abs(p.a * d4 - p.lam * vals)) <= 1e-6 * p.lam * np.max(np.abs(vals))


def test_eta_roots_interlace():
    for theta in (0.0, 0.3, 1.0, 5.0):
        roots = [math.sqrt(x) for x, o in exceptional_set(4000, tor=TorsionBasisParams(1.0, theta)) if o == "eta"]
        assert len(roots) > 10
        assert np.all(np.diff(roots) < math.pi + 1e-9)


def test_scaled_sign_matches():
    for mu in np.linspace(0.3, 30, 300):
        p = lat(mu, 1.0, 0.2, 0.6)
        direct = det_v_product(p)
        if abs(direct) > 1e-6 * math.exp(mu):
            assert math.copysign(1, det_v_scaled(p)) == math.copysign(1, direct)


def test_bc_matrix_shapes():
    assert lateral_bc_matrix(lat(2.0)).shape == (4, 4)
    assert torsion_bc_matrix(TorsionBasisParams(lam=2.0)).shape == (2, 2)

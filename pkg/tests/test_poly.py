import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasivem import mesh as qm
from quasivem import poly
from quasivem import quadrature as qq

from helpers import green_scaled_monomial, reg_pentagon, tensor_rule_square


def test_exponent_ordering():
    assert poly.exponents(2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1),
                                 (0, 2)]
    assert poly.basis_dim(3) == 10
    for k, (ax, ay) in enumerate(poly.exponents(4)):
        assert poly.exp_index(ax, ay) == k


def test_mass_matrix_k0_unit_square():
    mesh = qm.build_cartesian_grid(1, 1)
    basis = poly.MonomialBasis(mesh.centroids[0], mesh.diameters[0], 0)
    rule = qq.element_rule(mesh, 0, 2)
    M = poly.mass_matrix(basis, rule)
    assert M.shape == (1, 1)
    assert M[0, 0] == pytest.approx(1.0, rel=1e-14)


def test_mass_matrix_k1_square_odd_terms_vanish():
    mesh = qm.build_cartesian_grid(1, 1)
    basis = poly.MonomialBasis(mesh.centroids[0], mesh.diameters[0], 1)
    M = poly.mass_matrix(basis, qq.element_rule(mesh, 0, 4))
    assert abs(M[0, 1]) <= 1e-15
    assert abs(M[0, 2]) <= 1e-15


def test_mass_matrix_k2_pentagon_against_contour_oracle():
    pent = reg_pentagon()
    mesh = qm.PolyMesh(pent, [[0, 1, 2, 3, 4]])
    basis = poly.MonomialBasis(mesh.centroids[0], mesh.diameters[0], 2)
    M = poly.mass_matrix(basis, qq.element_rule(mesh, 0, 6))
    exps = poly.exponents(2)
    for i, (ax, ay) in enumerate(exps):
        for j, (bx, by) in enumerate(exps):
            exact = green_scaled_monomial(pent, mesh.centroids[0],
                                          mesh.diameters[0],
                                          ax + bx, ay + by)
            assert abs(M[i, j] - exact) <= 1e-8, (i, j)


def test_l2_project_reproduces_linear():
    pent = reg_pentagon()
    mesh = qm.PolyMesh(pent, [[0, 1, 2, 3, 4]])
    basis = poly.MonomialBasis(mesh.centroids[0], mesh.diameters[0], 2)
    rule = qq.element_rule(mesh, 0, 6)
    coef = poly.l2_project(lambda p: p[:, 0], basis, rule)
    vals = basis.eval(rule.points) @ coef
    assert np.max(np.abs(vals - rule.points[:, 0])) <= 1e-11


def test_l2_project_k0_is_mean():
    mesh = qm.build_cartesian_grid(1, 1)
    basis = poly.MonomialBasis(mesh.centroids[0], mesh.diameters[0], 0)
    rule = qq.element_rule(mesh, 0, 6)
    f = lambda p: np.exp(p[:, 0]) * np.cos(p[:, 1])
    coef = poly.l2_project(f, basis, rule)
    mean = rule.weights @ f(rule.points)
    assert coef[0] == pytest.approx(mean, rel=1e-13)


def test_l2_project_sine_against_dense_oracle():
    """Projection of sin*sin onto quadratics, vs a 20-point tensor rule."""
    mesh = qm.build_cartesian_grid(1, 1)
    centre, h = mesh.centroids[0], mesh.diameters[0]
    basis = poly.MonomialBasis(centre, h, 2)
    rule = qq.element_rule(mesh, 0, 10)
    f = lambda p: np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])
    coef = poly.l2_project(f, basis, rule)

    pts, wts = tensor_rule_square(20)
    V = basis.eval(pts)
    G = V.T @ (wts[:, None] * V)
    oracle = np.linalg.solve(G, V.T @ (wts * f(pts)))
    assert np.max(np.abs(coef - oracle)) <= 1e-6


def test_poly_divergence_identity_field():
    h = 0.7
    # v = (xhat, yhat)
    vx = np.array([0.0, 1.0, 0.0])
    vy = np.array([0.0, 0.0, 1.0])
    div = poly.poly_divergence(vx, vy, 1, h)
    assert div[0] == pytest.approx(2.0 / h)


def test_poly_divergence_constant_field():
    div = poly.poly_divergence(np.array([3.0]), np.array([-2.0]), 0, 0.5)
    assert np.all(div == 0.0)


def test_poly_divergence_cubic_against_finite_differences():
    h = 1.3
    centre = np.array([0.4, -0.2])
    basis3 = poly.MonomialBasis(centre, h, 3)
    basis2 = poly.MonomialBasis(centre, h, 2)
    vx = np.zeros(10)
    vy = np.zeros(10)
    vx[poly.exp_index(2, 1)] = 1.0   # xhat^2 yhat
    vy[poly.exp_index(1, 2)] = 1.0   # xhat yhat^2
    div = poly.poly_divergence(vx, vy, 3, h)

    expect = np.zeros(6)
    expect[poly.exp_index(1, 1)] = 4.0 / h
    assert np.max(np.abs(div - expect)) <= 1e-14

    rng = np.random.default_rng(7)
    pts = rng.uniform(-1, 1, size=(5, 2)) + centre
    eps = 1e-6
    ex = np.array([eps, 0.0])
    ey = np.array([0.0, eps])
    fd = (basis3.eval(pts + ex) @ vx - basis3.eval(pts - ex) @ vx) / (2 * eps) \
        + (basis3.eval(pts + ey) @ vy - basis3.eval(pts - ey) @ vy) / (2 * eps)
    assert np.max(np.abs(basis2.eval(pts) @ div - fd)) <= 1e-6


def test_poly_multiply_exact():
    rng = np.random.default_rng(3)
    c1 = rng.standard_normal(poly.basis_dim(2))
    c2 = rng.standard_normal(poly.basis_dim(1))
    prod = poly.poly_multiply(c1, 2, c2, 1)
    basis2 = poly.MonomialBasis(np.zeros(2), 1.0, 2)
    basis1 = poly.MonomialBasis(np.zeros(2), 1.0, 1)
    basis3 = poly.MonomialBasis(np.zeros(2), 1.0, 3)
    pts = rng.uniform(-1, 1, size=(20, 2))
    lhs = (basis2.eval(pts) @ c1) * (basis1.eval(pts) @ c2)
    rhs = basis3.eval(pts) @ prod
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_projection_idempotent():
    pent = reg_pentagon()
    mesh = qm.PolyMesh(pent, [[0, 1, 2, 3, 4]])
    basis = poly.MonomialBasis(mesh.centroids[0], mesh.diameters[0], 3)
    rule = qq.element_rule(mesh, 0, 8)
    f = lambda p: np.tanh(p[:, 0] + 0.3 * p[:, 1])
    c1 = poly.l2_project(f, basis, rule)
    c2 = poly.l2_project(basis.eval(rule.points) @ c1, basis, rule)
    assert np.max(np.abs(c1 - c2)) <= 1e-11


def test_projection_orthogonality():
    pent = reg_pentagon()
    mesh = qm.PolyMesh(pent, [[0, 1, 2, 3, 4]])
    basis = poly.MonomialBasis(mesh.centroids[0], mesh.diameters[0], 2)
    rule = qq.element_rule(mesh, 0, 10)
    f = lambda p: np.sin(p[:, 0]) * np.exp(0.2 * p[:, 1])
    coef = poly.l2_project(f, basis, rule)
    resid = f(rule.points) - basis.eval(rule.points) @ coef
    V = basis.eval(rule.points)
    moments = V.T @ (rule.weights * resid)
    assert np.max(np.abs(moments)) <= 1e-10


@pytest.mark.parametrize("k", [1, 2, 3])
def test_projection_error_decay_rate(k):
    """Elementwise projection error over finer grids decays at k+1."""
    f = lambda p: np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])
    hs, errs = [], []
    for n in (2, 4, 8, 16):
        mesh = qm.build_cartesian_grid(n, n)
        total = 0.0
        for e in range(mesh.num_elements):
            basis = poly.MonomialBasis(mesh.centroids[e],
                                       mesh.diameters[e], k)
            rule = qq.element_rule(mesh, e, 2 * k + 6)
            coef = poly.l2_project(f, basis, rule)
            resid = f(rule.points) - basis.eval(rule.points) @ coef
            total += rule.weights @ resid ** 2
        errs.append(np.sqrt(total))
        hs.append(mesh.h)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - (k + 1)) <= 0.2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4))
def test_derivative_matrix_matches_calculus(ax, ay):
    from hypothesis import assume
    assume(ax + ay <= 4)
    k = 4
    h = 0.9
    basis = poly.MonomialBasis(np.array([0.1, 0.2]), h, k)
    c = np.zeros(poly.basis_dim(k))
    c[poly.exp_index(ax, ay)] = 1.0
    dx = poly.poly_derivative(c, k, h, 0)
    pts = np.random.default_rng(0).uniform(-0.5, 0.5, size=(7, 2))
    lower = poly.MonomialBasis(np.array([0.1, 0.2]), h, k - 1)
    vals = lower.eval(pts) @ dx
    eps = 1e-7
    fd = (basis.eval(pts + [eps, 0]) @ c - basis.eval(pts - [eps, 0]) @ c) \
        / (2 * eps)
    assert np.max(np.abs(vals - fd)) <= 1e-5

"""Scaled monomial bases and polynomial calculus on elements.

Polynomials on an element are expanded in the scaled, centred monomials
m_a(x) = ((x - x_E) / h_E)^a ordered graded-lexicographically:
1, X, Y, X^2, XY, Y^2, X^3, ...  Coefficient vectors always refer to this
ordering.  Products and derivatives are exact operations on the exponents,
so no quadrature error enters symbolic manipulation.
"""

import numpy as np


def exponents(k):
    """Graded lexicographic exponent pairs (ax, ay) with ax + ay <= k."""
    return [(d - j, j) for d in range(k + 1) for j in range(d + 1)]


def basis_dim(k):
    """Dimension of the polynomial space of total degree k in two variables."""
    if k < 0:
        return 0
    return (k + 1) * (k + 2) // 2


def exp_index(ax, ay):
    """Position of the exponent pair in the graded lexicographic ordering."""
    d = ax + ay
    return d * (d + 1) // 2 + ay


class MonomialBasis:
    """Scaled monomials m_a(x) = ((x - centre) / h)^a up to a total degree."""

    def __init__(self, centre, h, degree):
        self.centre = np.asarray(centre, dtype=float)
        self.h = float(h)
        self.degree = int(degree)
        self.exps = np.array(exponents(degree), dtype=int)

    @property
    def dim(self):
        return len(self.exps)

    def eval(self, pts):
        """Vandermonde matrix of shape (npts, dim)."""
        s = (np.asarray(pts, float) - self.centre) / self.h
        return s[:, 0:1] ** self.exps[:, 0] * s[:, 1:2] ** self.exps[:, 1]

    def eval_grad(self, pts):
        """Gradients of all basis functions: two (npts, dim) arrays."""
        s = (np.asarray(pts, float) - self.centre) / self.h
        ax = self.exps[:, 0]
        ay = self.exps[:, 1]
        gx = np.where(ax > 0,
                      ax / self.h * s[:, 0:1] ** np.maximum(ax - 1, 0)
                      * s[:, 1:2] ** ay, 0.0)
        gy = np.where(ay > 0,
                      ay / self.h * s[:, 0:1] ** ax
                      * s[:, 1:2] ** np.maximum(ay - 1, 0), 0.0)
        return gx, gy


def poly_eval(basis, coeffs, pts):
    """Evaluate the polynomial with the given coefficient vector."""
    coeffs = np.asarray(coeffs, float)
    V = basis.eval(pts)
    return V[:, : len(coeffs)] @ coeffs


def poly_multiply(c1, k1, c2, k2):
    """Coefficients of the exact product of two scaled-basis polynomials.

    Both factors must share the same basis centre and scale; the result is
    returned in the degree (k1 + k2) basis.
    """
    e1 = exponents(k1)
    e2 = exponents(k2)
    out = np.zeros(basis_dim(k1 + k2))
    for i, (ax, ay) in enumerate(e1):
        if c1[i] == 0.0:
            continue
        for j, (bx, by) in enumerate(e2):
            out[exp_index(ax + bx, ay + by)] += c1[i] * c2[j]
    return out


def derivative_matrix(k, h, axis):
    """Matrix D with d/dx m_a = sum_b D[b, a] m_b (degree k -> k - 1)."""
    exps = exponents(k)
    D = np.zeros((basis_dim(k - 1), basis_dim(k)))
    for a, (ax, ay) in enumerate(exps):
        if axis == 0 and ax > 0:
            D[exp_index(ax - 1, ay), a] = ax / h
        elif axis == 1 and ay > 0:
            D[exp_index(ax, ay - 1), a] = ay / h
    return D


def poly_derivative(coeffs, k, h, axis):
    """Exact partial derivative, returned in the degree k - 1 basis."""
    return derivative_matrix(k, h, axis) @ np.asarray(coeffs, float)


def poly_divergence(cx, cy, k, h):
    """Exact divergence of a vector polynomial of degree k (result: k - 1)."""
    if k == 0:
        return np.zeros(1)
    return (poly_derivative(cx, k, h, 0) + poly_derivative(cy, k, h, 1))


def mass_matrix(basis, rule):
    """Gram matrix of the basis under the element quadrature rule.

    The rule must be exact to degree 2 * basis.degree.  A condition-number
    guard catches degenerate element geometry.
    """
    V = basis.eval(rule.points)
    M = V.T @ (rule.weights[:, None] * V)
    M = 0.5 * (M + M.T)
    if np.linalg.cond(M) > 1e12:
        raise ValueError("monomial mass matrix is ill-conditioned; "
                         "degenerate element geometry")
    return M


def l2_project(f, basis, rule, mass=None):
    """Coefficients of the L2-orthogonal projection of f onto the basis span.

    f may be a callable evaluated at the rule points or an array of values
    at those points.
    """
    vals = f(rule.points) if callable(f) else np.asarray(f, float)
    V = basis.eval(rule.points)
    if mass is None:
        mass = mass_matrix(basis, rule)
    return np.linalg.solve(mass, V.T @ (rule.weights * vals))

"""Shared oracle code for the test suite.

Everything here is deliberately written from scratch against textbook
formulas (Green's theorem for monomial integrals, tensor Gauss rules for
non-polynomial integrands) so that it exercises none of the package's own
quadrature or projection machinery.
"""

from math import comb

import numpy as np

from quasivem.solver import NonlinearModel


def green_monomial(verts, p, q):
    """Integral of x^p y^q over a polygon via the divergence theorem.

    Uses the contour form with x^(p+1)/(p+1) * y^q integrated along each
    edge under a linear parameterization, expanded with binomials.  Exact
    up to roundoff for any simple polygon.
    """
    verts = np.asarray(verts, dtype=float)
    total = 0.0
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        dy = y1 - y0
        if dy == 0.0:
            continue
        acc = 0.0
        for a in range(p + 2):
            ca = comb(p + 1, a) * x0 ** (p + 1 - a) * (x1 - x0) ** a
            for b in range(q + 1):
                cb = comb(q, b) * y0 ** (q - b) * dy ** b
                acc += ca * cb / (a + b + 1)
        total += dy * acc / (p + 1)
    return total


def green_scaled_monomial(verts, centre, h, ax, ay):
    """Integral of ((x-cx)/h)^ax ((y-cy)/h)^ay over a polygon, exactly."""
    shifted = np.asarray(verts, dtype=float) - np.asarray(centre, dtype=float)
    return green_monomial(shifted, ax, ay) / h ** (ax + ay)


def reg_pentagon(centre=(1.0, 0.5), radius=1.0):
    """Regular pentagon with one vertex pointing up, counter-clockwise."""
    ang = np.pi / 2 + 2.0 * np.pi * np.arange(5) / 5.0
    return np.column_stack([np.cos(ang), np.sin(ang)]) * radius \
        + np.asarray(centre, dtype=float)


def tensor_rule_square(n=20, bounds=(0.0, 1.0, 0.0, 1.0)):
    """Tensor Gauss-Legendre rule on a rectangle, n points per axis."""
    x, w = np.polynomial.legendre.leggauss(n)
    x0, x1, y0, y1 = bounds
    tx = 0.5 * (x + 1.0) * (x1 - x0) + x0
    ty = 0.5 * (x + 1.0) * (y1 - y0) + y0
    wx = 0.5 * w * (x1 - x0)
    wy = 0.5 * w * (y1 - y0)
    X, Y = np.meshgrid(tx, ty, indexing="ij")
    W = np.outer(wx, wy)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


def tensor_rule_triangle(tri, n=20):
    """Gauss rule on a triangle by mapping a square with the (1-a) factor.

    Plain Legendre points on [0,1]^2 with the collapsing Jacobian carried
    explicitly in the weights; independent of any Jacobi-weighted rule.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (x + 1.0)
    wt = 0.5 * w
    A, B = np.meshgrid(t, t, indexing="ij")
    W = np.outer(wt, wt) * (1.0 - A)
    a = A.ravel()
    b = (B * (1.0 - A)).ravel()
    p0, p1, p2 = [np.asarray(v, dtype=float) for v in tri]
    pts = p0[None, :] + np.outer(a, p1 - p0) + np.outer(b, p2 - p0)
    u, v = p1 - p0, p2 - p0
    jac = abs(u[0] * v[1] - u[1] * v[0])
    return pts, W.ravel() * jac


def tensor_rule_polygon(verts, n=20):
    """Composite triangle-fan rule about the vertex average."""
    verts = np.asarray(verts, dtype=float)
    centre = verts.mean(axis=0)
    pts, wts = [], []
    for i in range(len(verts)):
        tri = (centre, verts[i], verts[(i + 1) % len(verts)])
        p, w = tensor_rule_triangle(tri, n)
        pts.append(p)
        wts.append(w)
    return np.vstack(pts), np.concatenate(wts)


def unit_coefficient_model(f=None, g=None, exact_u=None, exact_grad=None):
    """The linear model mu = 1, useful for patch tests."""
    zero = lambda p: np.zeros(len(np.atleast_2d(p)))
    return NonlinearModel(
        mu=lambda x, t: np.ones(len(np.atleast_2d(x))),
        dmu_dt=lambda x, t: np.zeros(len(np.atleast_2d(x))),
        m_mu=1.0, M_mu=1.0,
        f=f if f is not None else zero,
        g=g if g is not None else zero,
        exact_u=exact_u, exact_grad=exact_grad,
        name="unit coefficient")

"""Quadrature rules on edges, triangles and polygonal elements.

Edge rules are Gauss-Legendre on the reference interval [0, 1].  Triangle
rules are collapsed (Duffy-type) Gauss products: a Gauss-Jacobi rule with
weight (1 - a) in the first direction absorbs the Jacobian of the square-to-
triangle map exactly, so the rule is exact for polynomials of the requested
total degree and all weights are positive.  Element rules are composites of
triangle rules over the fan sub-triangulation about the barycentre.
"""

import numpy as np
from scipy.special import roots_jacobi


class QuadratureRule:
    """Points and weights for numerical integration.

    points has shape (n,) for rules on [0, 1] and (n, 2) for planar rules.
    The weights sum to the measure of the integration domain.
    """

    def __init__(self, points, weights, degree):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.degree = int(degree)

    def __len__(self):
        return len(self.weights)

    def integrate(self, f):
        """Integrate a callable mapping the point array to values."""
        return float(np.dot(self.weights, f(self.points)))


def gauss_01(order):
    """Gauss-Legendre nodes and weights on [0, 1], exact to degree `order`."""
    n = max((order + 2) // 2, 1)
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


_edge_cache = {}
_tri_cache = {}


def edge_rule(order):
    """Gauss-Legendre rule on the reference edge [0, 1].

    Uses ceil((order + 1) / 2) points, exact for polynomials of degree
    <= order.
    """
    if order < 0:
        raise ValueError("quadrature order must be nonnegative")
    if order not in _edge_cache:
        t, w = gauss_01(order)
        _edge_cache[order] = QuadratureRule(t, w, order)
    return _edge_cache[order]


def segment_rule(p0, p1, order):
    """Rule on the straight segment from p0 to p1 (weights sum to its length)."""
    ref = edge_rule(order)
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    pts = p0[None, :] + ref.points[:, None] * (p1 - p0)[None, :]
    return QuadratureRule(pts, ref.weights * np.linalg.norm(p1 - p0), order)


def reference_triangle_rule(order):
    """Collapsed product rule on the triangle (0,0), (1,0), (0,1).

    The map (a, b) -> (a, b (1 - a)) sends the unit square onto the
    triangle with Jacobian (1 - a); Gauss-Jacobi (alpha=1) handles that
    factor exactly, so polynomials of total degree <= order are integrated
    exactly.
    """
    if order not in _tri_cache:
        n = max((order + 2) // 2, 1)
        xa, wa = roots_jacobi(n, 1.0, 0.0)
        a = 0.5 * (xa + 1.0)
        wa = 0.25 * wa
        b, wb = gauss_01(order)
        A, B = np.meshgrid(a, b, indexing="ij")
        pts = np.column_stack([A.ravel(), (B * (1.0 - A)).ravel()])
        w = np.outer(wa, wb).ravel()
        _tri_cache[order] = QuadratureRule(pts, w, order)
    return _tri_cache[order]


def triangle_rule(tri, order):
    """Rule on the triangle whose rows are its three vertices."""
    ref = reference_triangle_rule(order)
    tri = np.asarray(tri, float)
    e1 = tri[1] - tri[0]
    e2 = tri[2] - tri[0]
    det = e1[0] * e2[1] - e1[1] * e2[0]
    if det <= 0.0:
        raise ValueError("triangle is degenerate or clockwise")
    pts = tri[0] + ref.points[:, 0:1] * e1 + ref.points[:, 1:2] * e2
    return QuadratureRule(pts, ref.weights * det, order)


def polygon_rule(vertices, order, centre=None):
    """Composite rule on a polygon via the fan about `centre`.

    The polygon must be star-shaped with respect to `centre` (the vertex
    centroid of the fan point defaults to the area centroid).  Weights sum
    to the polygon area.
    """
    verts = np.asarray(vertices, float)
    if centre is None:
        centre = _polygon_centroid(verts)
    pts = []
    wts = []
    n = len(verts)
    for i in range(n):
        tri = np.array([centre, verts[i], verts[(i + 1) % n]])
        e1 = tri[1] - tri[0]
        e2 = tri[2] - tri[0]
        if e1[0] * e2[1] - e1[1] * e2[0] <= 0.0:
            raise ValueError("polygon is not star-shaped about the fan centre")
        r = triangle_rule(tri, order)
        pts.append(r.points)
        wts.append(r.weights)
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), order)


def element_rule(mesh, element_id, order):
    """Composite rule on a mesh element, built on its sub-triangulation."""
    tris = mesh.sub_triangulate(element_id)
    pts = []
    wts = []
    for tri in tris:
        r = triangle_rule(tri, order)
        pts.append(r.points)
        wts.append(r.weights)
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), order)


def _polygon_centroid(verts):
    x = verts[:, 0]
    y = verts[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def default_volume_order(ell):
    """Volume quadrature degree used for assembly and estimator integrals."""
    return max(2 * ell + 2, 4 * ell - 2)


def default_edge_order(ell):
    """Edge quadrature degree; covers flux-jump integrands of degree 4l-2."""
    return max(2 * ell + 2, 4 * ell - 2)

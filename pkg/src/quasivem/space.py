"""Conforming VEM space machinery on polygonal meshes.

For order l the local degrees of freedom of an element are, in this order:
vertex values (one per cycle vertex), l-1 scaled moments per edge against
the shifted monomials (2t-1)^j on the edge parameterised from its
lower-numbered to higher-numbered global vertex, and dim P_{l-2} scaled
interior moments against the element's monomial basis.  Edge moments carry
the 1/|e| normalisation, so they equal plain parameter-space integrals;
interior moments carry 1/|E|.

All computable operators (value projection onto P_l via constrained least
squares, edge trace reconstruction, gradient projection onto [P_{l-1}]^2,
full moments through the enhancement identity, and the dofi-dofi
stabilisation factors) are assembled per element into ElementOperators.
"""

import numpy as np

from . import poly
from .quadrature import (default_edge_order, default_volume_order, edge_rule,
                         reference_triangle_rule)

_static_cache = {}


def _static(ell):
    """Order-dependent tables shared by every element."""
    if ell in _static_cache:
        return _static_cache[ell]
    if ell < 1:
        raise ValueError("order must be >= 1")
    st = {}
    st["ell"] = ell
    st["nP"] = poly.basis_dim(ell)
    st["n1"] = poly.basis_dim(ell - 1)
    st["n2"] = poly.basis_dim(ell - 2)
    er = edge_rule(default_edge_order(ell))
    t = er.points
    st["et"] = t
    st["ew"] = er.weights
    u = 2.0 * t - 1.0
    st["EJ"] = u[:, None] ** np.arange(max(ell - 1, 0))
    st["ET"] = u[:, None] ** np.arange(ell + 1)
    # trace conditions: value at t=0, value at t=1, then the edge moments
    A = np.zeros((ell + 1, ell + 1))
    A[0] = (-1.0) ** np.arange(ell + 1)
    A[1] = 1.0
    for j in range(ell - 1):
        for i in range(ell + 1):
            if (i + j) % 2 == 0:
                A[2 + j, i] = 1.0 / (i + j + 1)
    st["Ainv"] = np.linalg.inv(A)
    st["tri"] = reference_triangle_rule(default_volume_order(ell))
    # exponent-wise derivative tables for the degree l-1 basis, unscaled
    st["DX0"] = poly.derivative_matrix(ell - 1, 1.0, 0) if ell >= 2 else None
    st["DY0"] = poly.derivative_matrix(ell - 1, 1.0, 1) if ell >= 2 else None
    _static_cache[ell] = st
    return st


class DofMap:
    """Global numbering: vertex dofs, then edge moments, then interior."""

    def __init__(self, mesh, ell):
        self.mesh = mesh
        self.ell = int(ell)
        nv = mesh.num_vertices
        ned = mesh.num_edges
        nel = mesh.num_elements
        epe = ell - 1
        self.nint = poly.basis_dim(ell - 2)
        self.edge_offset = nv
        self.int_offset = nv + ned * epe
        self.ndof = self.int_offset + nel * self.nint
        self.cell = []
        for e in range(nel):
            cyc = mesh.elements[e]
            ids = [int(v) for v in cyc]
            for k in mesh.element_edges(e):
                base = nv + k * epe
                ids.extend(range(base, base + epe))
            base = self.int_offset + e * self.nint
            ids.extend(range(base, base + self.nint))
            self.cell.append(np.array(ids, dtype=int))
        mask = np.zeros(self.ndof, dtype=bool)
        mask[:nv] = mesh.boundary_vertex
        for k in np.nonzero(mesh.boundary_edge)[0]:
            mask[nv + k * epe:nv + (k + 1) * epe] = True
        self.boundary_mask = mask

    def cell_dofs(self, e):
        return self.cell[e]


class ElementOperators:
    """Projection and stabilisation matrices of one element.

    Attributes of note: D (dofs of each monomial), P0 (dofs -> value
    projection coefficients), H (dofs -> moments against the full degree-l
    basis), P1x/P1y (dofs -> gradient projection coefficients), Dstab
    (dofs of the non-polynomial part), StabBase (Dstab' Dstab), plus the
    element quadrature (qpts, qw), the monomial Vandermonde V at the
    quadrature points and the projected-gradient evaluation matrices
    Gx, Gy.
    """

    __slots__ = ("e", "n", "N", "area", "hE", "basis", "cyc", "qpts", "qw",
                 "V", "M", "D", "P0", "H", "P1x", "P1y", "Dstab", "StabBase",
                 "Gx", "Gy", "edge_len", "edge_normal")

    def stab_scale(self, model, g, mode="mu_E"):
        """Stabilisation coefficient at the frozen constant gradient g."""
        if mode == "linear":
            return model.M_mu * model.m_mu
        if mode != "mu_E":
            raise ValueError("unknown stabilisation mode %r" % mode)
        t = np.full(len(self.qw), float(np.hypot(g[0], g[1])))
        mu_bar = float(self.qw @ model.mu(self.qpts, t)) / self.area
        if mu_bar <= 0.0:
            raise ValueError(
                "element %d: mean of mu is %g, coefficient bounds violated"
                % (self.e, mu_bar))
        return mu_bar

    def stabilization(self, model, g, mode="mu_E"):
        return self.stab_scale(model, g, mode) * self.StabBase

    def mean_gradient(self, u_loc):
        """Average of the projected gradient over the element."""
        return np.array([
            self.qw @ (self.Gx @ u_loc), self.qw @ (self.Gy @ u_loc)
        ]) / self.area


def build_element_operators(mesh, e, ell, st=None):
    st = st or _static(ell)
    nP, n1, n2 = st["nP"], st["n1"], st["n2"]
    cyc = mesh.elements[e]
    pts = mesh.vertices[cyc]
    n = len(cyc)
    N = n + n * (ell - 1) + n2
    area = mesh.areas[e]
    hE = mesh.diameters[e]

    op = ElementOperators()
    op.e = e
    op.n = n
    op.N = N
    op.area = area
    op.hE = hE
    op.cyc = np.asarray(cyc, dtype=int)
    op.basis = poly.MonomialBasis(mesh.centroids[e], hE, ell)

    # composite quadrature over the barycentre fan
    tris = mesh.sub_triangulate(e)
    t1 = tris[:, 1] - tris[:, 0]
    t2 = tris[:, 2] - tris[:, 0]
    det = t1[:, 0] * t2[:, 1] - t1[:, 1] * t2[:, 0]
    ref = st["tri"]
    qpts = (tris[:, 0][:, None, :]
            + ref.points[None, :, 0:1] * t1[:, None, :]
            + ref.points[None, :, 1:2] * t2[:, None, :]).reshape(-1, 2)
    qw = (det[:, None] * ref.weights[None, :]).ravel()
    op.qpts = qpts
    op.qw = qw

    V = op.basis.eval(qpts)
    M = V.T @ (qw[:, None] * V)
    M = 0.5 * (M + M.T)
    op.V = V
    op.M = M

    # edge geometry in cycle order, plus the canonical parameterisation
    nxt = np.roll(pts, -1, axis=0)
    evec = nxt - pts
    e_len = np.linalg.norm(evec, axis=1)
    op.edge_len = e_len
    op.edge_normal = np.column_stack([evec[:, 1], -evec[:, 0]]) / e_len[:, None]
    gid_a = op.cyc
    gid_b = np.roll(op.cyc, -1)
    forward = gid_a < gid_b  # cycle direction agrees with canonical
    start = np.where(forward[:, None], pts, nxt)
    end = np.where(forward[:, None], nxt, pts)
    et = st["et"]
    epts = start[:, None, :] + et[None, :, None] * (end - start)[:, None, :]
    EV = op.basis.eval(epts.reshape(-1, 2)).reshape(n, len(et), nP)

    # dof matrix D: lambda_i(m_alpha)
    D = np.zeros((N, nP))
    D[:n] = op.basis.eval(pts)
    if ell >= 2:
        mom = np.einsum("q,qj,nqa->nja", st["ew"], st["EJ"], EV)
        D[n:n + n * (ell - 1)] = mom.reshape(n * (ell - 1), nP)
        D[N - n2:] = M[:n2] / area
    op.D = D

    # edge traces: dofs -> coefficients in the (2t-1)^i basis per edge
    Ainv = st["Ainv"]
    traces = np.zeros((n, ell + 1, N))
    for i in range(n):
        i_next = (i + 1) % n
        loc_start, loc_end = (i, i_next) if forward[i] else (i_next, i)
        traces[i, :, loc_start] = Ainv[:, 0]
        traces[i, :, loc_end] = Ainv[:, 1]
        for j in range(ell - 1):
            traces[i, :, n + i * (ell - 1) + j] = Ainv[:, 2 + j]

    # constrained least-squares value projection
    if ell == 1:
        P0 = np.linalg.solve(D.T @ D, D.T)
    else:
        K = np.zeros((nP + n2, nP + n2))
        K[:nP, :nP] = 2.0 * D.T @ D
        K[:nP, nP:] = M[:n2].T
        K[nP:, :nP] = M[:n2]
        rhs = np.zeros((nP + n2, N))
        rhs[:nP] = 2.0 * D.T
        rhs[nP + np.arange(n2), N - n2 + np.arange(n2)] = area
        P0 = np.linalg.solve(K, rhs)[:nP]
    op.P0 = P0

    # full moments: low rows are dof data, high rows use the enhancement
    H = M @ P0
    if n2:
        H[:n2] = 0.0
        H[np.arange(n2), N - n2 + np.arange(n2)] = area
    op.H = H

    # gradient projection onto [P_{l-1}]^2
    Bx = np.zeros((n1, N))
    By = np.zeros((n1, N))
    TV = np.einsum("qi,nid->nqd", st["ET"], traces)
    EV1 = EV[:, :, :n1]
    wx = e_len * op.edge_normal[:, 0]
    wy = e_len * op.edge_normal[:, 1]
    Bx += np.einsum("n,q,nqg,nqd->gd", wx, st["ew"], EV1, TV)
    By += np.einsum("n,q,nqg,nqd->gd", wy, st["ew"], EV1, TV)
    if ell >= 2:
        idx = N - n2 + np.arange(n2)
        Bx[:, idx] -= area / hE * st["DX0"].T
        By[:, idx] -= area / hE * st["DY0"].T
    Ml1 = M[:n1, :n1]
    op.P1x = np.linalg.solve(Ml1, Bx)
    op.P1y = np.linalg.solve(Ml1, By)

    # dofi-dofi factors on the non-polynomial part
    Dstab = -D @ P0
    Dstab[np.arange(N), np.arange(N)] += 1.0
    op.Dstab = Dstab
    op.StabBase = Dstab.T @ Dstab

    op.Gx = V[:, :n1] @ op.P1x
    op.Gy = V[:, :n1] @ op.P1y
    return op


class Space:
    """Dof map plus the element operators for a whole mesh."""

    def __init__(self, mesh, ell):
        self.mesh = mesh
        self.ell = int(ell)
        self.dofmap = DofMap(mesh, ell)
        st = _static(ell)
        self.ops = [build_element_operators(mesh, e, ell, st)
                    for e in range(mesh.num_elements)]

    def element(self, e):
        return self.ops[e]


# ----------------------------------------------------------------------
# interpolation


def interpolate(space, w):
    """Dof vector of the interpolant of a pointwise-evaluable function.

    Vertex dofs are point values, edge dofs are parameter-space moments of
    w along each edge, interior dofs are normalised element moments.
    """
    mesh = space.mesh
    ell = space.ell
    dm = space.dofmap
    st = _static(ell)
    vec = np.zeros(dm.ndof)
    vec[:mesh.num_vertices] = w(mesh.vertices)
    if ell >= 2:
        a = mesh.vertices[mesh.edges[:, 0]]
        b = mesh.vertices[mesh.edges[:, 1]]
        t = st["et"]
        epts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
        vals = w(epts.reshape(-1, 2)).reshape(len(a), len(t))
        mom = np.einsum("q,qj,eq->ej", st["ew"], st["EJ"], vals)
        ne = mesh.num_edges
        vec[dm.edge_offset:dm.edge_offset + ne * (ell - 1)] = mom.ravel()
        for e, op in enumerate(space.ops):
            mloc = op.V[:, :dm.nint].T @ (op.qw * w(op.qpts)) / op.area
            base = dm.int_offset + e * dm.nint
            vec[base:base + dm.nint] = mloc
    return vec


def boundary_values(space, g):
    """Dof values of the boundary datum on the constrained dofs.

    Returns a full-length vector that is zero away from the boundary.
    """
    mesh = space.mesh
    ell = space.ell
    dm = space.dofmap
    st = _static(ell)
    vec = np.zeros(dm.ndof)
    bv = np.nonzero(mesh.boundary_vertex)[0]
    vec[bv] = g(mesh.vertices[bv])
    if ell >= 2:
        be = np.nonzero(mesh.boundary_edge)[0]
        if len(be):
            a = mesh.vertices[mesh.edges[be, 0]]
            b = mesh.vertices[mesh.edges[be, 1]]
            t = st["et"]
            epts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
            vals = g(epts.reshape(-1, 2)).reshape(len(be), len(t))
            mom = np.einsum("q,qj,eq->ej", st["ew"], st["EJ"], vals)
            for row, k in enumerate(be):
                base = dm.edge_offset + k * (ell - 1)
                vec[base:base + ell - 1] = mom[row]
    return vec


# ----------------------------------------------------------------------
# convenience wrappers for one-off operator queries


def value_projection(mesh, e, ell):
    return build_element_operators(mesh, e, ell).P0


def gradient_projection(mesh, e, ell):
    op = build_element_operators(mesh, e, ell)
    return op.P1x, op.P1y


def full_moments(mesh, e, ell):
    return build_element_operators(mesh, e, ell).H


def edge_trace(mesh, e, local_edge, ell):
    """Trace matrix of one cycle edge: dofs -> (2t-1)^i coefficients."""
    st = _static(ell)
    op = build_element_operators(mesh, e, ell, st)
    cyc = op.cyc
    n = op.n
    # rebuild the trace rows for the requested edge
    i = int(local_edge)
    i_next = (i + 1) % n
    forward = cyc[i] < cyc[i_next]
    loc_start, loc_end = (i, i_next) if forward else (i_next, i)
    T = np.zeros((ell + 1, op.N))
    T[:, loc_start] = st["Ainv"][:, 0]
    T[:, loc_end] = st["Ainv"][:, 1]
    for j in range(ell - 1):
        T[:, n + i * (ell - 1) + j] = st["Ainv"][:, 2 + j]
    return T

"""Residual a posteriori error indicators for the quasilinear VEM solution.

Per element the four squared contributions are

  eta:   h_E^2 ||f_h + div(mu_h Pi_1 u_h)||^2 plus flux-jump edge terms,
  theta: h_E^2 ||theta_E||^2 + h_E^2 ||f - f_h||^2 plus coefficient-
         oscillation edge jumps, with theta_E the pointwise defect between
         the exact-coefficient flux divergence and its polynomial model,
  stab:  the stabilisation energy of the non-polynomial part of u_h,
  psi:   the degree l-1 projection defect of the flux mu(|Pi_1 u_h|) Pi_1 u_h.

mu_h and f_h are elementwise L2 projections onto P_l, the flux
mu_h * Pi_1 u_h is expanded exactly as a degree 2l-1 polynomial, and its
divergence is exact.  Interior edge jumps are integrated once per mesh
edge; boundary edges carry no jump.  The divergence of the
exact-coefficient flux uses the chain rule through dmu/dt, so models whose
mu has an explicit spatial dependence beyond |grad u| are out of scope.
"""

import numpy as np

from . import poly

_TINY_T = 1e-14

_conv_cache = {}


def _conv_table(ell):
    """Index triples to multiply a degree-l by a degree-(l-1) polynomial."""
    if ell not in _conv_cache:
        ea = poly.exponents(ell)
        eb = poly.exponents(ell - 1)
        ia = []
        ib = []
        io = []
        for i, (ax, ay) in enumerate(ea):
            for j, (bx, by) in enumerate(eb):
                ia.append(i)
                ib.append(j)
                io.append(poly.exp_index(ax + bx, ay + by))
        _conv_cache[ell] = (np.array(ia), np.array(ib), np.array(io))
    return _conv_cache[ell]


def _element_fields(op, model, ul, ell):
    """Interior residual ingredients of one element at its quadrature nodes.

    Returns a dict with the polynomial coefficients (c_mu, c_f, cgx, cgy,
    sig_x, sig_y on the element's scaled monomial basis) and the pointwise
    arrays R (interior residual), theta (coefficient-defect residual),
    osc (f - f_h), and the flux components Fx, Fy with exact mu.
    """
    deg_sig = 2 * ell - 1
    n1 = poly.basis_dim(ell - 1)
    nd = poly.basis_dim(max(ell - 2, 0))
    ia, ib, io = _conv_table(ell)

    cgx = op.P1x @ ul
    cgy = op.P1y @ ul
    gxq = op.Gx @ ul
    gyq = op.Gy @ ul
    tq = np.hypot(gxq, gyq)
    mu_q = model.mu(op.qpts, tq)
    f_q = model.f(op.qpts)
    rhs = op.V.T @ (op.qw[:, None] * np.column_stack([mu_q, f_q]))
    sol = np.linalg.solve(op.M, rhs)
    c_mu = sol[:, 0]
    c_f = sol[:, 1]

    sig_x = np.zeros(poly.basis_dim(deg_sig))
    sig_y = np.zeros_like(sig_x)
    np.add.at(sig_x, io, c_mu[ia] * cgx[ib])
    np.add.at(sig_y, io, c_mu[ia] * cgy[ib])
    div_sig = poly.poly_divergence(sig_x, sig_y, deg_sig, op.hE)

    if deg_sig - 1 > ell:
        ext = poly.MonomialBasis(op.basis.centre, op.hE, deg_sig - 1)
        Vd = ext.eval(op.qpts)
    else:
        Vd = op.V
    div_sig_q = Vd[:, :len(div_sig)] @ div_sig
    fh_q = op.V @ c_f
    R_q = fh_q + div_sig_q

    # chain-rule divergence of the exact-coefficient flux
    if ell >= 2:
        dxx = poly.poly_derivative(cgx, ell - 1, op.hE, 0)
        dxy = poly.poly_derivative(cgx, ell - 1, op.hE, 1)
        dyx = poly.poly_derivative(cgy, ell - 1, op.hE, 0)
        dyy = poly.poly_derivative(cgy, ell - 1, op.hE, 1)
        Vl2 = op.V[:, :nd]
        jxx = Vl2 @ dxx
        jxy = Vl2 @ dxy
        jyx = Vl2 @ dyx
        jyy = Vl2 @ dyy
        quad = gxq * gxq * jxx + gxq * gyq * (jxy + jyx) + gyq * gyq * jyy
        div_g = jxx + jyy
    else:
        quad = np.zeros_like(gxq)
        div_g = np.zeros_like(gxq)
    safe = np.where(tq < _TINY_T, 1.0, tq)
    dmu_term = np.where(tq < _TINY_T, 0.0,
                        model.dmu_dt(op.qpts, tq) * quad / safe)
    div_flux_q = dmu_term + mu_q * div_g
    osc_q = f_q - fh_q
    theta_q = osc_q + div_flux_q - div_sig_q

    return {
        "c_mu": c_mu, "c_f": c_f, "cgx": cgx, "cgy": cgy,
        "sig_x": sig_x, "sig_y": sig_y,
        "R": R_q, "theta": theta_q, "osc": osc_q,
        "Fx": mu_q * gxq, "Fy": mu_q * gyq,
    }


def element_pointwise(space, model, u, e):
    """Diagnostic access to one element's pointwise residual fields."""
    op = space.ops[e]
    ul = u[space.dofmap.cell_dofs(e)]
    return _element_fields(op, model, ul, space.ell)


class ElementIndicators:
    """Squared indicator fields plus the global total.

    eta_sq, theta_sq, stab_sq and psi_sq attribute each interior edge half
    to each neighbour, so their sum equals the squared global total.
    eta_full and theta_full give every element its complete boundary-edge
    sum, the convention used for marking.
    """

    def __init__(self, eta_vol, eta_edge_full, theta_vol, theta_edge_full,
                 stab_sq, psi_sq, edge_total_sq):
        self.eta_vol = eta_vol
        self.eta_edge_full = eta_edge_full
        self.theta_vol = theta_vol
        self.theta_edge_full = theta_edge_full
        self.stab_sq = stab_sq
        self.psi_sq = psi_sq
        self.eta_sq = eta_vol + 0.5 * eta_edge_full
        self.theta_sq = theta_vol + 0.5 * theta_edge_full
        self.eta_full = eta_vol + eta_edge_full
        self.theta_full = theta_vol + theta_edge_full
        total_sq = (eta_vol.sum() + theta_vol.sum() + stab_sq.sum()
                    + psi_sq.sum() + edge_total_sq)
        self.total = float(np.sqrt(max(total_sq, 0.0)))

    def element_totals(self, attribution="full"):
        """Per-element sums used for marking.

        "full" gives each element its complete boundary-edge sum; "half"
        splits interior edges evenly so the values add up to the squared
        global total.
        """
        if attribution == "full":
            return (self.eta_full + self.theta_full + self.stab_sq
                    + self.psi_sq)
        if attribution == "half":
            return self.eta_sq + self.theta_sq + self.stab_sq + self.psi_sq
        raise ValueError("unknown attribution %r" % attribution)


def estimate(space, model, u, stab_mode="mu_E"):
    """All element indicators and the global estimated error for u."""
    mesh = space.mesh
    ell = space.ell
    dm = space.dofmap
    nel = mesh.num_elements
    n1 = poly.basis_dim(ell - 1)
    deg_sig = 2 * ell - 1

    eta_vol = np.zeros(nel)
    theta_vol = np.zeros(nel)
    stab_sq = np.zeros(nel)
    psi_sq = np.zeros(nel)
    sig_x = np.zeros((nel, poly.basis_dim(deg_sig)))
    sig_y = np.zeros_like(sig_x)
    mu_c = np.zeros((nel, poly.basis_dim(ell)))
    g_cx = np.zeros((nel, n1))
    g_cy = np.zeros((nel, n1))

    for e, op in enumerate(space.ops):
        ul = u[dm.cell_dofs(e)]
        fld = _element_fields(op, model, ul, ell)
        sig_x[e] = fld["sig_x"]
        sig_y[e] = fld["sig_y"]
        mu_c[e] = fld["c_mu"]
        g_cx[e] = fld["cgx"]
        g_cy[e] = fld["cgy"]

        eta_vol[e] = op.hE ** 2 * float(op.qw @ (fld["R"] ** 2))
        theta_vol[e] = op.hE ** 2 * float(op.qw @ (fld["theta"] ** 2)) \
            + op.hE ** 2 * float(op.qw @ (fld["osc"] ** 2))

        d = op.Dstab @ ul
        mu_bar = op.stab_scale(model, op.mean_gradient(ul), stab_mode)
        stab_sq[e] = mu_bar * float(d @ d)

        # flux projection defect onto degree l-1, componentwise
        Fx = fld["Fx"]
        Fy = fld["Fy"]
        V1 = op.V[:, :n1]
        cF = np.linalg.solve(op.M[:n1, :n1],
                             V1.T @ (op.qw[:, None]
                                     * np.column_stack([Fx, Fy])))
        psi_sq[e] = float(op.qw @ ((Fx - V1 @ cF[:, 0]) ** 2
                                   + (Fy - V1 @ cF[:, 1]) ** 2))

    # interior edge jumps, each mesh edge integrated once
    from .space import _static
    st = _static(ell)
    t01 = st["et"]
    w01 = st["ew"]
    eta_edge = np.zeros(nel)
    theta_edge = np.zeros(nel)
    edge_total = 0.0
    nmu = poly.basis_dim(ell)
    for k in np.nonzero(~mesh.boundary_edge)[0]:
        a = mesh.vertices[mesh.edges[k, 0]]
        b = mesh.vertices[mesh.edges[k, 1]]
        he = mesh.edge_lengths[k]
        pts_q = a[None, :] + t01[:, None] * (b - a)[None, :]
        e1, e2 = mesh.edge_elements[k]
        if mesh.edge_forward[k][0]:
            normal = np.array([b[1] - a[1], a[0] - b[0]]) / he
        else:
            normal = np.array([a[1] - b[1], b[0] - a[0]]) / he
        J_q = np.zeros(len(t01))
        th_q = np.zeros(len(t01))
        for sgn, e_id in ((1.0, e1), (-1.0, e2)):
            op = space.ops[e_id]
            ext = poly.MonomialBasis(op.basis.centre, op.hE, deg_sig)
            Ve = ext.eval(pts_q)
            sig_n = (Ve @ sig_x[e_id]) * normal[0] \
                + (Ve @ sig_y[e_id]) * normal[1]
            gxe = Ve[:, :n1] @ g_cx[e_id]
            gye = Ve[:, :n1] @ g_cy[e_id]
            mu_ex = model.mu(pts_q, np.hypot(gxe, gye))
            mu_he = Ve[:, :nmu] @ mu_c[e_id]
            osc_n = (mu_ex - mu_he) * (gxe * normal[0] + gye * normal[1])
            J_q += sgn * sig_n
            th_q += sgn * osc_n
        jump_J = he * he * float(w01 @ (J_q ** 2))
        jump_t = he * he * float(w01 @ (th_q ** 2))
        eta_edge[e1] += jump_J
        eta_edge[e2] += jump_J
        theta_edge[e1] += jump_t
        theta_edge[e2] += jump_t
        edge_total += jump_J + jump_t

    return ElementIndicators(eta_vol, eta_edge, theta_vol, theta_edge,
                             stab_sq, psi_sq, edge_total)


def effectivity(total_estimate, h1_error):
    """Ratio of the estimated to the true gradient error."""
    if h1_error <= 0.0:
        return np.inf
    return total_estimate / h1_error


def efficiency_ratio(space, indicators, per_elem_err_sq):
    """Worst patch-normalised flux residual, a computable lower-bound probe.

    Each element's full eta is divided by the sum of squared gradient
    error, stabilisation and theta contributions over the patch of
    elements touching it (shared vertex counts); the maximum over elements
    is returned.
    """
    mesh = space.mesh
    v2e = [[] for _ in range(mesh.num_vertices)]
    for e, cyc in enumerate(mesh.elements):
        for v in cyc:
            v2e[int(v)].append(e)
    worst = 0.0
    for e, cyc in enumerate(mesh.elements):
        patch = set()
        for v in cyc:
            patch.update(v2e[int(v)])
        denom = sum(per_elem_err_sq[p] + indicators.stab_sq[p]
                    + indicators.theta_full[p] for p in patch)
        if denom > 0.0:
            worst = max(worst, indicators.eta_full[e] / denom)
    return worst

"""Nonlinear coefficient models, system assembly, and the fixed-point solver.

The discrete problem is linearised by freezing the coefficient at the
previous iterate (Kacanov iteration): each step solves the symmetric
positive definite system with mu evaluated at the projected gradient of the
last solution.  Starting from the zero dof vector this makes the first
solve the mu(x, 0)-frozen problem.
"""

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from . import poly
from .space import boundary_values


class SolverError(RuntimeError):
    """Raised when a linear or nonlinear solve fails; carries diagnostics."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NonlinearModel:
    """Data of one quasilinear problem -div(mu(x, |grad u|) grad u) = f.

    mu and dmu_dt take an (n, 2) point array and an (n,) gradient-modulus
    array.  m_mu and M_mu are the monotonicity constants of t -> mu(x, t) t,
    which also bound mu itself.  g is the Dirichlet datum; exact_u and
    exact_grad are optional closed forms used for error reporting.
    """

    def __init__(self, mu, dmu_dt, m_mu, M_mu, f, g, exact_u=None,
                 exact_grad=None, name=""):
        self.mu = mu
        self.dmu_dt = dmu_dt
        self.m_mu = float(m_mu)
        self.M_mu = float(M_mu)
        self.f = f
        self.g = g
        self.exact_u = exact_u
        self.exact_grad = exact_grad
        self.name = name

    def validate(self, bbox=(0.0, 1.0, 0.0, 1.0), nsample=200, seed=0):
        """Sampled checks of the coefficient bounds and monotonicity."""
        rng = np.random.default_rng(seed)
        x0, x1, y0, y1 = bbox
        x = np.column_stack([rng.uniform(x0, x1, nsample),
                             rng.uniform(y0, y1, nsample)])
        t = rng.uniform(0.0, 50.0, nsample)
        vals = self.mu(x, t)
        if np.any(vals < self.m_mu - 1e-10) or np.any(vals > self.M_mu + 1e-10):
            raise ValueError("mu leaves the band [m_mu, M_mu] on samples")
        s = t * rng.uniform(0.0, 1.0, nsample)
        lhs = self.mu(x, t) * t - self.mu(x, s) * s
        span = t - s
        if np.any(lhs < self.m_mu * span - 1e-9) or \
                np.any(lhs > self.M_mu * span + 1e-9):
            raise ValueError("mu(t) t fails the sampled monotonicity band")
        return True


class DiscreteSystem:
    """Assembled sparse system with boundary data not yet eliminated."""

    def __init__(self, K, F, boundary_mask, boundary_vals):
        self.K = K
        self.F = F
        self.boundary_mask = boundary_mask
        self.boundary_vals = boundary_vals


def _rhs_coeffs(space, model):
    """Per-element projection coefficients of the load onto P_l."""
    out = []
    for op in space.ops:
        out.append(np.linalg.solve(
            op.M, op.V.T @ (op.qw * model.f(op.qpts))))
    return out


class Assembler:
    """Reusable assembly context: fixed sparsity, reweighted per iterate."""

    def __init__(self, space, model, stab_mode="mu_E"):
        self.space = space
        self.model = model
        self.stab_mode = stab_mode
        dm = space.dofmap
        rows = []
        cols = []
        for e in range(space.mesh.num_elements):
            dofs = dm.cell_dofs(e)
            rows.append(np.repeat(dofs, len(dofs)))
            cols.append(np.tile(dofs, len(dofs)))
        self._rows = np.concatenate(rows)
        self._cols = np.concatenate(cols)
        f_coeffs = _rhs_coeffs(space, model)
        F = np.zeros(dm.ndof)
        for e, op in enumerate(space.ops):
            F[dm.cell_dofs(e)] += op.H.T @ f_coeffs[e]
        self.F = F
        self.f_coeffs = f_coeffs

    def matrix(self, z):
        """Global stiffness matrix linearised at the dof vector z."""
        space = self.space
        model = self.model
        dm = space.dofmap
        vals = np.empty(len(self._rows))
        pos = 0
        for e, op in enumerate(space.ops):
            zl = z[dm.cell_dofs(e)]
            gx = op.Gx @ zl
            gy = op.Gy @ zl
            tq = np.hypot(gx, gy)
            mu_q = model.mu(op.qpts, tq)
            wmu = op.qw * mu_q
            Ke = op.Gx.T @ (wmu[:, None] * op.Gx) \
                + op.Gy.T @ (wmu[:, None] * op.Gy)
            if self.stab_mode == "linear":
                mu_bar = model.M_mu * model.m_mu
            else:
                gbar = np.array([op.qw @ gx, op.qw @ gy]) / op.area
                tbar = np.full(len(op.qw), np.hypot(gbar[0], gbar[1]))
                mu_bar = float(op.qw @ model.mu(op.qpts, tbar)) / op.area
                if mu_bar <= 0.0:
                    raise SolverError(
                        "element %d: nonpositive stabilisation scale" % e)
            Ke += mu_bar * op.StabBase
            m = op.N * op.N
            vals[pos:pos + m] = Ke.ravel()
            pos += m
        K = sparse.coo_matrix(
            (vals, (self._rows, self._cols)),
            shape=(dm.ndof, dm.ndof)).tocsr()
        return K


def assemble_linearized(space, model, z, stab_mode="mu_E"):
    """One-shot assembly of the frozen-coefficient system at iterate z."""
    ctx = Assembler(space, model, stab_mode)
    K = ctx.matrix(z)
    ub = boundary_values(space, model.g)
    return DiscreteSystem(K, ctx.F.copy(), space.dofmap.boundary_mask, ub)


def solve_linear(system):
    """Solve with symmetric elimination of the Dirichlet dofs."""
    mask = system.boundary_mask
    free = ~mask
    ub = system.boundary_vals
    if not free.any():
        return np.array(ub)
    K = system.K
    rhs = system.F[free] - K[free][:, mask] @ ub[mask]
    Kff = K[free][:, free]
    x = spla.spsolve(Kff.tocsc(), rhs)
    res = np.linalg.norm(Kff @ x - rhs)
    denom = max(np.linalg.norm(rhs) + spla.norm(Kff) * np.linalg.norm(x),
                1e-300)
    if not np.all(np.isfinite(x)) or res > 1e-12 * denom:
        raise SolverError(
            "linear solve residual %.3e exceeds tolerance" % (res / denom))
    u = np.array(ub)
    u[free] = x
    return u


def solve_nonlinear(space, model, tol=1e-10, max_iter=100, stab_mode="mu_E",
                    callback=None):
    """Kacanov iteration for the quasilinear problem.

    Returns the converged dof vector and an info dict with the iteration
    count and the infinity-norm increment trace.
    """
    ctx = Assembler(space, model, stab_mode)
    ub = boundary_values(space, model.g)
    mask = space.dofmap.boundary_mask
    u = np.zeros(space.dofmap.ndof)
    increments = []
    for it in range(max_iter):
        system = DiscreteSystem(ctx.matrix(u), ctx.F.copy(), mask, ub)
        u_new = solve_linear(system)
        inc = float(np.max(np.abs(u_new - u)))
        increments.append(inc)
        rel = inc / max(1.0, float(np.max(np.abs(u_new))))
        u = u_new
        if callback is not None:
            callback(it, u, inc)
        if rel <= tol:
            return u, {"iterations": it + 1, "increments": increments,
                       "converged": True}
    raise SolverError(
        "fixed-point iteration did not converge in %d steps" % max_iter,
        trace=increments)


def h1_seminorm_error(space, model, u, order_bump=4):
    """||grad u_exact - projected gradient of u_h|| and its per-element parts.

    Uses a dedicated quadrature of degree 2 l + order_bump on the
    sub-triangulation.
    """
    from .quadrature import element_rule

    if model.exact_grad is None:
        raise ValueError("model provides no exact gradient")
    mesh = space.mesh
    order = 2 * space.ell + order_bump
    per_elem = np.empty(mesh.num_elements)
    dm = space.dofmap
    n1 = poly.basis_dim(space.ell - 1)
    for e, op in enumerate(space.ops):
        rule = element_rule(mesh, e, order)
        V1 = op.basis.eval(rule.points)[:, :n1]
        ul = u[dm.cell_dofs(e)]
        ghx = V1 @ (op.P1x @ ul)
        ghy = V1 @ (op.P1y @ ul)
        gex, gey = model.exact_grad(rule.points)
        per_elem[e] = float(rule.weights @ ((ghx - gex) ** 2
                                            + (ghy - gey) ** 2))
    return float(np.sqrt(per_elem.sum())), per_elem

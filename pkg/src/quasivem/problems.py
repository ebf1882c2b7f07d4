"""The built-in benchmark problems.

Each problem supplies the coefficient mu(x, t) with its derivative and
monotonicity constants, the exact solution with closed-form gradient and
Hessian, and a right-hand side built generically from those closed forms by
the chain rule

    -div(mu(|g|) g) = -[ mu'(|g|) (g' H g) / |g| + mu(|g|) lap(u) ],

so no hand-derived f can drift out of sync with u.  Where the gradient
modulus vanishes the mu' term has a removable limit and is dropped.
"""

import numpy as np

from .solver import NonlinearModel

_TINY_R = 1e-100   # below this radius the singular closed forms return 0
_TINY_T = 1e-14    # gradient modulus treated as zero in the chain rule


def manufactured_rhs(mu, dmu_dt, grad, hess):
    """Right-hand side matching the exact solution of the quasilinear PDE."""

    def f(x):
        x = np.atleast_2d(np.asarray(x, float))
        gx, gy = grad(x)
        uxx, uxy, uyy = hess(x)
        t = np.hypot(gx, gy)
        quad = gx * gx * uxx + 2.0 * gx * gy * uxy + gy * gy * uyy
        lap = uxx + uyy
        safe = np.where(t < _TINY_T, 1.0, t)
        term = np.where(t < _TINY_T, 0.0, dmu_dt(x, t) * quad / safe)
        return -(term + mu(x, t) * lap)

    return f


# ----------------------------------------------------------------------
# problem 1: smooth solution on the unit square


def problem_1():
    def mu(x, t):
        return 2.0 + 1.0 / (1.0 + t ** 2)

    def dmu_dt(x, t):
        return -2.0 * t / (1.0 + t ** 2) ** 2

    def u(x):
        x = np.atleast_2d(np.asarray(x, float))
        return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])

    def grad(x):
        x = np.atleast_2d(np.asarray(x, float))
        sx = np.sin(np.pi * x[:, 0])
        cx = np.cos(np.pi * x[:, 0])
        sy = np.sin(np.pi * x[:, 1])
        cy = np.cos(np.pi * x[:, 1])
        return np.pi * cx * sy, np.pi * sx * cy

    def hess(x):
        x = np.atleast_2d(np.asarray(x, float))
        sx = np.sin(np.pi * x[:, 0])
        cx = np.cos(np.pi * x[:, 0])
        sy = np.sin(np.pi * x[:, 1])
        cy = np.cos(np.pi * x[:, 1])
        p2 = np.pi ** 2
        return -p2 * sx * sy, p2 * cx * cy, -p2 * sx * sy

    # min of d/dt (mu(t) t) = 2 + (1 - t^2)/(1 + t^2)^2 is 15/8 at t^2 = 3
    return NonlinearModel(
        mu, dmu_dt, m_mu=15.0 / 8.0, M_mu=3.0,
        f=manufactured_rhs(mu, dmu_dt, grad, hess),
        g=u, exact_u=u, exact_grad=grad, name="problem1")


# ----------------------------------------------------------------------
# problems 2 and 3: re-entrant corner on the L-shaped domain


def _polar(x):
    r = np.hypot(x[:, 0], x[:, 1])
    th = np.arctan2(x[:, 1], x[:, 0])
    th = np.where(th < 0.0, th + 2.0 * np.pi, th)
    return r, th


def _corner_u(x):
    x = np.atleast_2d(np.asarray(x, float))
    r, th = _polar(x)
    return r ** (2.0 / 3.0) * np.sin(2.0 * th / 3.0)


def _corner_grad(x):
    x = np.atleast_2d(np.asarray(x, float))
    r, th = _polar(x)
    r = np.where(r < _TINY_R, _TINY_R, r)
    s = (2.0 / 3.0) * r ** (-1.0 / 3.0)
    return -s * np.sin(th / 3.0), s * np.cos(th / 3.0)


def _corner_hess(x):
    x = np.atleast_2d(np.asarray(x, float))
    r, th = _polar(x)
    r = np.where(r < _TINY_R, _TINY_R, r)
    s = (2.0 / 9.0) * r ** (-4.0 / 3.0)
    uxx = s * np.sin(4.0 * th / 3.0)
    uxy = -s * np.cos(4.0 * th / 3.0)
    return uxx, uxy, -uxx


def _exp_mu():
    def mu(x, t):
        return 1.0 + np.exp(-t ** 2)

    def dmu_dt(x, t):
        return -2.0 * t * np.exp(-t ** 2)

    # d/dt (mu(t) t) = 1 + (1 - 2 t^2) e^{-t^2}: min 1 - 2 e^{-3/2} at
    # t^2 = 3/2, max 2 at t = 0
    return mu, dmu_dt, 1.0 - 2.0 * np.exp(-1.5), 2.0


def problem_2():
    mu, dmu_dt, m_mu, M_mu = _exp_mu()
    f = manufactured_rhs(mu, dmu_dt, _corner_grad, _corner_hess)

    def f_guarded(x):
        x = np.atleast_2d(np.asarray(x, float))
        r = np.hypot(x[:, 0], x[:, 1])
        out = f(x)
        return np.where(r < 1e-12, 0.0, out)

    return NonlinearModel(
        mu, dmu_dt, m_mu, M_mu, f=f_guarded, g=_corner_u,
        exact_u=_corner_u, exact_grad=_corner_grad, name="problem2")


def problem_3():
    mu, dmu_dt, m_mu, M_mu = _exp_mu()
    cx, cy, a = 0.5, 0.5, 1000.0

    def bump(x):
        x = np.atleast_2d(np.asarray(x, float))
        return np.exp(-a * ((x[:, 0] - cx) ** 2 + (x[:, 1] - cy) ** 2))

    def u(x):
        return _corner_u(x) + bump(x)

    def grad(x):
        x = np.atleast_2d(np.asarray(x, float))
        gx, gy = _corner_grad(x)
        b = bump(x)
        return (gx - 2.0 * a * (x[:, 0] - cx) * b,
                gy - 2.0 * a * (x[:, 1] - cy) * b)

    def hess(x):
        x = np.atleast_2d(np.asarray(x, float))
        uxx, uxy, uyy = _corner_hess(x)
        b = bump(x)
        dx = x[:, 0] - cx
        dy = x[:, 1] - cy
        uxx = uxx + (4.0 * a * a * dx * dx - 2.0 * a) * b
        uyy = uyy + (4.0 * a * a * dy * dy - 2.0 * a) * b
        uxy = uxy + 4.0 * a * a * dx * dy * b
        return uxx, uxy, uyy

    f = manufactured_rhs(mu, dmu_dt, grad, hess)

    def f_guarded(x):
        x = np.atleast_2d(np.asarray(x, float))
        r = np.hypot(x[:, 0], x[:, 1])
        return np.where(r < 1e-12, 0.0, f(x))

    return NonlinearModel(
        mu, dmu_dt, m_mu, M_mu, f=f_guarded, g=u,
        exact_u=u, exact_grad=grad, name="problem3")


PROBLEMS = {1: problem_1, 2: problem_2, 3: problem_3}


def initial_mesh(problem_id, grid="quads", cells=None, lloyd_iters=100,
                 rng_seed=42):
    """The coarse grids the experiments start from."""
    from . import mesh as qmesh

    if problem_id == 1:
        if grid == "quads":
            return qmesh.build_cartesian_grid(4, 4)
        return qmesh.build_voronoi_mesh(cells or 16, "square",
                                        lloyd_iters, rng_seed)
    if problem_id in (2, 3):
        if grid == "quads":
            return qmesh.build_cartesian_grid(
                4, 4, bounds=(-1.0, 1.0, -1.0, 1.0), lshape=True)
        return qmesh.build_voronoi_mesh(cells or 21, "lshape",
                                        lloyd_iters, rng_seed)
    raise ValueError("unknown problem id %r" % problem_id)


def residual_check(model, problem_id, n=100, seed=0, h=1e-6):
    """Max PDE defect of the manufactured data at random interior points.

    The flux mu(x, |grad u|) grad u is evaluated from the closed forms and
    its divergence approximated by central differences; the result plus f
    should vanish.  Points near the domain boundary (and the re-entrant
    corner for the L-shaped problems) are excluded.
    """
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        cand = rng.uniform(-1.0, 1.0, size=(4 * n, 2))
        if problem_id == 1:
            cand = 0.5 * (cand + 1.0)
            keep = np.all((cand > 0.05) & (cand < 0.95), axis=1)
        else:
            inside = ~((cand[:, 0] > -0.05) & (cand[:, 1] < 0.05))
            margin = np.all(np.abs(cand) < 0.95, axis=1)
            away = np.hypot(cand[:, 0], cand[:, 1]) > 0.2
            keep = inside & margin & away
        pts.extend(cand[keep])
    pts = np.array(pts[:n])

    def flux(x):
        gx, gy = model.exact_grad(x)
        mu = model.mu(x, np.hypot(gx, gy))
        return mu * gx, mu * gy

    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    div = (flux(pts + ex)[0] - flux(pts - ex)[0]) / (2 * h) \
        + (flux(pts + ey)[1] - flux(pts - ey)[1]) / (2 * h)
    return float(np.max(np.abs(div + model.f(pts))))

"""Acceptance suite: one test per advertised guarantee of the package.

`pytest tests/test_acceptance.py -v` prints a pass/fail line per criterion.
The adaptive runs are computed once in module-scoped fixtures and shared, so
the whole file takes about a minute.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from quasivem import adapt as qa
from quasivem import estimator as qe
from quasivem import mesh as qm
from quasivem import solver as qsol
from quasivem import space as qs
from quasivem.problems import PROBLEMS, initial_mesh
from quasivem.solver import NonlinearModel

THETA = 0.4
MAX_REF = 21
BUDGET = 100000


def adaptive_runs(pid, orders):
    t0 = time.perf_counter()
    runs = {}
    for ell in orders:
        cfg = qa.AdaptConfig(theta=THETA, max_refinements=MAX_REF,
                             dof_budget=BUDGET, order=ell)
        runs[ell] = qa.adapt_loop(PROBLEMS[pid](), initial_mesh(pid), cfg)
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def p1_adaptive():
    return adaptive_runs(1, (1, 2, 3))


@pytest.fixture(scope="module")
def p2_adaptive():
    return adaptive_runs(2, (1, 2, 3))


@pytest.fixture(scope="module")
def p3_adaptive():
    return adaptive_runs(3, (2,))


def polynomial_case(ell):
    pts = lambda p: np.atleast_2d(np.asarray(p, float))
    if ell == 1:
        u = lambda p: 2.0 * pts(p)[:, 0] - 3.0 * pts(p)[:, 1] + 1.0
        grad = lambda p: (np.full(len(pts(p)), 2.0),
                          np.full(len(pts(p)), -3.0))
        f = lambda p: np.zeros(len(pts(p)))
    elif ell == 2:
        u = lambda p: (pts(p)[:, 0] ** 2 + pts(p)[:, 0] * pts(p)[:, 1]
                       + pts(p)[:, 1] ** 2)
        grad = lambda p: (2.0 * pts(p)[:, 0] + pts(p)[:, 1],
                          pts(p)[:, 0] + 2.0 * pts(p)[:, 1])
        f = lambda p: np.full(len(pts(p)), -4.0)
    else:
        u = lambda p: (pts(p)[:, 0] ** 3 + pts(p)[:, 0] ** 2 * pts(p)[:, 1]
                       - pts(p)[:, 1] ** 3)
        grad = lambda p: (3.0 * pts(p)[:, 0] ** 2
                          + 2.0 * pts(p)[:, 0] * pts(p)[:, 1],
                          pts(p)[:, 0] ** 2 - 3.0 * pts(p)[:, 1] ** 2)
        f = lambda p: -6.0 * pts(p)[:, 0] + 4.0 * pts(p)[:, 1]
    model = NonlinearModel(
        mu=lambda x, t: np.ones_like(np.asarray(t, float)),
        dmu_dt=lambda x, t: np.zeros_like(np.asarray(t, float)),
        m_mu=1.0, M_mu=1.0, f=f, g=u, exact_u=u, exact_grad=grad)
    return model


def test_criterion_1_polynomial_patch():
    t0 = time.perf_counter()
    meshes = [initial_mesh(2),
              qm.build_voronoi_mesh(16, domain="square", lloyd_iters=100,
                                    rng_seed=42)]
    for mesh in meshes:
        for ell in (1, 2, 3):
            model = polynomial_case(ell)
            sp = qs.Space(mesh, ell)
            u, _ = qsol.solve_nonlinear(sp, model)
            err, _ = qsol.h1_seminorm_error(sp, model, u)
            est = qe.estimate(sp, model, u).total
            assert err <= 1e-8, (ell, err)
            assert est <= 1e-7, (ell, est)
    assert time.perf_counter() - t0 < 5.0


def test_criterion_2_uniform_refinement_rates():
    t0 = time.perf_counter()
    model = PROBLEMS[1]()
    for ell in (1, 2, 3):
        errs, hs = [], []
        mesh = initial_mesh(1)
        for _ in range(5):
            sp = qs.Space(mesh, ell)
            u, _ = qsol.solve_nonlinear(sp, model, stab_mode="linear")
            errs.append(qsol.h1_seminorm_error(sp, model, u)[0])
            hs.append(mesh.h)
            mesh = qm.uniform_refine(mesh)
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert abs(slope - ell) <= 0.2, (ell, slope)
    assert time.perf_counter() - t0 < 120.0


def test_criterion_3_effectivity_stability(p1_adaptive, p2_adaptive):
    for runs, elapsed, cap in (p1_adaptive + (30.0,), p2_adaptive + (15.0,)):
        assert elapsed < 600.0
        for ell, records in runs.items():
            assert len(records) >= 21
            effs = np.array([r.effectivity for r in records])
            assert np.all(effs <= cap), (ell, effs.max())
            tail = effs[-10:]
            assert tail.max() / tail.min() <= 3.0, (ell, tail)


def test_criterion_4_reliability(p1_adaptive, p2_adaptive, p3_adaptive):
    for runs, _ in (p1_adaptive, p2_adaptive, p3_adaptive):
        for records in runs.values():
            for rec in records:
                assert rec.estimate >= rec.error, (rec.level, rec.error,
                                                   rec.estimate)


def test_criterion_5_efficiency_trend(p2_adaptive):
    records = p2_adaptive[0][1]
    vals = np.array([r.efficiency for r in records])
    assert np.all(vals > 0.0)
    assert vals[-1] <= 2.0 * np.median(vals), (vals[-1], np.median(vals))


def test_criterion_6_adaptive_resolves_singularity(p2_adaptive):
    records = p2_adaptive[0][2]
    dofs = np.array([r.dofs for r in records[-8:]], dtype=float)
    errs = np.array([r.error for r in records[-8:]])
    slope_adaptive = np.polyfit(np.log(dofs), np.log(errs), 1)[0]

    model = PROBLEMS[2]()
    mesh = initial_mesh(2)
    u_dofs, u_errs = [], []
    for _ in range(5):
        sp = qs.Space(mesh, 2)
        u, _ = qsol.solve_nonlinear(sp, model)
        u_dofs.append(sp.dofmap.ndof)
        u_errs.append(qsol.h1_seminorm_error(sp, model, u)[0])
        mesh = qm.uniform_refine(mesh)
    slope_uniform = np.polyfit(np.log(u_dofs), np.log(u_errs), 1)[0]
    assert slope_adaptive <= slope_uniform - 0.3, (slope_adaptive,
                                                   slope_uniform)


def test_criterion_7_marking_matches_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    for trial in range(1000):
        n = int(rng.integers(1, 201))
        vals = rng.standard_normal(n) ** 2
        if trial % 20 == 0:
            vals[:] = 0.0
        elif trial % 5 == 0:
            vals = np.round(vals, 1)  # force ties
        theta = float(rng.uniform(0.05, 0.95))
        got, converged = qa.dorfler_mark(vals, theta)

        total = vals.sum()
        if total <= 0.0:
            assert converged and len(got) == 0
            continue
        order = sorted(range(n), key=lambda i: (-vals[i], i))
        target = theta * theta * total * (1.0 - 1e-12)
        acc = 0.0
        take = []
        for i in order:
            take.append(i)
            acc += vals[i]
            if acc >= target:
                break
        assert not converged
        assert np.array_equal(np.sort(take), got), trial
    assert time.perf_counter() - t0 < 10.0


def test_criterion_8_solver_contraction():
    for pid in (1, 2, 3):
        mesh = initial_mesh(pid)
        for ell in (1, 2, 3):
            sp = qs.Space(mesh, ell)
            u, info = qsol.solve_nonlinear(sp, PROBLEMS[pid](), tol=1e-10,
                                           max_iter=100)
            assert info["converged"]
            inc = info["increments"]
            ratios = [inc[k] / inc[k - 1] for k in range(2, len(inc))
                      if inc[k - 1] > 0.0]
            assert all(r <= 0.9 for r in ratios), (pid, ell, max(ratios))


def test_criterion_9_deterministic_runs(tmp_path):
    cfg = tmp_path / "exp.txt"
    cfg.write_text("problem = 2\ngrid = voronoi\norder = 2\n"
                   "refinements = 3\n")
    outputs = []
    for tag in ("a", "b"):
        proc = subprocess.run(
            [sys.executable, "-m", "quasivem.cli", "run",
             "--config", str(cfg), "--outdir", str(tmp_path / tag)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs.append((tmp_path / tag / "results.csv").read_bytes())
    assert outputs[0] == outputs[1]

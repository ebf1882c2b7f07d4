"""Command line front end: experiment runner, mesh generator, self checks.

Subcommands:
  run    solve an adaptive experiment described by a key=value config file
  mesh   generate a polygonal grid and write it as text
  check  run a handful of built-in consistency tests

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

import argparse
import importlib.util
import os
import sys

import numpy as np

from . import adapt as qa
from . import mesh as qm
from . import mesh_io
from . import problems as qp
from .solver import NonlinearModel, SolverError


class ConfigError(Exception):
    pass


_DEFAULTS = {
    "problem": "1",
    "grid": "quads",
    "order": "1",
    "theta": "0.4",
    "refinements": "20",
    "seed": "42",
    "outdir": "out",
    "cells": "",
    "lloyd_iters": "100",
    "dof_budget": "100000",
    "stab": "mu_E",
    "attribution": "full",
}


def parse_config_text(text):
    """Flat key=value lines with # comments into a dict of strings."""
    cfg = dict(_DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected key=value, got %r"
                              % (lineno, raw.strip()))
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in _DEFAULTS:
            raise ConfigError("line %d: unknown key %r" % (lineno, key))
        cfg[key] = value.strip()
    return cfg


def _positive_int(cfg, key, minimum=0):
    try:
        v = int(cfg[key])
    except ValueError:
        raise ConfigError("%s must be an integer, got %r" % (key, cfg[key]))
    if v < minimum:
        raise ConfigError("%s must be >= %d" % (key, minimum))
    return v


def load_model_file(path):
    """Import a python file that defines a NonlinearModel named `model`.

    The file may also define `initial_mesh(grid, cells, lloyd_iters, seed)`
    to supply its own starting grid.
    """
    if not os.path.exists(path):
        raise ConfigError("model file %s does not exist" % path)
    spec = importlib.util.spec_from_file_location("quasivem_user_model", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    model = getattr(module, "model", None)
    if not isinstance(model, NonlinearModel):
        raise ConfigError("model file %s must define a NonlinearModel "
                          "named `model`" % path)
    return model, getattr(module, "initial_mesh", None)


def resolve_config(cfg):
    """Validate the string config and build (model, mesh, AdaptConfig)."""
    if cfg["grid"] not in ("quads", "voronoi"):
        raise ConfigError("grid must be quads or voronoi, got %r"
                          % cfg["grid"])
    order = _positive_int(cfg, "order", 1)
    if order not in (1, 2, 3):
        raise ConfigError("order must be 1, 2 or 3")
    try:
        theta = float(cfg["theta"])
    except ValueError:
        raise ConfigError("theta must be a number, got %r" % cfg["theta"])
    if not 0.0 < theta < 1.0:
        raise ConfigError("theta must lie in (0, 1)")
    refinements = _positive_int(cfg, "refinements")
    seed = _positive_int(cfg, "seed")
    lloyd = _positive_int(cfg, "lloyd_iters")
    budget = _positive_int(cfg, "dof_budget", 1)
    cells = None if cfg["cells"] == "" else _positive_int(cfg, "cells", 3)
    if cfg["stab"] not in ("mu_E", "linear"):
        raise ConfigError("stab must be mu_E or linear")
    if cfg["attribution"] not in ("full", "half"):
        raise ConfigError("attribution must be full or half")

    pid = cfg["problem"]
    if pid.lstrip("-").isdigit() and pid not in ("1", "2", "3"):
        raise ConfigError("unknown problem id %s" % pid)
    if pid in ("1", "2", "3"):
        model = qp.PROBLEMS[int(pid)]()
        mesh = qp.initial_mesh(int(pid), grid=cfg["grid"], cells=cells,
                               lloyd_iters=lloyd, rng_seed=seed)
    else:
        model, mesh_fn = load_model_file(pid)
        if mesh_fn is not None:
            mesh = mesh_fn(cfg["grid"], cells, lloyd, seed)
        elif cfg["grid"] == "voronoi":
            mesh = qm.build_voronoi_mesh(cells or 16, domain="square",
                                         lloyd_iters=lloyd, rng_seed=seed)
        else:
            mesh = qm.build_cartesian_grid(4, 4)

    acfg = qa.AdaptConfig(theta=theta, max_refinements=refinements,
                          dof_budget=budget, order=order,
                          stab_mode=cfg["stab"],
                          attribution=cfg["attribution"])
    return model, mesh, acfg


def serialize_config(cfg):
    lines = ["%s = %s" % (k, cfg[k]) for k in sorted(_DEFAULTS)]
    return "\n".join(lines) + "\n"


def _write_outputs(outdir, cfg, records):
    with open(os.path.join(outdir, "results.csv"), "w") as fh:
        fh.write(qa.records_to_csv(records))
    with open(os.path.join(outdir, "config.txt"), "w") as fh:
        fh.write(serialize_config(cfg))
    if records:
        last = records[-1].level
        snapshots = sorted({0, last // 2, last})
        for lvl in snapshots:
            rec = next(r for r in records if r.level == lvl)
            path = os.path.join(outdir, "mesh_level_%03d.svg" % lvl)
            mesh_io.write_mesh_svg(rec.mesh, path)


def cmd_run(args):
    try:
        with open(args.config) as fh:
            cfg = parse_config_text(fh.read())
        if args.outdir is not None:
            cfg["outdir"] = args.outdir
        model, mesh, acfg = resolve_config(cfg)
        outdir = cfg["outdir"]
        os.makedirs(outdir, exist_ok=True)
        if not os.access(outdir, os.W_OK):
            raise ConfigError("output directory %s is not writable" % outdir)
    except (ConfigError, OSError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2

    def progress(rec):
        err = "n/a" if rec.error is None else "%.6e" % rec.error
        print("level %3d  dofs %7d  error %s  estimate %.6e"
              % (rec.level, rec.dofs, err, rec.estimate))

    try:
        records = qa.adapt_loop(model, mesh, acfg, callback=progress)
    except qa.AdaptAborted as exc:
        _write_outputs(outdir, cfg, exc.history)
        print("solver failure: %s" % exc, file=sys.stderr)
        return 3
    except SolverError as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return 3
    _write_outputs(outdir, cfg, records)
    print("wrote %s" % os.path.join(outdir, "results.csv"))
    return 0


def cmd_mesh(args):
    try:
        if args.kind == "quads":
            lshape = args.domain == "lshape"
            bounds = (-1.0, 1.0, -1.0, 1.0) if lshape else (0.0, 1.0, 0.0, 1.0)
            mesh = qm.build_cartesian_grid(args.nx, args.ny, bounds=bounds,
                                           lshape=lshape)
        else:
            mesh = qm.build_voronoi_mesh(args.cells, domain=args.domain,
                                         lloyd_iters=args.lloyd_iters,
                                         rng_seed=args.seed)
    except (ValueError, RuntimeError) as exc:
        print("mesh error: %s" % exc, file=sys.stderr)
        return 2
    if args.out.endswith(".svg"):
        mesh_io.write_mesh_svg(mesh, args.out)
    else:
        mesh_io.write_mesh_text(mesh, args.out)
    print("wrote %s (%d elements, %d vertices)"
          % (args.out, mesh.num_elements, mesh.num_vertices))
    return 0


def cmd_check(args):
    from . import space as qs
    from . import solver as qv
    from . import estimator as qe
    failures = 0

    def report(name, ok, detail=""):
        nonlocal failures
        print("%-38s %s %s" % (name, "ok" if ok else "FAIL", detail))
        if not ok:
            failures += 1

    # linear patch test on the L-shaped grid
    m = qm.build_cartesian_grid(4, 4, bounds=(-1, 1, -1, 1), lshape=True)
    for ell in (1, 2):
        exact = (lambda p: 2 * p[:, 0] - 3 * p[:, 1] + 1) if ell == 1 \
            else (lambda p: p[:, 0] ** 2 - p[:, 1] ** 2)
        model = qv.NonlinearModel(
            mu=lambda x, t: np.ones(len(x)),
            dmu_dt=lambda x, t: np.zeros(len(x)),
            m_mu=1.0, M_mu=1.0,
            f=lambda p: np.zeros(len(p)), g=exact,
            exact_u=exact)
        sp = qs.Space(m, ell)
        u, _ = qv.solve_nonlinear(sp, model)
        ind = qe.estimate(sp, model, u)
        report("patch test order %d" % ell, ind.total <= 1e-8,
               "estimator %.2e" % ind.total)

    # marking of equal indicators hits the closed-form count
    marked, conv = qa.dorfler_mark(np.ones(100), 0.4)
    report("equal-indicator marking", len(marked) == 16 and not conv,
           "marked %d of 100" % len(marked))

    # manufactured data satisfies the equation at random points
    for pid in (1, 2, 3):
        model = qp.PROBLEMS[pid]()
        res = qp.residual_check(model, pid, n=100, seed=0)
        report("problem %d data residual" % pid, res <= 1e-5,
               "max %.2e" % res)
    print("%d failure(s)" % failures)
    return 0 if failures == 0 else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="quasivem",
        description="adaptive virtual element solver for quasilinear "
                    "diffusion problems")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--outdir", default=None,
                       help="override the outdir config key")
    p_run.set_defaults(func=cmd_run)

    p_mesh = sub.add_parser("mesh", help="generate a mesh file")
    p_mesh.add_argument("--kind", choices=("quads", "voronoi"),
                        default="voronoi")
    p_mesh.add_argument("--cells", type=int, default=16)
    p_mesh.add_argument("--nx", type=int, default=4)
    p_mesh.add_argument("--ny", type=int, default=4)
    p_mesh.add_argument("--seed", type=int, default=42)
    p_mesh.add_argument("--lloyd-iters", type=int, default=100)
    p_mesh.add_argument("--domain", choices=("square", "lshape"),
                        default="square")
    p_mesh.add_argument("--out", required=True)
    p_mesh.set_defaults(func=cmd_mesh)

    p_check = sub.add_parser("check", help="run built-in self tests")
    p_check.set_defaults(func=cmd_check)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

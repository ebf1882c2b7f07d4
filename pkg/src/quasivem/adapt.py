"""Dorfler marking and the solve-estimate-mark-refine loop."""

import numpy as np

from . import estimator as est
from .mesh import refine
from .solver import SolverError, h1_seminorm_error, solve_nonlinear
from .space import Space

# Relative slack on the marking threshold so that exact rational
# fractions (all-equal indicators, theta**2 * n integer) are not pushed
# over by the rounding of theta**2.
_MARK_RTOL = 1e-12


class AdaptConfig:
    """Settings for an adaptive run."""

    def __init__(self, theta=0.4, max_refinements=30, dof_budget=100000,
                 order=1, stab_mode="mu_E", attribution="full"):
        if not 0.0 < theta < 1.0:
            raise ValueError("marking parameter must lie in (0, 1)")
        if order not in (1, 2, 3):
            raise ValueError("order must be 1, 2 or 3")
        self.theta = float(theta)
        self.max_refinements = int(max_refinements)
        self.dof_budget = int(dof_budget)
        self.order = int(order)
        self.stab_mode = stab_mode
        self.attribution = attribution


def dorfler_mark(values, theta):
    """Smallest greedy set of elements carrying a theta fraction of error.

    Elements are taken in order of decreasing squared indicator (ties by
    ascending id) until the marked sum reaches theta^2 times the total.
    Returns (sorted element ids, converged); all-zero indicators yield an
    empty set with converged True.
    """
    values = np.asarray(values, dtype=float)
    if np.any(values < 0.0):
        raise ValueError("indicators must be nonnegative")
    total = float(values.sum())
    if total <= 0.0:
        return np.array([], dtype=int), True
    order = np.argsort(-values, kind="stable")
    target = theta * theta * total * (1.0 - _MARK_RTOL)
    csum = np.cumsum(values[order])
    m = int(np.searchsorted(csum, target)) + 1
    m = min(m, len(values))
    return np.sort(order[:m]), False


class StepRecord:
    """One level of an adaptive run."""

    def __init__(self, level, mesh, u, dofs, indicators, error, effectivity,
                 efficiency, iterations, marked):
        self.level = level
        self.mesh = mesh
        self.u = u
        self.dofs = dofs
        self.indicators = indicators
        self.estimate = indicators.total
        self.error = error
        self.effectivity = effectivity
        self.efficiency = efficiency
        self.iterations = iterations
        self.marked = marked


class AdaptAborted(RuntimeError):
    """Nonlinear solve failed mid-loop; completed levels are preserved."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def adapt_loop(model, mesh, config, callback=None):
    """Run the adaptive loop and return the list of StepRecords.

    Stops after max_refinements levels, when the next space would exceed
    dof_budget, or when every indicator vanishes.  The recorded error,
    effectivity and efficiency fields are None when the model has no exact
    gradient.
    """
    records = []
    level = 0
    while True:
        space = Space(mesh, config.order)
        dofs = space.dofmap.ndof
        if records and dofs > config.dof_budget:
            break
        try:
            u, info = solve_nonlinear(space, model,
                                      stab_mode=config.stab_mode)
        except SolverError as exc:
            raise AdaptAborted("nonlinear solve failed at level %d: %s"
                               % (level, exc), records) from exc
        ind = est.estimate(space, model, u, stab_mode=config.stab_mode)
        error = effectivity = efficiency = None
        if model.exact_grad is not None:
            error, per_err = h1_seminorm_error(space, model, u)
            effectivity = est.effectivity(ind.total, error)
            efficiency = est.efficiency_ratio(space, ind, per_err)

        values = ind.element_totals(config.attribution)
        marked, converged = dorfler_mark(values, config.theta)
        rec = StepRecord(level, mesh, u, dofs, ind, error, effectivity,
                         efficiency, info["iterations"], marked)
        records.append(rec)
        if callback is not None:
            callback(rec)
        if level >= config.max_refinements or converged:
            break
        mesh = refine(mesh, marked)
        level += 1
    return records


CSV_HEADER = "level,dofs,H1 error,Estimated error,Effectivity"


def records_to_csv(records):
    """Render the run history in the fixed five-column layout."""
    lines = [CSV_HEADER]
    for rec in records:
        err = "" if rec.error is None else repr(float(rec.error))
        eff = "" if rec.effectivity is None else repr(float(rec.effectivity))
        lines.append("%d,%d,%s,%s,%s"
                     % (rec.level, rec.dofs, err,
                        repr(float(rec.estimate)), eff))
    return "\n".join(lines) + "\n"

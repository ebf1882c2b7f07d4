"""Adaptive virtual element solver for quasilinear diffusion problems.

Solves -div(mu(x, |grad u|) grad u) = f on polygonal meshes with a
conforming virtual element space of order 1 to 3, a residual a posteriori
error estimator, and Dorfler-marked adaptive refinement.
"""

from .adapt import AdaptConfig, adapt_loop, dorfler_mark
from .estimator import estimate
from .mesh import (PolyMesh, build_cartesian_grid, build_voronoi_mesh,
                   refine, uniform_refine)
from .solver import NonlinearModel, SolverError, solve_nonlinear
from .space import Space

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig", "adapt_loop", "dorfler_mark", "estimate",
    "PolyMesh", "build_cartesian_grid", "build_voronoi_mesh",
    "refine", "uniform_refine",
    "NonlinearModel", "SolverError", "solve_nonlinear", "Space",
    "__version__",
]

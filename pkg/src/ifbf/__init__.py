"""Inertial forward-backward-forward splitting for monotone inclusions.

Layers, from the bottom up:

* :mod:`ifbf.hilbert` -- vectors and product spaces
* :mod:`ifbf.operators` -- resolvents, forward operators, linear maps, sets
* :mod:`ifbf.fbf` -- the inertial FBF iteration for ``0 in A x + B x``
* :mod:`ifbf.primal_dual` -- primal-dual scheme for composite inclusions
* :mod:`ifbf.convex` -- proximal calculus and convex primal-dual pairs
* :mod:`ifbf.zoo`, :mod:`ifbf.runner`, :mod:`ifbf.cli` -- test problems and batch runs
"""

from .errors import DimensionError, NonFiniteError, ParameterError
from .fbf import (FbfParams, FbfState, SolveReport, Termination, classical_tseng_params, fbf_step,
                  inertial_proximal_point, solve, step_bound_general, step_bound_no_inertia2,
                  summability_diagnostics)
from .primal_dual import (Block, PrimalDualProblem, PrimalDualSolution, PrimalDualState, beta_of,
                          optimality_residual, pd_solve, pd_step)

__version__ = "0.1.0"

__all__ = [
    "DimensionError", "NonFiniteError", "ParameterError",
    "FbfParams", "FbfState", "SolveReport", "Termination", "classical_tseng_params", "fbf_step",
    "inertial_proximal_point", "solve", "step_bound_general", "step_bound_no_inertia2",
    "summability_diagnostics",
    "Block", "PrimalDualProblem", "PrimalDualSolution", "PrimalDualState", "beta_of",
    "optimality_residual", "pd_solve", "pd_step",
]

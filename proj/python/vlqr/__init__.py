"""Finite-horizon LQR for Volterra integro-differential systems.

Thin Python layer over the C++ core: problem setup, simulation, the
open-loop (Fredholm) and feedback (Riccati) solvers, and the discrete
cross-validation oracle.
"""

import json as _json

from ._vlqr import (
    ControlSignal,
    Grid,
    InvalidProblem,
    Kernel,
    NumericalError,
    Problem,
    Resolvent,
    RiccatiSolution,
    RunConfig,
    StatePair,
    Trajectory,
    closed_loop_simulate,
    compare_all as _compare_all_json,
    compute_resolvent,
    config_from_json,
    control_from_samples,
    cost,
    discrete_optimal_control,
    eval_kernel,
    evolve,
    feedback_control,
    initial_state,
    load_config,
    make_grid,
    make_problem,
    optimal_control_open_loop,
    riccati_residual,
    simulate,
    solve_riccati,
    value_function,
    zero_control,
)

__all__ = [
    "ControlSignal",
    "Grid",
    "InvalidProblem",
    "Kernel",
    "NumericalError",
    "Problem",
    "Resolvent",
    "RiccatiSolution",
    "RunConfig",
    "StatePair",
    "Trajectory",
    "closed_loop_simulate",
    "compare_all",
    "compute_resolvent",
    "config_from_json",
    "control_from_samples",
    "cost",
    "discrete_optimal_control",
    "eval_kernel",
    "evolve",
    "feedback_control",
    "initial_state",
    "load_config",
    "make_grid",
    "make_problem",
    "optimal_control_open_loop",
    "riccati_residual",
    "simulate",
    "solve_riccati",
    "value_function",
    "zero_control",
]


def compare_all(problem, grid, x0, with_residuals=False):
    """Run the three solution routes and return the comparison as a dict."""
    return _json.loads(_compare_all_json(problem, grid, x0, with_residuals))

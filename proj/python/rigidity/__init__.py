"""Steady states of -eps Lap(u) = e^u - 1 - a u on planar domains with Neumann boundary conditions."""

from ._core import (
    EigenPair,
    NumericalError,
    Operator,
    Solution,
    bifurcation_epsilon,
    branch_switch,
    constant_chain,
    continue_branch,
    detect_bifurcation,
    disk,
    estimate_green_constants,
    eval_f,
    eval_f_prime,
    find_xi,
    first_mode,
    jacobian,
    lipschitz_k,
    min_depth_c0,
    multi_start,
    newton_solve,
    project_mean_zero,
    read_mesh,
    rectangle,
    residual,
    rigidity_sweep,
    run_diagnostics,
    stability_indicator,
)

__all__ = [name for name in dir() if not name.startswith("_")]

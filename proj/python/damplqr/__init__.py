"""Data-driven stabilizing and optimal LQR synthesis via damped policy iteration."""

from ._core import (
    ConfigError,
    ConvergenceError,
    RankError,
    SamplePool,
    collect,
    hewer_pi,
    optimal_q_matrix,
    run_pi,
    run_qlearn,
    solve_dare,
    solve_discrete_lyapunov,
    spectral_radius,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "RankError",
    "SamplePool",
    "collect",
    "hewer_pi",
    "optimal_q_matrix",
    "run_pi",
    "run_qlearn",
    "solve_dare",
    "solve_discrete_lyapunov",
    "spectral_radius",
]

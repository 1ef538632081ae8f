"""Derivative-free minimization of the QAOA energy and the approximation ratio."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .qubo import EnergyTable, GroundInfo
from .simulator import QaoaParams, expectation, run_circuit

__all__ = [
    "OptimizerConfig",
    "OptResult",
    "UndefinedRatioError",
    "minimize",
    "sample_initial_params",
    "alpha",
]


class UndefinedRatioError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    max_evals: int = 1000
    initial_step: float = 0.5
    convergence_tol: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be at least 1")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")


@dataclass(frozen=True)
class OptResult:
    params_opt: QaoaParams
    value: float
    evals_used: int
    converged: bool


def energy_objective(table: EnergyTable):
    def f(x: np.ndarray) -> float:
        return expectation(run_circuit(table, QaoaParams.from_vector(x)), table)

    return f


def minimize(table: EnergyTable, initial: QaoaParams, config: OptimizerConfig = OptimizerConfig()) -> OptResult:
    """Run COBYLA on ``params -> <H_C>`` starting from ``initial``.

    ``initial_step`` is the starting trust-region radius and
    ``convergence_tol`` the final one. The best point seen is returned, so the
    reported value never exceeds the objective at ``initial``. Hitting
    ``max_evals`` is reported through ``converged=False``.
    """
    objective = energy_objective(table)
    best_x = initial.to_vector()
    best_f = np.inf
    n_evals = 0

    def tracked(x):
        nonlocal best_x, best_f, n_evals
        n_evals += 1
        f = objective(x)
        if f < best_f:
            best_f, best_x = f, np.array(x, copy=True)
        return f

    res = _scipy_minimize(
        tracked,
        initial.to_vector(),
        method="COBYLA",
        options={
            "rhobeg": config.initial_step,
            "tol": config.convergence_tol,
            "maxiter": config.max_evals,
        },
    )
    params = QaoaParams.from_vector(best_x)
    # Recompute so that value is exactly the objective at params_opt.
    value = objective(best_x)
    converged = bool(res.success) and n_evals < config.max_evals
    return OptResult(params, value, n_evals, converged)


def sample_initial_params(p: int, rng: np.random.Generator) -> QaoaParams:
    """betas uniform in [0, pi), gammas uniform in [0, 2 pi)."""
    if p < 1:
        raise ValueError("p must be at least 1")
    betas = rng.uniform(0.0, np.pi, size=p)
    gammas = rng.uniform(0.0, 2 * np.pi, size=p)
    return QaoaParams(betas, gammas)


def alpha(value: float, ground: GroundInfo) -> float:
    """Approximation ratio <H_C> / E_C."""
    if ground.energy == 0:
        raise UndefinedRatioError("approximation ratio undefined for zero ground energy")
    if value < ground.energy - 1e-9:
        raise AssertionError(
            f"expectation {value!r} lies below the exact ground energy {ground.energy!r}"
        )
    return value / ground.energy

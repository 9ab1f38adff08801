"""
Corrected model-based subproblem and its multi-start solver
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .constants import LipexpConstants as constants

logger = logging.getLogger(constants.app_name)

FEASIBILITY_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Subproblem(object):
    """
    minimize objective(u) over the box subject to every fun(u) >= 0 in
    model_constraints and guard_constraints
    """
    objective: object
    gradient: object
    model_constraints: list
    guard_constraints: list = field(default_factory=list)

    @property
    def constraints(self):
        return list(self.model_constraints) + list(self.guard_constraints)

    def satisfied(self, u, tol=FEASIBILITY_TOL):
        return all(c['fun'](u) >= -tol for c in self.constraints)


@dataclass(frozen=True, eq=False)
class SubproblemResult(object):
    point: np.ndarray
    value: float
    solved: bool
    feasible_starts: int = 0


def corrected_problem(model, u_k, eps, lambda_g=None, lambda_phi=None,
                      numerical=(), numerical_backoff=None, guard=()):
    """
    Model cost plus first-order correction, model constraints plus zero- and
    first-order corrections, numerical constraints with their back-offs
    """
    u_k = np.asarray(u_k, dtype=float)
    n = u_k.shape[0]
    eps = np.asarray(eps, dtype=float)
    lambda_g = np.zeros((eps.shape[0], n)) if lambda_g is None else np.asarray(lambda_g)
    lambda_phi = np.zeros(n) if lambda_phi is None else np.asarray(lambda_phi)
    numerical_backoff = (np.zeros(len(numerical)) if numerical_backoff is None
                         else np.asarray(numerical_backoff, dtype=float))

    def objective(u):
        return model.cost.value(u) + lambda_phi.dot(u - u_k)

    def gradient(u):
        return model.cost.grad(u) + lambda_phi

    found = []
    for j, g_model in enumerate(model.constraints):
        found.append(_corrected_constraint(g_model, u_k, eps[j], lambda_g[j]))
    for h, backoff in zip(numerical, numerical_backoff):
        found.append(_corrected_constraint(h, u_k, backoff, np.zeros(n)))
    return Subproblem(objective, gradient, found, list(guard))


def _corrected_constraint(g_model, u_k, offset, slope):
    def fun(u):
        return -(g_model.value(u) + offset + slope.dot(u - u_k))

    def jac(u):
        return -(g_model.grad(u) + slope)
    return {'type': 'ineq', 'fun': fun, 'jac': jac}


def solve(problem, box, u_k, rng, n_starts=constants.n_starts,
          patience=constants.solver_patience):
    """
    SLSQP from u_k and n_starts uniform random starts; among feasible local
    optima the lowest objective wins, ties going to the one nearest u_k.
    Starts stop once patience more of them reproduce the best value.
    Without any feasible optimum the result stays at u_k.
    """
    u_k = np.asarray(u_k, dtype=float)
    starts = [u_k] + list(box.lower + box.widths * rng.random((n_starts, box.dimension)))
    bounds = list(zip(box.lower, box.upper))
    options = {'maxiter': constants.solver_maxiter, 'ftol': constants.solver_ftol}
    candidates = []
    best = np.inf
    repeats = 0
    for x0 in starts:
        try:
            result = minimize(problem.objective, x0, jac=problem.gradient, method='SLSQP',
                              bounds=bounds, constraints=problem.constraints, options=options)
        except (ValueError, ArithmeticError) as e:
            logger.debug("Subproblem start %s failed: %s", x0, e)
            continue
        x = box.clip(result.x)
        if not np.all(np.isfinite(x)) or not problem.satisfied(x):
            continue
        value = float(problem.objective(x))
        candidates.append((value, float(np.linalg.norm(x - u_k)), x))
        tol = FEASIBILITY_TOL * max(1.0, abs(best)) if np.isfinite(best) else 0.0
        if value < best - tol:
            best, repeats = value, 0
        elif value <= best + tol:
            best = min(best, value)
            repeats += 1
            if repeats >= patience:
                break
    if not candidates:
        logger.warning("Subproblem infeasible from all %d starts, holding at %s",
                       len(starts), u_k)
        return SubproblemResult(u_k.copy(), float(problem.objective(u_k)), False, 0)
    ties = [c for c in candidates if c[0] <= best + constants.abs_tol * max(1.0, abs(best))]
    value, _, point = min(ties, key=lambda c: c[1])
    return SubproblemResult(point, value, True, len(candidates))

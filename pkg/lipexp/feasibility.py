"""
Guard conditions certifying the next experiment and the perturbation ball
around it, in exact and noise-robust forms
"""
import logging
import itertools
from dataclasses import dataclass, replace

import numpy as np

from .constants import LipexpConstants as constants
from .exceptions import InfeasibleStart, LipschitzSpecError
from .lipschitz import (UPPER, anchored_at, increment_slopes, lumped_from_directional,
                        mixed_kappa, upper_increment)
from .utilities import as_point, check_finite

logger = logging.getLogger(constants.app_name)

GUARD_MODES = ('none', 'lumped', 'directional')


@dataclass(frozen=True, eq=False)
class GuardDecision(object):
    """
    Per-constraint guard slacks; a margin <= 0 passes (up to rounding)
    """
    feasible: bool
    margins: np.ndarray
    binding_constraint: int = None

    @property
    def margin(self):
        return float(np.max(self.margins)) if self.margins.size else -np.inf


@dataclass(frozen=True, eq=False)
class BackoffReport(object):
    per_constraint_backoff: np.ndarray
    satisfied: np.ndarray = None


def guard_view(spec, mode):
    """
    The part of spec a guard of the given mode may use
    """
    if mode == 'lumped':
        if spec.lumped is not None:
            return replace(spec, directional=None, curvature=None,
                           deriv_bounds=None, local=())
        return replace(spec, lumped=lumped_from_directional(spec), directional=None,
                       curvature=None, deriv_bounds=None, local=())
    if mode == 'directional':
        if not spec.all_directional():
            raise LipschitzSpecError("Directional guard needs directional constants")
        return replace(spec, lumped=None)
    raise ValueError("Unknown guard mode %r" % (mode,))


def _lumped_kappa(spec):
    if spec.lumped is not None:
        return spec.lumped.kappa
    return lumped_from_directional(spec).kappa


def _check_start(g_at_k, specs):
    g_at_k = np.atleast_1d(np.asarray(g_at_k, dtype=float))
    check_finite(g_at_k, 'constraint values')
    if g_at_k.shape[0] != len(specs):
        raise ValueError("Got %d constraint values for %d specs" % (g_at_k.shape[0], len(specs)))
    offending = np.flatnonzero(g_at_k > 0)
    if offending.size:
        j = int(offending[0])
        raise InfeasibleStart("Constraint %d is violated at the current point (g = %r)"
                              % (j, g_at_k[j]), constraint=j)
    return g_at_k


def guard_step(g_at_k, u_k, u_next, specs, backoff=None):
    """
    Check g_j(u_k) + increment_j(u_k -> u_next) [+ backoff_j] <= 0 for every
    constraint
    """
    g_at_k = _check_start(g_at_k, specs)
    u_k = as_point(u_k)
    u_next = as_point(u_next, u_k.shape[0])
    margins = np.array([g + upper_increment(u_k, u_next, anchored_at(spec, u_k))
                        for g, spec in zip(g_at_k, specs)], dtype=float)
    if backoff is not None:
        margins = margins + np.asarray(backoff, dtype=float)
    binding = int(np.argmax(margins)) if margins.size else None
    feasible = bool(np.all(margins <= constants.margin_tol))
    logger.debug("Guard margins %s feasible=%s", margins, feasible)
    return GuardDecision(feasible, margins, binding)


def robust_guard_step(g_upper_at_k, u_k, u_next, specs, backoff=None):
    """
    guard_step on upper bounding values instead of exact constraint values
    """
    return guard_step(g_upper_at_k, u_k, u_next, specs, backoff=backoff)


def max_safe_radius(g_at_k, specs):
    """
    Largest r such that every step of length <= r passes the lumped guard;
    +inf when no constraint limits the step
    """
    g_at_k = _check_start(g_at_k, specs)
    radius = np.inf
    for g, spec in zip(g_at_k, specs):
        kappa = _lumped_kappa(spec)
        if kappa > 0:
            radius = min(radius, -g / kappa)
    return float(radius)


def _directional_backoff(spec, delta_e, u_k):
    if u_k is None:
        spec = replace(spec, deriv_bounds=None)
        return delta_e * float(np.linalg.norm(mixed_kappa(spec, UPPER)))
    domain = spec.directional.domain if spec.directional is not None else spec.local[0].domain
    box = domain.around(u_k, delta_e)
    return delta_e * float(np.linalg.norm(mixed_kappa(spec, UPPER, box=box, at=u_k)))


def perturbation_backoff(specs, delta_e, g_at_k=None, u_k=None):
    """
    Back-off delta_e * kappa per constraint; with g_at_k supplied, satisfied_j
    means every point of the delta_e ball around u_k is feasible
    """
    delta_e = float(delta_e)
    if not np.isfinite(delta_e) or delta_e < 0:
        raise ValueError("delta_e must be a nonnegative number, got %r" % delta_e)
    if u_k is not None:
        u_k = as_point(u_k)
    backoff = []
    for spec in specs:
        found = []
        if spec.lumped is not None:
            found.append(delta_e * spec.lumped.kappa)
        if spec.all_directional():
            found.append(_directional_backoff(spec, delta_e, u_k))
        backoff.append(min(found))
    backoff = np.array(backoff, dtype=float)
    satisfied = None
    if g_at_k is not None:
        g_at_k = np.atleast_1d(np.asarray(g_at_k, dtype=float))
        satisfied = g_at_k + backoff <= 0
    logger.debug("Back-offs %s satisfied=%s", backoff, satisfied)
    return BackoffReport(backoff, satisfied)


def robust_perturbation_backoff(g_upper_at_k, specs, delta_e, u_k=None):
    return perturbation_backoff(specs, delta_e, g_at_k=g_upper_at_k, u_k=u_k)


def _ball_constraint(u_k, radius):
    signed = radius * abs(radius)

    def fun(u):
        d = u - u_k
        return signed - d.dot(d)

    def jac(u):
        return -2.0 * (u - u_k)
    return {'type': 'ineq', 'fun': fun, 'jac': jac}


def _constant_constraint(value, dimension):
    return {'type': 'ineq', 'fun': lambda u: value,
            'jac': lambda u: np.zeros(dimension)}


def _vertex_constraint(u_k, offset, slopes):
    def fun(u):
        return -(offset + slopes.dot(u - u_k))

    def jac(u):
        return -slopes
    return {'type': 'ineq', 'fun': fun, 'jac': jac}


def guard_constraints(g_at_k, u_k, specs, backoff=None, slack=0.0):
    """
    The guard as smooth inequalities (fun >= 0) for an NLP solver.
    A lumped spec gives the ball |u - u_k|^2 <= r^2; a directional spec gives
    the 2^n linear pieces whose maximum is the directional increment.
    """
    g_at_k = _check_start(g_at_k, specs)
    u_k = as_point(u_k)
    n = u_k.shape[0]
    backoff = np.zeros(len(specs)) if backoff is None else np.asarray(backoff, dtype=float)
    found = []
    for j, spec in enumerate(specs):
        offset = g_at_k[j] + backoff[j] + slack
        if spec.all_directional():
            spec = anchored_at(spec, u_k)
            domain = spec.directional.domain if spec.directional is not None else spec.local[0].domain
            lo, hi = increment_slopes(spec, u_k, domain, UPPER)
            for vertex in itertools.product(*zip(lo, hi)):
                found.append(_vertex_constraint(u_k, offset, np.array(vertex)))
            continue
        kappa = spec.lumped.kappa
        if kappa == 0:
            found.append(_constant_constraint(-offset, n))
        else:
            found.append(_ball_constraint(u_k, -offset / kappa))
    return found


def retract_step(g_at_k, u_k, u_next, specs, backoff=None, slack=constants.guard_shrink,
                 iterations=60):
    """
    Pull u_next back along the segment to u_k until every margin is <= -slack.
    Returns u_k when even the zero step fails.
    """
    u_k = as_point(u_k)
    u_next = as_point(u_next, u_k.shape[0])
    backoff = np.zeros(len(specs)) if backoff is None else np.asarray(backoff, dtype=float)

    def passes(t):
        decision = guard_step(g_at_k, u_k, u_k + t * (u_next - u_k), specs,
                              backoff=backoff + slack)
        return decision.feasible

    if passes(1.0):
        return u_next
    low, high = 0.0, 1.0
    for _ in range(iterations):
        mid = 0.5 * (low + high)
        if passes(mid):
            low = mid
        else:
            high = mid
    if low == 0.0 and not passes(0.0):
        return u_k.copy()
    logger.debug("Retracted guarded step to fraction %.6g", low)
    return u_k + low * (u_next - u_k)

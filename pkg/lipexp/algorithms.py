"""
Constraint adaptation, modifier adaptation and guarded steepest descent,
each runnable with or without Lipschitz guards, and the campaign loop that
drives them against a plant
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .constants import LipexpConstants as constants
from .estimation import consistency_repair
from .exceptions import ConfigError, InconsistentData, NonCompliantStart
from .feasibility import (GUARD_MODES, guard_constraints, guard_step, guard_view,
                          perturbation_backoff, retract_step)
from .plants import COST, run_experiment
from .subproblem import corrected_problem, solve
from .uncertainty import (MAIN_ITERATE, PROBE, nominal_bounds, refine_bounds,
                          trim_measurement)
from .utilities import as_point, spawn_streams

logger = logging.getLogger(constants.app_name)

ALGORITHMS = ('CA', 'MA', 'GD')
NOISE_MODES = ('off', 'on')


@dataclass(frozen=True)
class CampaignConfig(object):
    max_iterations: int = constants.max_iterations
    delta_e: float = constants.delta_e
    guard: str = 'lumped'
    noise: str = 'off'
    seed: int = 0
    alpha: float = constants.filter_gain
    trim: bool = False
    n_starts: int = constants.n_starts
    step_size: float = constants.descent_step
    refine_tol: float = constants.refine_tol
    max_passes: int = constants.max_passes
    inflation: float = constants.inflation

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.delta_e < 0:
            raise ValueError("delta_e must be nonnegative")
        if self.guard not in GUARD_MODES:
            raise ValueError("guard must be one of %s" % (GUARD_MODES,))
        if self.noise not in NOISE_MODES:
            raise ValueError("noise must be one of %s" % (NOISE_MODES,))
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")

    @property
    def guarded(self):
        return self.guard != 'none'


@dataclass(frozen=True, eq=False)
class ModifierState(object):
    """
    Filtered zero-order (eps) and first-order (lambda) model corrections
    """
    eps: np.ndarray
    lambda_g: np.ndarray
    lambda_phi: np.ndarray
    alpha: float = constants.filter_gain

    def __post_init__(self):
        eps = np.atleast_1d(np.asarray(self.eps, dtype=float))
        lambda_phi = np.asarray(self.lambda_phi, dtype=float)
        lambda_g = np.asarray(self.lambda_g, dtype=float).reshape(eps.shape[0],
                                                                   lambda_phi.shape[0])
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        object.__setattr__(self, 'eps', eps)
        object.__setattr__(self, 'lambda_g', lambda_g)
        object.__setattr__(self, 'lambda_phi', lambda_phi)

    @classmethod
    def initial(cls, n_constraints, dimension, alpha=constants.filter_gain):
        return cls(np.zeros(n_constraints), np.zeros((n_constraints, dimension)),
                   np.zeros(dimension), alpha)

    def filtered(self, eps, lambda_g=None, lambda_phi=None):
        """
        new = alpha * raw + (1 - alpha) * old for every corrector given
        """
        a = self.alpha
        lambda_g = self.lambda_g if lambda_g is None else \
            a * np.asarray(lambda_g, dtype=float) + (1 - a) * self.lambda_g
        lambda_phi = self.lambda_phi if lambda_phi is None else \
            a * np.asarray(lambda_phi, dtype=float) + (1 - a) * self.lambda_phi
        return ModifierState(a * np.asarray(eps, dtype=float) + (1 - a) * self.eps,
                             lambda_g, lambda_phi, a)


@dataclass(frozen=True, eq=False)
class ExperimentRecord(object):
    index: int
    tag: str
    point: np.ndarray
    cost_measured: float
    cost_true: float
    cost_lower: float
    cost_upper: float
    g_measured: np.ndarray
    g_true: np.ndarray
    guard_margins: np.ndarray
    g_lower: np.ndarray
    g_upper: np.ndarray

    @property
    def violations(self):
        return int(np.count_nonzero(self.g_true > 0))


@dataclass(eq=False)
class CampaignLog(object):
    plant_id: str
    algorithm: str
    config: CampaignConfig
    optimal_cost: float
    records: list = field(default_factory=list)
    variant: str = ''
    realization: int = 0
    stalls: int = 0
    step_backs: int = 0
    repairs: int = 0

    @property
    def iterates(self):
        return [r for r in self.records if r.tag == MAIN_ITERATE]

    @property
    def probes(self):
        return [r for r in self.records if r.tag == PROBE]

    @property
    def iterate_violations(self):
        return sum(r.violations for r in self.iterates)

    @property
    def probe_violations(self):
        return sum(r.violations for r in self.probes)

    @property
    def violations(self):
        return sum(r.violations for r in self.records)

    @property
    def final_cost_gap(self):
        return self.iterates[-1].cost_true - self.optimal_cost

    def step_norms(self):
        points = np.array([r.point for r in self.iterates])
        return np.linalg.norm(np.diff(points, axis=0), axis=1)

    def convergence_iteration(self, rel_tol=0.01):
        """
        First iterate index from which every true cost stays within rel_tol of
        the optimal cost; None when the campaign never settles
        """
        band = rel_tol * max(1.0, abs(self.optimal_cost))
        found = None
        for r in self.iterates:
            if abs(r.cost_true - self.optimal_cost) <= band:
                found = r.index if found is None else found
            else:
                found = None
        return found

    def summary(self):
        final = self.iterates[-1]
        return {
            'plant': self.plant_id,
            'algorithm': self.algorithm,
            'variant': self.variant,
            'iterations': len(self.iterates) - 1,
            'violations': {'iterates': self.iterate_violations,
                           'probes': self.probe_violations},
            'convergence_iteration': self.convergence_iteration(),
            'final_cost_gap': self.final_cost_gap,
            'final_point': final.point.tolist(),
            'stalls': self.stalls,
            'step_backs': self.step_backs,
            'repairs': self.repairs,
        }


@dataclass(frozen=True, eq=False)
class StepResult(object):
    point: np.ndarray
    state: object
    solved: bool
    margins: np.ndarray


def probe_points(u_k, delta_e, box):
    """
    One axial probe per dimension: backward by delta_e unless that leaves the
    box from below, then forward; clipped to the box
    """
    u_k = as_point(u_k, box.dimension)
    found = []
    for i in range(box.dimension):
        point = u_k.copy()
        step = delta_e if u_k[i] - delta_e < box.lower[i] else -delta_e
        point[i] += step
        found.append(box.clip(point))
    return found


def finite_difference_gradient(u_k, value_k, points, values):
    """
    Axial difference quotients (values - value_k) / step
    """
    u_k = np.asarray(u_k, dtype=float)
    grad = np.zeros(u_k.shape[0])
    for i, (point, value) in enumerate(zip(points, values)):
        step = point[i] - u_k[i]
        if step != 0:
            grad[i] = (value - value_k) / step
    return grad


def _model_constraints(model, u):
    return np.array([g.value(u) for g in model.constraints], dtype=float)


def _guarded(u_k, candidate, solved, g_guard, guard_specs, backoff=None):
    """
    Retract candidate until the guard certifies it; hold at u_k when the
    guard has nothing feasible to start from
    """
    if not guard_specs:
        return StepResult(candidate, None, solved, np.full(0, np.nan))
    g_guard = np.asarray(g_guard, dtype=float)
    backoff = np.zeros(len(guard_specs)) if backoff is None else backoff
    if np.any(g_guard > 0):
        logger.debug("Constraint bound at %s is positive, guard holds the point", u_k)
        return StepResult(u_k.copy(), None, False, g_guard + backoff)
    point = retract_step(g_guard, u_k, candidate, guard_specs, backoff=backoff)
    decision = guard_step(g_guard, u_k, point, guard_specs, backoff=backoff)
    logger.debug("Guarded step to %s, margins %s", point, decision.margins)
    return StepResult(point, None, solved, decision.margins)


def _guard_terms(u_k, g_guard, guard_specs, backoff=None):
    if not guard_specs or np.any(np.asarray(g_guard) > 0):
        return []
    return guard_constraints(g_guard, u_k, guard_specs, backoff=backoff,
                             slack=constants.guard_shrink)


def constraint_adaptation_step(eps_prev, u_k, g_measured, model, config, rng,
                               guard_specs=(), g_guard=None, box=None):
    """
    Filter the constraint bias, then minimize the model cost under the biased
    model constraints (and the Lipschitz guard when guard_specs are given)
    """
    u_k = as_point(u_k)
    box = model.cost.domain if box is None else box
    g_guard = g_measured if g_guard is None else g_guard
    error = np.asarray(g_measured, dtype=float) - _model_constraints(model, u_k)
    eps = config.alpha * error + (1 - config.alpha) * np.asarray(eps_prev, dtype=float)
    problem = corrected_problem(model, u_k, eps, numerical=model.numerical_constraints,
                                guard=_guard_terms(u_k, g_guard, guard_specs))
    result = solve(problem, box, u_k, rng, config.n_starts)
    step = _guarded(u_k, result.point, result.solved, g_guard, guard_specs)
    return StepResult(step.point, eps, step.solved, step.margins)


def modifier_adaptation_step(state, u_k, cost_k, g_k, cost_grad, g_jac, model, config, rng,
                             guard_specs=(), g_guard=None, numerical_specs=(), box=None):
    """
    Update zero- and first-order modifiers from measured values and gradients
    and solve the corrected problem; a guarded step also carries the
    delta_e back-off so the next round of probes stays feasible
    """
    u_k = as_point(u_k)
    box = model.cost.domain if box is None else box
    g_guard = g_k if g_guard is None else g_guard
    model_jac = np.array([g.grad(u_k) for g in model.constraints]).reshape(len(g_k), u_k.shape[0])
    state = state.filtered(np.asarray(g_k, dtype=float) - _model_constraints(model, u_k),
                           np.asarray(g_jac, dtype=float).reshape(model_jac.shape) - model_jac,
                           np.asarray(cost_grad, dtype=float) - model.cost.grad(u_k))
    backoff = None
    numerical_backoff = None
    if guard_specs:
        backoff = perturbation_backoff(guard_specs, config.delta_e,
                                       u_k=u_k).per_constraint_backoff
        if numerical_specs:
            numerical_backoff = perturbation_backoff(numerical_specs,
                                                     config.delta_e).per_constraint_backoff
    problem = corrected_problem(model, u_k, state.eps, state.lambda_g, state.lambda_phi,
                                numerical=model.numerical_constraints,
                                numerical_backoff=numerical_backoff,
                                guard=_guard_terms(u_k, g_guard, guard_specs, backoff))
    result = solve(problem, box, u_k, rng, config.n_starts)
    step = _guarded(u_k, result.point, result.solved, g_guard, guard_specs, backoff)
    return StepResult(step.point, state, step.solved, step.margins)


def descent_step(u_k, model, config, guard_specs=(), g_guard=None, box=None):
    """
    Fixed-length step along the negative model cost gradient, clipped to the
    box and retracted to the guard
    """
    u_k = as_point(u_k)
    box = model.cost.domain if box is None else box
    direction = -model.cost.grad(u_k)
    norm = np.linalg.norm(direction)
    candidate = u_k.copy() if norm == 0 else box.clip(u_k + config.step_size * direction / norm)
    return _guarded(u_k, candidate, True, g_guard, guard_specs)


class _History(object):
    """
    Every experiment of a campaign, per output, for refinement and trimming
    """

    def __init__(self, n_constraints):
        self.outputs = [[] for _ in range(n_constraints + 1)]

    def add(self, experiment):
        self.outputs[0].append(experiment.cost)
        for j, m in enumerate(experiment.constraints):
            self.outputs[j + 1].append(m)

    def intervals(self, specs, trim, config, log):
        """
        Per output, a list of (lower, upper, used value) for every experiment
        so far; refined and trimmed when trim is on. Inconsistent data triggers
        one repair of the offending spec and a retry.
        """
        found = []
        for o, measurements in enumerate(self.outputs):
            bounds = None
            if trim:
                bounds = self._refine(o, measurements, specs, config, log)
            if bounds is None:
                nominal = [nominal_bounds(m) for m in measurements]
                found.append([(b.lower, b.upper, m.value) for m, b in zip(measurements, nominal)])
            else:
                found.append([(b.lower, b.upper, trim_measurement(m, b))
                              for m, b in zip(measurements, bounds)])
        return found

    def _refine(self, o, measurements, specs, config, log):
        for attempt in range(2):
            try:
                return refine_bounds(measurements, specs[o], tol=config.refine_tol,
                                     max_passes=config.max_passes).bounds
            except InconsistentData as e:
                if attempt:
                    logger.warning("Refinement still inconsistent after repair, "
                                   "using nominal intervals")
                    return None
                report = consistency_repair(specs[o], measurements, config.inflation,
                                            noisy=True)
                specs[o] = report.repaired
                log.repairs += 1
                logger.warning("Inconsistent data at points %s: inflated constants of "
                               "output %d in %d step(s)", list(e.indices), o,
                               report.inflation_steps)


def run_campaign(plant, algorithm, config, model=None, specs=None, cost_spec=None,
                 variant='', streams=None):
    """
    Run one campaign of config.max_iterations steps from the plant's initial
    point. Noise and solver starts come from two streams spawned from
    config.seed, so equal seeds give identical campaigns. A positive guard
    bound at u_k sends the campaign back to the last iterate whose measured
    bound was non-positive.
    """
    if algorithm not in ALGORITHMS:
        raise ConfigError("Unknown algorithm %r; expected one of %s" % (algorithm, ALGORITHMS))
    model = plant.model if model is None else model
    noise_rng, solver_rng = streams if streams is not None else spawn_streams(config.seed, 2)
    sigma = plant.noise_sigma if config.noise == 'on' else 0.0
    n_g = len(plant.constraints)
    specs = ([plant.oracle_spec(j) for j in range(n_g)] if specs is None else list(specs))
    # output 0 is the cost, output j + 1 the constraint j
    all_specs = [plant.oracle_spec(COST) if cost_spec is None else cost_spec] + specs
    numerical_specs = [h.spec for h in plant.numerical_constraints]

    log = CampaignLog(plant.plant_id, algorithm, config, plant.optimal_cost, variant=variant)
    history = _History(n_g)
    state = ModifierState.initial(n_g, plant.dimension, config.alpha)
    eps = np.zeros(n_g)
    u_k = plant.initial_point.copy()
    # last iterate whose own measured bounds let the guard step
    anchor = u_k.copy()
    margins = np.full(n_g, np.nan)
    for k in range(config.max_iterations + 1):
        experiments = [run_experiment(plant, u_k, noise_rng, MAIN_ITERATE, k, sigma)]
        if algorithm == 'MA' and k < config.max_iterations:
            experiments += [run_experiment(plant, p, noise_rng, PROBE, k, sigma)
                            for p in probe_points(u_k, config.delta_e, plant.box)]
        for experiment in experiments:
            history.add(experiment)
        intervals = history.intervals(all_specs, config.trim, config, log)
        first = len(history.outputs[0]) - len(experiments)
        used = []
        for offset, experiment in enumerate(experiments):
            row = [intervals[o][first + offset] for o in range(n_g + 1)]
            used.append(row)
            _record(log, plant, experiment, row, margins if offset == 0 else None)
        if k == config.max_iterations:
            break

        guard_specs = [guard_view(s, config.guard) for s in all_specs[1:]] \
            if config.guarded else []
        g_k = np.array([used[0][j + 1][2] for j in range(n_g)], dtype=float)
        g_guard = (np.array([used[0][j + 1][1] for j in range(n_g)], dtype=float)
                   if sigma > 0 else g_k)
        if guard_specs:
            if algorithm == 'MA' and k == 0:
                _check_compliant(u_k, g_guard, guard_specs, config)
            if np.any(g_guard > 0):
                _step_back(log, u_k, anchor)
                u_k = anchor.copy()
                margins = np.full(n_g, np.nan)
                continue
            anchor = u_k.copy()

        if algorithm == 'CA':
            step = constraint_adaptation_step(eps, u_k, g_k, model, config, solver_rng,
                                              guard_specs, g_guard, plant.box)
            eps = step.state
        elif algorithm == 'MA':
            points = [e.cost.at for e in experiments[1:]]
            cost_grad = finite_difference_gradient(
                u_k, used[0][0][2], points, [row[0][2] for row in used[1:]])
            g_jac = np.array([finite_difference_gradient(
                u_k, used[0][j + 1][2], points, [row[j + 1][2] for row in used[1:]])
                for j in range(n_g)]).reshape(n_g, plant.dimension)
            step = modifier_adaptation_step(state, u_k, used[0][0][2], g_k, cost_grad, g_jac,
                                            model, config, solver_rng, guard_specs, g_guard,
                                            numerical_specs, plant.box)
            state = step.state
        else:
            step = descent_step(u_k, model, config, guard_specs, g_guard, plant.box)
        if not step.solved:
            log.stalls += 1
        u_k = step.point
        margins = step.margins if step.margins.size else np.full(n_g, np.nan)
    logger.debug("Campaign %s/%s%s finished with %d violations and %d step-backs",
                 plant.plant_id, algorithm, ' (%s)' % variant if variant else '',
                 log.violations, log.step_backs)
    return log


def _step_back(log, u_k, anchor):
    """
    Count a return to the anchor; only the first of a campaign is a warning
    """
    log.step_backs += 1
    report = logger.warning if log.step_backs == 1 else logger.debug
    report("Constraint bound at %s is positive, stepping back to %s", u_k, anchor)


def _check_compliant(u_0, g_guard, guard_specs, config):
    report = perturbation_backoff(guard_specs, config.delta_e, g_at_k=g_guard, u_k=u_0)
    if not np.all(report.satisfied):
        raise NonCompliantStart("Initial point %s does not satisfy the constraints with "
                                "back-off %s" % (u_0, report.per_constraint_backoff))


def _record(log, plant, experiment, row, margins):
    n_g = len(plant.constraints)
    point = experiment.cost.at
    log.records.append(ExperimentRecord(
        index=experiment.cost.index,
        tag=experiment.cost.tag,
        point=point,
        cost_measured=experiment.cost.value,
        cost_true=plant.true_cost(point),
        cost_lower=float(row[0][0]),
        cost_upper=float(row[0][1]),
        g_measured=np.array([m.value for m in experiment.constraints], dtype=float),
        g_true=plant.true_constraints(point),
        guard_margins=np.full(n_g, np.nan) if margins is None else np.asarray(margins),
        g_lower=np.array([row[j + 1][0] for j in range(n_g)], dtype=float),
        g_upper=np.array([row[j + 1][1] for j in range(n_g)], dtype=float)))


def average_cost_difference(log_a, log_b):
    """
    Mean over iterations of true cost of campaign a minus that of campaign b
    """
    a = np.array([r.cost_true for r in log_a.iterates])
    b = np.array([r.cost_true for r in log_b.iterates])
    if a.shape != b.shape:
        raise ValueError("Campaigns have %d and %d iterates" % (a.shape[0], b.shape[0]))
    return float(np.mean(a - b))

"""
Setting and repairing Lipschitz constants: physical presets, model-based
extrema over a parameter box, local data fits and the data-consistency
inflation loop
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.stats import t as student_t

from .constants import LipexpConstants as constants
from .exceptions import LipschitzSpecError, ModelError, SingularDesign
from .lipschitz import (BoxDomain, DerivativeBounds, DirectionalConstants,
                        LipschitzSpec, LumpedConstant)
from .uncertainty import increment_matrices, nominal_bounds
from .utilities import as_point, central_difference, search_points

logger = logging.getLogger(constants.app_name)

NONNEG = 'nonneg'
NONPOS = 'nonpos'
FREE = 'free'


class ParametricModel(object):
    """
    f(u, theta) with theta in param_box. Without an analytic gradient the
    gradient in u comes from central differences. When a domain is given the
    analytic gradient is checked against central differences on construction.
    """

    def __init__(self, evaluate, gradient=None, param_box=None, domain=None,
                 theta=None, name='model', seed=0):
        self.evaluate = evaluate
        self.gradient = gradient
        self.param_box = param_box if param_box is not None else BoxDomain([], [])
        self.domain = domain
        self.name = name
        if theta is None:
            theta = 0.5 * (self.param_box.lower + self.param_box.upper)
        self.theta = as_point(theta, self.param_box.dimension) if self.param_box.dimension \
            else np.zeros(0)
        if gradient is not None and domain is not None:
            self._check_gradient(seed)

    @property
    def dimension(self):
        return None if self.domain is None else self.domain.dimension

    def value(self, u, theta=None):
        theta = self.theta if theta is None else theta
        return float(self.evaluate(np.asarray(u, dtype=float), theta))

    def grad(self, u, theta=None):
        theta = self.theta if theta is None else theta
        u = np.asarray(u, dtype=float)
        if self.gradient is None:
            return central_difference(lambda x: self.evaluate(x, theta), u)
        return np.asarray(self.gradient(u, theta), dtype=float)

    def with_theta(self, theta):
        return ParametricModel(self.evaluate, self.gradient, self.param_box, self.domain,
                               theta=theta, name=self.name)

    def _check_gradient(self, seed):
        rng = np.random.default_rng(seed)
        lower = np.concatenate([self.domain.lower, self.param_box.lower])
        upper = np.concatenate([self.domain.upper, self.param_box.upper])
        n = self.domain.dimension
        for z in lower + (upper - lower) * rng.random((constants.gradient_check_samples,
                                                       lower.shape[0])):
            u, theta = z[:n], z[n:]
            analytic = self.grad(u, theta)
            numeric = central_difference(lambda x: self.evaluate(x, theta), u)
            scale = max(1.0, float(np.max(np.abs(numeric))))
            if not np.allclose(analytic, numeric, rtol=constants.gradient_check_rtol,
                               atol=constants.gradient_check_rtol * scale):
                raise ModelError("Gradient of %s disagrees with finite differences at u=%s: "
                                 "%s vs %s" % (self.name, u, analytic, numeric))


@dataclass(frozen=True)
class ConsistencyReport(object):
    initial: LipschitzSpec
    repaired: LipschitzSpec
    violations_found: int
    inflation_steps: int
    violating_pairs: list = field(default_factory=list)


class _JointSearch(object):
    """
    Multi-start search over the joint box domain x param_box
    """

    def __init__(self, model, domain, density, workers, seed):
        self.model = model
        self.n = domain.dimension
        self.lower = np.concatenate([domain.lower, model.param_box.lower])
        self.upper = np.concatenate([domain.upper, model.param_box.upper])
        self.bounds = list(zip(self.lower, self.upper))
        self.workers = max(1, int(workers))
        rng = np.random.default_rng(seed)
        self.starts = search_points(self.lower, self.upper, density, rng)
        logger.debug("Searching %s over %d grid points", model.name, len(self.starts))

    def split(self, z):
        return z[:self.n], z[self.n:]

    def grid_values(self, func):
        return np.array([func(*self.split(z)) for z in self.starts], dtype=float)

    def minimize(self, func, grid_values, polish):
        """
        Smallest value of func(u, theta): grid minimum polished by L-BFGS-B
        from the best polish grid points
        """
        order = np.argsort(grid_values)[:polish]

        def run(z0):
            result = minimize(lambda z: func(*self.split(z)), z0, method='L-BFGS-B',
                              bounds=self.bounds)
            return float(result.fun) if np.isfinite(result.fun) else np.inf

        starts = [self.starts[i] for i in order]
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                polished = list(executor.map(run, starts))
        else:
            polished = [run(z0) for z0 in starts]
        return min([float(np.min(grid_values))] + polished)


def estimate_directional_from_model(model, domain, padding=0.0,
                                    density=constants.grid_density,
                                    polish=constants.polish_starts,
                                    workers=constants.default_workers, seed=0):
    """
    Min and max of each partial derivative of the model over domain x param_box
    """
    search = _JointSearch(model, domain, density, workers, seed)
    gradients = np.array([model.grad(*search.split(z)) for z in search.starts])
    lower = np.empty(domain.dimension)
    upper = np.empty(domain.dimension)
    for i in range(domain.dimension):
        lower[i] = search.minimize(lambda u, th, i=i: model.grad(u, th)[i],
                                   gradients[:, i], polish)
        upper[i] = -search.minimize(lambda u, th, i=i: -model.grad(u, th)[i],
                                    -gradients[:, i], polish)
    logger.debug("Model directional constants for %s: %s %s", model.name, lower, upper)
    return DirectionalConstants(lower - padding, upper + padding, domain)


def estimate_lumped_from_model(model, domain, padding=0.0,
                               density=constants.grid_density,
                               polish=constants.polish_starts,
                               workers=constants.default_workers, seed=0):
    """
    Largest difference quotient of the model over pairs in domain and theta in
    param_box, taken as the larger of the gradient-norm search and the grid
    pair quotients
    """
    search = _JointSearch(model, domain, density, workers, seed)
    norms = search.grid_values(lambda u, th: -np.linalg.norm(model.grad(u, th)))
    kappa = -search.minimize(lambda u, th: -np.linalg.norm(model.grad(u, th)), norms, polish)

    points = search_points(domain.lower, domain.upper, density,
                           np.random.default_rng(seed), max_points=500)
    distances = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    usable = distances >= constants.min_pair_distance
    for theta in search_points(model.param_box.lower, model.param_box.upper,
                               min(density, 3), np.random.default_rng(seed), max_points=27):
        values = np.array([model.value(u, theta) for u in points])
        quotients = np.abs(values[None, :] - values[:, None])[usable] / distances[usable]
        if quotients.size:
            kappa = max(kappa, float(np.max(quotients)))
    logger.debug("Model lumped constant for %s: %g", model.name, kappa)
    return LumpedConstant(kappa + padding)


def _features(form, n):
    pairs = [(i, j) for i in range(n) for j in range(i, n)] if form == 'quadratic' else []
    if form not in ('linear', 'quadratic'):
        raise ValueError("Unknown model form %r" % (form,))

    def features(u):
        u = np.asarray(u, dtype=float)
        return np.concatenate([[1.0], u, [u[i] * u[j] for i, j in pairs]])

    def jacobian(u):
        u = np.asarray(u, dtype=float)
        rows = np.zeros((1 + n + len(pairs), n))
        rows[1:1 + n] = np.eye(n)
        for k, (i, j) in enumerate(pairs):
            rows[1 + n + k, i] += u[j]
            rows[1 + n + k, j] += u[i]
        return rows
    return features, jacobian


def fit_local_model(data, form='linear', confidence=constants.confidence):
    """
    Least-squares linear or quadratic model of the measured values; the
    parameter box is the coefficientwise confidence interval
    """
    data = list(data)
    if not data:
        raise SingularDesign("No measurements to fit")
    points = np.vstack([m.at for m in data])
    values = np.array([m.value for m in data])
    n = points.shape[1]
    features, jacobian = _features(form, n)
    design = np.vstack([features(u) for u in points])
    count, width = design.shape
    if count < width or np.linalg.matrix_rank(design) < width:
        raise SingularDesign("A %s fit in %d dimensions needs %d affinely independent "
                             "points, got %d measurements" % (form, n, width, count))
    coef = np.linalg.lstsq(design, values, rcond=None)[0]
    dof = count - width
    if dof > 0:
        residuals = values - design.dot(coef)
        variance = residuals.dot(residuals) / dof
        covariance = variance * np.linalg.inv(design.T.dot(design))
        half = student_t.ppf(0.5 + confidence / 2.0, dof) * np.sqrt(np.diag(covariance))
    else:
        logger.warning("Exactly determined %s fit: no residual variance, confidence box "
                       "has zero width", form)
        half = np.zeros(width)
    model = ParametricModel(
        lambda u, theta: float(features(u).dot(theta)),
        lambda u, theta: jacobian(u).T.dot(theta),
        param_box=BoxDomain(coef - half, coef + half),
        domain=BoxDomain.spanned(points), theta=coef, name='%s fit' % form)
    model.form = form
    model.coefficients = coef
    return model


def estimate_from_axial_data(data, domain, conservatism=1.5, confidence=constants.confidence):
    """
    Local directional constants from a centre point and its axial neighbours:
    the confidence box of a linear fit's gradient, widened by conservatism
    times its largest magnitude in each coordinate
    """
    if conservatism < 1:
        raise ValueError("conservatism must be at least 1, got %r" % conservatism)
    model = fit_local_model(data, 'linear', confidence)
    n = domain.dimension
    lower = model.param_box.lower[1:1 + n]
    upper = model.param_box.upper[1:1 + n]
    margin = (conservatism - 1.0) * np.maximum(np.abs(lower), np.abs(upper))
    return DirectionalConstants(lower - margin, upper + margin, domain)


def preset_from_physics(signs, magnitudes=None, domain=None, default_magnitude=None):
    """
    Directional constants from known derivative signs: nonneg gives
    [0, m], nonpos gives [-m, 0] and free gives [-m, m]
    """
    signs = list(signs)
    magnitudes = list(magnitudes) if magnitudes is not None else [None] * len(signs)
    if len(magnitudes) != len(signs):
        raise ValueError("Got %d magnitudes for %d signs" % (len(magnitudes), len(signs)))
    lower = np.empty(len(signs))
    upper = np.empty(len(signs))
    for i, (sign, magnitude) in enumerate(zip(signs, magnitudes)):
        magnitude = default_magnitude if magnitude is None else magnitude
        if magnitude is None:
            raise LipschitzSpecError("Dimension %d (%s) needs a magnitude for its open side"
                                     % (i, sign))
        if magnitude <= 0:
            raise LipschitzSpecError("Magnitude for dimension %d must be positive" % i)
        if sign == NONNEG:
            lower[i], upper[i] = 0.0, magnitude
        elif sign == NONPOS:
            lower[i], upper[i] = -magnitude, 0.0
        elif sign == FREE:
            lower[i], upper[i] = -magnitude, magnitude
        else:
            raise LipschitzSpecError("Unknown derivative sign %r" % (sign,))
    domain = domain if domain is not None else BoxDomain.unit(len(signs))
    return DirectionalConstants(lower, upper, domain)


def intersect_directional(first, second):
    """
    Constants valid under both sources of knowledge
    """
    lower = np.maximum(first.lower, second.lower)
    upper = np.minimum(first.upper, second.upper)
    if np.any(lower > upper):
        raise LipschitzSpecError("Directional constants do not overlap: %s %s" % (lower, upper))
    return DirectionalConstants(lower, upper, first.domain.intersect(second.domain))


def _pair_violations(spec, data, noisy):
    points = np.vstack([m.at for m in data])
    if noisy:
        intervals = [nominal_bounds(m) for m in data]
        low = np.array([b.lower for b in intervals])
        high = np.array([b.upper for b in intervals])
    else:
        low = high = np.array([m.value for m in data])
    rise, drop = increment_matrices(points, spec)
    distances = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    tol = constants.abs_tol
    # [k1, k2]: value at k2 judged from k1
    bad = ((low[None, :] > high[:, None] + rise + tol) |
           (high[None, :] < low[:, None] + drop - tol))
    bad &= distances >= constants.min_pair_distance
    return [(int(a), int(b)) for a, b in zip(*np.nonzero(bad))]


def check_consistency(spec, data, noisy=False):
    """
    Ordered pairs (k1, k2) whose values the spec cannot explain
    """
    data = list(data)
    if len(data) < 2:
        return []
    return _pair_violations(spec, data, noisy)


def _grow(value, inflation):
    return max(2.0 * value, value + inflation)


def _widen(lower, upper, inflation):
    step = np.maximum(np.maximum(np.abs(lower), np.abs(upper)), inflation)
    return lower - step, upper + step


def _inflate(spec, inflation):
    lumped = spec.lumped
    if lumped is not None:
        lumped = LumpedConstant(_grow(lumped.kappa, inflation))
    directional = spec.directional
    if directional is not None:
        directional = DirectionalConstants(*_widen(directional.lower, directional.upper,
                                                   inflation), domain=directional.domain)
    local = tuple(DirectionalConstants(*_widen(c.lower, c.upper, inflation), domain=c.domain)
                  for c in spec.local)
    bounds = spec.deriv_bounds
    if bounds is not None:
        bounds = DerivativeBounds(bounds.at, *_widen(bounds.lower, bounds.upper, inflation))
    return replace(spec, lumped=lumped, directional=directional, local=local,
                   deriv_bounds=bounds)


def consistency_repair(spec, data, inflation=constants.inflation, noisy=False,
                       max_steps=constants.max_passes):
    """
    Inflate spec until every ordered pair of data satisfies it. Lumped
    constants grow as kappa <- max(2 kappa, kappa + inflation); directional
    intervals and derivative bounds widen on both sides by the same rule.
    """
    if inflation <= 0:
        raise ValueError("inflation must be positive, got %r" % inflation)
    data = list(data)
    initial_pairs = check_consistency(spec, data, noisy)
    repaired = spec
    pairs = initial_pairs
    steps = 0
    while pairs and steps < max_steps:
        repaired = _inflate(repaired, inflation)
        steps += 1
        pairs = check_consistency(repaired, data, noisy)
        logger.debug("Repair step %d leaves %d violating pairs", steps, len(pairs))
    if pairs:
        logger.warning("Consistency repair stopped after %d steps with %d violating pairs",
                       steps, len(pairs))
    elif steps:
        logger.info("Inflated Lipschitz constants %d time(s) to explain %d violating pairs",
                    steps, len(initial_pairs))
    return ConsistencyReport(spec, repaired, len(initial_pairs), steps, initial_pairs)

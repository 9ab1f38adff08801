"""
Simulated experimental systems with analytic ground truth, Gaussian
measurement noise and deliberately mismatched models
"""
import logging
from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import LipexpConstants as constants
from .estimation import ParametricModel
from .exceptions import ConfigError, ModelError, OutsideDomain
from .lipschitz import (BoxDomain, CurvatureInfo, DerivativeBounds,
                        DirectionalConstants, LipschitzSpec, LumpedConstant)
from .uncertainty import MAIN_ITERATE, Measurement
from .utilities import as_point, grid_points

logger = logging.getLogger(constants.app_name)

COST = 'cost'


@dataclass(frozen=True, eq=False)
class ExperimentalFunction(object):
    """
    One plant output with its exact gradient and exact Lipschitz information
    """
    name: str
    value: object
    gradient: object
    spec: LipschitzSpec


@dataclass(frozen=True, eq=False)
class PlantModel(object):
    """
    Parametric models of every plant output sharing one parameter vector
    """
    cost: ParametricModel
    constraints: tuple
    numerical_constraints: tuple = ()

    @property
    def theta(self):
        return self.cost.theta

    @property
    def param_box(self):
        return self.cost.param_box


@dataclass(frozen=True)
class Experiment(object):
    """
    Measurements from one run of the plant at one point
    """
    cost: Measurement
    constraints: tuple


@dataclass(frozen=True, eq=False)
class Plant(object):
    plant_id: str
    description: str
    box: BoxDomain
    cost: ExperimentalFunction
    constraints: tuple
    optimum: np.ndarray
    optimal_cost: float
    initial_point: np.ndarray
    model: PlantModel
    numerical_constraints: tuple = ()
    noise_sigma: float = constants.noise_sigma
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'constraints', tuple(self.constraints))
        object.__setattr__(self, 'numerical_constraints', tuple(self.numerical_constraints))
        object.__setattr__(self, 'optimum', as_point(self.optimum, self.dimension))
        object.__setattr__(self, 'initial_point', as_point(self.initial_point, self.dimension))
        if self.validate:
            self.validate_oracle()

    @property
    def dimension(self):
        return self.box.dimension

    @property
    def outputs(self):
        return (self.cost,) + self.constraints

    def function(self, output):
        return self.cost if output == COST else self.constraints[output]

    def true_cost(self, u):
        return float(self.cost.value(np.asarray(u, dtype=float)))

    def true_constraints(self, u):
        u = np.asarray(u, dtype=float)
        return np.array([g.value(u) for g in self.constraints], dtype=float)

    def numerical_values(self, u):
        u = np.asarray(u, dtype=float)
        return np.array([h.value(u) for h in self.numerical_constraints], dtype=float)

    def oracle_spec(self, output, at=None):
        """
        Exact Lipschitz information for an output; with at given and curvature
        known, exact derivative bounds anchored at that point are attached
        """
        function = self.function(output)
        spec = function.spec
        if at is None or spec.curvature is None:
            return spec
        grad = np.asarray(function.gradient(as_point(at, self.dimension)), dtype=float)
        return replace(spec, deriv_bounds=DerivativeBounds(at, grad, grad))

    def validate_oracle(self, density=21, tol=constants.abs_tol):
        """
        Compare the oracle constants with difference quotients on a dense grid
        """
        points = grid_points(self.box.lower, self.box.upper, density)
        distances = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
        usable = distances > 0
        shape = (density,) * self.dimension
        steps = self.box.widths / (density - 1)
        for function in self.outputs + self.numerical_constraints:
            values = np.array([function.value(u) for u in points])
            spec = function.spec
            if spec.lumped is not None:
                quotients = np.abs(values[None, :] - values[:, None])[usable] / distances[usable]
                if quotients.max() > spec.lumped.kappa + tol:
                    raise ModelError("%s %s: lumped constant %g below observed quotient %g"
                                     % (self.plant_id, function.name, spec.lumped.kappa,
                                        quotients.max()))
            if spec.directional is None:
                continue
            grid = values.reshape(shape)
            for i in range(self.dimension):
                if steps[i] == 0:
                    continue
                axial = np.diff(grid, axis=i) / steps[i]
                if (axial.min() < spec.directional.lower[i] - tol or
                        axial.max() > spec.directional.upper[i] + tol):
                    raise ModelError("%s %s: quotients along dimension %d span [%g, %g] "
                                     "outside the directional constants"
                                     % (self.plant_id, function.name, i,
                                        axial.min(), axial.max()))
        logger.debug("Oracle constants of %s validated on a %d-point grid",
                     self.plant_id, len(points))


def measure(plant, u, rng, output=COST, tag=MAIN_ITERATE, index=0, sigma=None):
    """
    One noisy measurement of a plant output with +/- 3 sigma noise bounds
    """
    u = as_point(u, plant.dimension)
    if not plant.box.contains(u):
        raise OutsideDomain("%s cannot run an experiment at %s outside its box"
                            % (plant.plant_id, u))
    sigma = plant.noise_sigma if sigma is None else sigma
    noise = sigma * rng.standard_normal()
    bound = constants.noise_bound_multiplier * sigma
    value = plant.function(output).value(u) + noise
    return Measurement(u, value, -bound, bound, tag, index)


def run_experiment(plant, u, rng, tag=MAIN_ITERATE, index=0, sigma=None):
    """
    Cost and every constraint from one experiment; noise is drawn in the
    order cost, g_1, g_2, ...
    """
    cost = measure(plant, u, rng, COST, tag, index, sigma)
    constraints = tuple(measure(plant, u, rng, j, tag, index, sigma)
                        for j in range(len(plant.constraints)))
    return Experiment(cost, constraints)


def _spec(lower, upper, box, lumped=None, convex=None, concave=None):
    directional = DirectionalConstants(lower, upper, box)
    curvature = None
    if convex is not None or concave is not None:
        curvature = CurvatureInfo(convex or (), concave or (), box)
    if lumped is None:
        lumped = np.sqrt(np.sum(np.maximum(np.abs(directional.lower),
                                           np.abs(directional.upper)) ** 2))
    return LipschitzSpec(lumped=LumpedConstant(lumped), directional=directional,
                         curvature=curvature)


def _model(name, evaluate, gradient, box, param_box, theta):
    return ParametricModel(evaluate, gradient, param_box=param_box, domain=box,
                           theta=theta, name=name)


def _linear_plant():
    box = BoxDomain.unit(2)
    params = BoxDomain([0.6, 0.7, 0.9], [0.9, 1.0, 1.4])
    theta = [0.7, 0.9, 1.3]

    cost = ExperimentalFunction(
        'cost', lambda u: float((u[0] - 0.8) ** 2 + (u[1] - 0.8) ** 2),
        lambda u: 2.0 * (u - 0.8),
        _spec([-1.6, -1.6], [0.4, 0.4], box, lumped=1.6 * np.sqrt(2.0), convex=(0, 1)))
    g = ExperimentalFunction(
        'g1', lambda u: float(u[0] + u[1] - 1.0), lambda u: np.ones(2),
        _spec([1.0, 1.0], [1.0, 1.0], box, convex=(0, 1), concave=(0, 1)))
    model = PlantModel(
        _model('P-LIN cost model',
               lambda u, th: float((u[0] - th[0]) ** 2 + (u[1] - th[1]) ** 2),
               lambda u, th: 2.0 * (u - th[:2]), box, params, theta),
        (_model('P-LIN g1 model', lambda u, th: float(u[0] + u[1] - th[2]),
                lambda u, th: np.ones(2), box, params, theta),))
    return Plant('P-LIN', 'linear constraint u1 + u2 <= 1, quadratic cost', box, cost, (g,),
                 optimum=[0.5, 0.5], optimal_cost=0.18, initial_point=[0.1, 0.1], model=model)


def _quad_g(u, a=0.8, b=1.0):
    return float(a - b * u[0] - 1.2 * u[1] + 0.3 * u[0] ** 2 + 0.2 * u[1] ** 2)


def _quad_g_grad(u, b=1.0):
    return np.array([-b + 0.6 * u[0], -1.2 + 0.4 * u[1]])


def _quad_cost(u, c1=0.343, c2=0.348):
    return float(3.0 + (u[0] - c1) ** 2 + 1.5 * (u[1] - c2) ** 2)


def _quad_cost_grad(u, c1=0.343, c2=0.348):
    return np.array([2.0 * (u[0] - c1), 3.0 * (u[1] - c2)])


def _quadratic_plant():
    box = BoxDomain.unit(2)
    # (c1, c2, a, b): cost centre, constraint offset and u1 slope
    params = BoxDomain([0.3, 0.25, 0.65, 0.85], [0.45, 0.4, 0.9, 1.05])
    # optimistic: the model offset puts the plant optimum well inside the model's feasible set
    theta = [0.4, 0.3, 0.7, 0.9]

    # cost gradient at (0.4, 0.4) is 0.15 times minus the g1 gradient, so g1 is active there
    cost = ExperimentalFunction(
        'cost', _quad_cost, _quad_cost_grad,
        _spec([-0.686, -1.044], [1.314, 1.956], box, lumped=np.hypot(1.314, 1.956),
              convex=(0, 1)))
    g = ExperimentalFunction(
        'g1', _quad_g, _quad_g_grad,
        _spec([-1.0, -1.2], [-0.4, -0.8], box, lumped=np.sqrt(2.44), convex=(0, 1)))
    h = ExperimentalFunction(
        'h1', lambda u: float(u[0] - 0.95), lambda u: np.array([1.0, 0.0]),
        _spec([1.0, 0.0], [1.0, 0.0], box))
    model = PlantModel(
        _model('P-QUAD cost model', lambda u, th: _quad_cost(u, th[0], th[1]),
               lambda u, th: _quad_cost_grad(u, th[0], th[1]), box, params, theta),
        (_model('P-QUAD g1 model', lambda u, th: _quad_g(u, th[2], th[3]),
                lambda u, th: _quad_g_grad(u, th[3]), box, params, theta),),
        (_model('P-QUAD h1', lambda u, th: float(u[0] - 0.95),
                lambda u, th: np.array([1.0, 0.0]), box, params, theta),))
    # (52, 18) in [10, 80] x [5, 20]
    start = [(52.0 - 10.0) / 70.0, (18.0 - 5.0) / 15.0]
    return Plant('P-QUAD', 'quadratic constraint active at the optimum', box, cost, (g,),
                 optimum=[0.4, 0.4], optimal_cost=3.007305, initial_point=start, model=model,
                 numerical_constraints=(h,))


def _conv_g(u, c=0.2, d=0.6):
    return float((u[0] - c) ** 2 - 0.5 * u[1] ** 2 + 0.6 * u[1] - d)


def _conv_g_grad(u, c=0.2):
    return np.array([2.0 * (u[0] - c), 0.6 - u[1]])


def _convexity_plant():
    box = BoxDomain.unit(2)
    params = BoxDomain([0.4, 0.75, 0.15, 0.5], [0.55, 0.95, 0.3, 0.7])
    theta = [0.45, 0.8, 0.25, 0.55]

    cost = ExperimentalFunction(
        'cost', lambda u: float((u[0] - 0.5) ** 2 + (u[1] - 0.9) ** 2),
        lambda u: 2.0 * (u - np.array([0.5, 0.9])),
        _spec([-1.0, -1.8], [1.0, 0.2], box, lumped=np.sqrt(4.24), convex=(0, 1)))
    g = ExperimentalFunction(
        'g1', _conv_g, _conv_g_grad,
        _spec([-0.4, -0.4], [1.6, 0.6], box, lumped=np.sqrt(2.92), convex=(0,), concave=(1,)))
    model = PlantModel(
        _model('P-CONV cost model',
               lambda u, th: float((u[0] - th[0]) ** 2 + (u[1] - th[1]) ** 2),
               lambda u, th: 2.0 * (u - th[:2]), box, params, theta),
        (_model('P-CONV g1 model', lambda u, th: _conv_g(u, th[2], th[3]),
                lambda u, th: _conv_g_grad(u, th[2]), box, params, theta),))
    return Plant('P-CONV', 'constraint convex in u1 and concave in u2', box, cost, (g,),
                 optimum=[0.5, 0.9], optimal_cost=0.0, initial_point=[0.2, 0.2], model=model)


def _premature_plant():
    box = BoxDomain.unit(2)
    params = BoxDomain([0.9, 0.9, 0.45], [1.1, 1.1, 0.65])
    theta = [1.0, 1.0, 0.6]

    cost = ExperimentalFunction(
        'cost', lambda u: float(-u[0] - u[1]), lambda u: -np.ones(2),
        _spec([-1.0, -1.0], [-1.0, -1.0], box, convex=(0, 1), concave=(0, 1)))
    g = ExperimentalFunction(
        'g1', lambda u: float(u[0] - 0.5 - 0.25 * u[1]), lambda u: np.array([1.0, -0.25]),
        _spec([1.0, -0.25], [1.0, -0.25], box))
    model = PlantModel(
        _model('P-PREM cost model', lambda u, th: float(-th[0] * u[0] - th[1] * u[1]),
               lambda u, th: -np.asarray(th[:2], dtype=float), box, params, theta),
        (_model('P-PREM g1 model', lambda u, th: float(u[0] - th[2] - 0.25 * u[1]),
                lambda u, th: np.array([1.0, -0.25]), box, params, theta),))
    return Plant('P-PREM', 'guarded descent stalls on the constraint boundary', box, cost,
                 (g,), optimum=[0.75, 1.0], optimal_cost=-1.75, initial_point=[0.1, 0.1],
                 model=model)


_CATALOG = None


def builtin_plants():
    """
    Catalog of the built-in plants keyed by identifier
    """
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = OrderedDict((p.plant_id, p) for p in (
            _linear_plant(), _quadratic_plant(), _convexity_plant(), _premature_plant()))
    return OrderedDict(_CATALOG)


def get_plant(plant_id):
    catalog = builtin_plants()
    try:
        return catalog[plant_id]
    except KeyError:
        raise ConfigError("Unknown plant id %r; known plants: %s"
                          % (plant_id, ', '.join(catalog)))

"""
Noisy measurements, their high-probability intervals, and Lipschitz
tightening of those intervals across all visited points
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .constants import LipexpConstants as constants
from .exceptions import InconsistentData, LipschitzSpecError
from .lipschitz import anchored_at, lower_increment, upper_increment
from .utilities import as_point, check_finite

logger = logging.getLogger(constants.app_name)

MAIN_ITERATE = 'main_iterate'
PROBE = 'probe'
TAGS = (MAIN_ITERATE, PROBE)


@dataclass(frozen=True, eq=False)
class Measurement(object):
    """
    value = f(at) + w with noise_lower <= w <= noise_upper (in probability)
    """
    at: np.ndarray
    value: float
    noise_lower: float = 0.0
    noise_upper: float = 0.0
    tag: str = MAIN_ITERATE
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'at', as_point(self.at))
        for name in ('value', 'noise_lower', 'noise_upper'):
            object.__setattr__(self, name, float(check_finite(float(getattr(self, name)), name)))
        if self.noise_lower > self.noise_upper:
            raise ValueError("noise_lower %r exceeds noise_upper %r"
                             % (self.noise_lower, self.noise_upper))
        if self.tag not in TAGS:
            raise ValueError("Unknown measurement tag %r" % (self.tag,))

    def with_value(self, value):
        return Measurement(self.at, value, self.noise_lower, self.noise_upper,
                           self.tag, self.index)


@dataclass(frozen=True, eq=False)
class BoundedValue(object):
    at: np.ndarray
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("Interval lower %r exceeds upper %r" % (self.lower, self.upper))

    def contains(self, value, tol=0.0):
        return self.lower - tol <= value <= self.upper + tol


@dataclass(frozen=True)
class RefinementResult(object):
    bounds: list
    passes: int
    max_last_change: float
    hit_cap: bool = False
    nominal: list = field(default_factory=list)


def nominal_bounds(m):
    """
    [value - noise_upper, value - noise_lower]
    """
    return BoundedValue(m.at, m.value - m.noise_upper, m.value - m.noise_lower)


def increment_matrices(points, spec):
    """
    rise[k, l] and drop[k, l]: largest rise and drop of f from point k to point l
    """
    count = points.shape[0]
    rise = np.empty((count, count))
    drop = np.empty((count, count))
    for k, a in enumerate(points):
        local = anchored_at(spec, a)
        rise[k] = upper_increment(a, points, local)
        drop[k] = lower_increment(a, points, local)
    return rise, drop


def refine_bounds(measurements, spec, tol=constants.refine_tol, max_passes=constants.max_passes):
    """
    Propagate every interval through the Lipschitz increments until no bound
    moves by tol or more. Raises InconsistentData when an interval empties.
    """
    if tol <= 0:
        raise ValueError("Refinement tolerance must be positive, got %r" % tol)
    measurements = list(measurements)
    nominal = [nominal_bounds(m) for m in measurements]
    if not measurements:
        return RefinementResult([], 0, 0.0)
    if spec is None:
        raise LipschitzSpecError("Refinement needs a Lipschitz spec")
    points = np.vstack([m.at for m in measurements])
    lower = np.array([b.lower for b in nominal])
    upper = np.array([b.upper for b in nominal])
    rise, drop = increment_matrices(points, spec)

    passes = 0
    change = np.inf
    while passes < max_passes:
        new_lower = np.max(lower[:, None] + drop, axis=0)
        new_upper = np.min(upper[:, None] + rise, axis=0)
        change = float(max(np.max(np.abs(new_lower - lower)),
                           np.max(np.abs(new_upper - upper))))
        lower, upper = new_lower, new_upper
        passes += 1
        crossed = np.flatnonzero(lower > upper + constants.abs_tol)
        if crossed.size:
            raise InconsistentData("Refined bounds cross at %d point(s); the Lipschitz "
                                   "constants are too small for the data" % crossed.size,
                                   indices=crossed.tolist())
        if change < tol:
            break
    hit_cap = change >= tol
    if hit_cap:
        logger.warning("Refinement stopped at the pass cap (%d) with last change %g",
                       max_passes, change)
    logger.debug("Refinement of %d points took %d passes", len(measurements), passes)
    upper = np.maximum(upper, lower)
    bounds = [BoundedValue(m.at, float(lo), float(hi))
              for m, lo, hi in zip(measurements, lower, upper)]
    return RefinementResult(bounds, passes, change, hit_cap, nominal)


def trim_measurement(m, b):
    """
    Clamp a measured value into its refined interval
    """
    return float(np.clip(m.value, b.lower, b.upper))


def refine_campaign_bounds(outputs, specs, tol=constants.refine_tol,
                           max_passes=constants.max_passes):
    """
    Refine each measured output (cost, then each constraint) with its own spec
    """
    outputs = list(outputs)
    if len(outputs) != len(specs):
        raise ValueError("Got %d outputs for %d specs" % (len(outputs), len(specs)))
    return [refine_bounds(measurements, spec, tol=tol, max_passes=max_passes)
            for measurements, spec in zip(outputs, specs)]

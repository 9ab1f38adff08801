"""
Utility functions
"""
import os
import logging
import itertools

import numpy as np

from .constants import LipexpConstants as constants
from .exceptions import DimensionMismatch, NonFiniteInput

logger = logging.getLogger(constants.app_name)


def as_point(coords, dimension=None):
    """
    Validate a decision vector and return it as a 1-D float array
    """
    point = np.asarray(coords, dtype=float)
    if point.ndim != 1:
        raise DimensionMismatch("Point must be a vector, got shape %s" % (point.shape,))
    if dimension is not None and point.shape[0] != dimension:
        raise DimensionMismatch("Point has %d coordinates, expected %d"
                                % (point.shape[0], dimension))
    if not np.all(np.isfinite(point)):
        raise NonFiniteInput("Point has non-finite coordinates: %s" % point)
    return point


def as_points(coords, dimension):
    """
    Validate one point or a stack of points; returns (array of shape (m, n), single)
    """
    points = np.asarray(coords, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.ndim != 2 or points.shape[1] != dimension:
        raise DimensionMismatch("Points have shape %s, expected (m, %d)"
                                % (np.shape(coords), dimension))
    if not np.all(np.isfinite(points)):
        raise NonFiniteInput("Points have non-finite coordinates")
    return points, single


def check_finite(value, name):
    if not np.all(np.isfinite(value)):
        raise NonFiniteInput("%s is not finite: %s" % (name, value))
    return value


def grid_points(lower, upper, density):
    """
    Full tensor grid over a box, density points per dimension (one point
    along degenerate dimensions)
    """
    axes = [np.linspace(lo, hi, density if hi > lo else 1) for lo, hi in zip(lower, upper)]
    if not axes:
        return np.zeros((1, 0))
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, len(axes))


def search_points(lower, upper, density, rng, max_points=None):
    """
    Tensor grid when it is small enough, otherwise a seeded uniform sample
    of max_points
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    max_points = max_points or constants.max_grid_points
    if density ** int(np.count_nonzero(upper > lower)) <= max_points:
        return grid_points(lower, upper, density)
    logger.debug("Grid of %d^%d too large, sampling %d points",
                 density, len(lower), max_points)
    return lower + (upper - lower) * rng.random((max_points, len(lower)))


def spawn_streams(seed, count):
    """
    Independent generators for count consumers of one seed
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def central_difference(func, x0, h=None):
    """
    Gradient of a scalar function with central differences at a relative step
    """
    h = constants.central_difference_step if h is None else h
    x0 = np.asarray(x0, dtype=float)
    steps = h * np.maximum(1.0, np.abs(x0))
    grad = np.empty_like(x0)
    for i in range(x0.shape[0]):
        e = np.zeros_like(x0)
        e[i] = steps[i]
        grad[i] = (func(x0 + e) - func(x0 - e)) / (2.0 * steps[i])
    return grad


def write_data_to_file(data, filepath):
    '''
    Write data to file
    '''
    try:
        os.makedirs(os.path.dirname(filepath), 0o700)
    except OSError:
        pass

    with open(filepath, 'w', newline='') as _file:
        _file.write(data)


def realization_streams(seed, realization, count=2):
    """
    Generators owned by one realization of a batch; calling twice with the
    same arguments gives identical streams
    """
    root = np.random.SeedSequence(seed, spawn_key=(realization,))
    return [np.random.default_rng(child) for child in root.spawn(count)]

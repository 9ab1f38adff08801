"""
Lipschitz bounds: lumped, directional/local/convexity-aware, and the
mixed-constant reductions between them

Every bound accepts b as a single point or as an (m, n_u) stack of points and
answers with a scalar or an (m,) array accordingly. Distances are Euclidean.
Curvature index sets are 0-based.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import LipexpConstants as constants
from .exceptions import (DimensionMismatch, LipschitzSpecError,
                         NonFiniteInput, OutsideDomain)
from .utilities import as_point, as_points, check_finite

logger = logging.getLogger(constants.app_name)

UPPER = 'upper'
LOWER = 'lower'
SIDES = (UPPER, LOWER)


def _frozen(values):
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class BoxDomain(object):
    """
    Axis-aligned box {u : lower <= u <= upper}
    """
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _frozen(self.lower)
        upper = _frozen(self.upper)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise DimensionMismatch("Box bounds have shapes %s and %s"
                                    % (lower.shape, upper.shape))
        check_finite(lower, 'box lower')
        check_finite(upper, 'box upper')
        if np.any(lower > upper):
            raise LipschitzSpecError("Box lower exceeds upper: %s > %s" % (lower, upper))
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def unit(cls, dimension):
        return cls(np.zeros(dimension), np.ones(dimension))

    @classmethod
    def spanned(cls, *points):
        stacked = np.vstack([np.atleast_2d(p) for p in points])
        return cls(stacked.min(axis=0), stacked.max(axis=0))

    @property
    def dimension(self):
        return self.lower.shape[0]

    @property
    def widths(self):
        return self.upper - self.lower

    def contains(self, points, tol=constants.abs_tol):
        points = np.asarray(points, dtype=float)
        inside = np.all((points >= self.lower - tol) & (points <= self.upper + tol), axis=-1)
        return bool(inside) if inside.ndim == 0 else inside

    def contains_box(self, other, tol=constants.abs_tol):
        return (np.all(other.lower >= self.lower - tol) and
                np.all(other.upper <= self.upper + tol))

    def intersect(self, other):
        lower = np.maximum(self.lower, other.lower)
        upper = np.minimum(self.upper, other.upper)
        if np.any(lower > upper):
            raise OutsideDomain("Boxes do not intersect")
        return BoxDomain(lower, upper)

    def clip(self, points):
        return np.clip(points, self.lower, self.upper)

    def around(self, center, radius):
        """
        The box [center - radius, center + radius] clipped to this box
        """
        center = as_point(center, self.dimension)
        return BoxDomain(np.maximum(center - radius, self.lower),
                         np.minimum(center + radius, self.upper))

    def as_dict(self):
        return {'lower': self.lower.tolist(), 'upper': self.upper.tolist()}


@dataclass(frozen=True)
class LumpedConstant(object):
    kappa: float

    def __post_init__(self):
        kappa = float(self.kappa)
        if not np.isfinite(kappa):
            raise NonFiniteInput("Lumped constant is not finite: %s" % kappa)
        if kappa < 0:
            raise LipschitzSpecError("Lumped constant is negative: %s" % kappa)
        object.__setattr__(self, 'kappa', kappa)


@dataclass(frozen=True, eq=False)
class DirectionalConstants(object):
    """
    lower_i <= df/du_i <= upper_i over domain
    """
    lower: np.ndarray
    upper: np.ndarray
    domain: BoxDomain

    def __post_init__(self):
        lower = _frozen(self.lower)
        upper = _frozen(self.upper)
        if lower.shape != upper.shape or lower.shape != (self.domain.dimension,):
            raise DimensionMismatch("Directional constants do not match the domain dimension")
        check_finite(lower, 'directional lower')
        check_finite(upper, 'directional upper')
        if np.any(lower > upper):
            raise LipschitzSpecError("Directional lower exceeds upper: %s > %s" % (lower, upper))
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @property
    def dimension(self):
        return self.domain.dimension

    @property
    def spread(self):
        return float(np.sum(self.upper - self.lower))

    def as_dict(self):
        return {'lower': self.lower.tolist(), 'upper': self.upper.tolist(),
                'domain': self.domain.as_dict()}


@dataclass(frozen=True, eq=False)
class CurvatureInfo(object):
    """
    Coordinates in which f is convex / concave over domain; a coordinate may
    be in both (affine in that coordinate)
    """
    convex_dims: frozenset
    concave_dims: frozenset
    domain: BoxDomain

    def __post_init__(self):
        convex = frozenset(int(i) for i in self.convex_dims)
        concave = frozenset(int(i) for i in self.concave_dims)
        for i in convex | concave:
            if not 0 <= i < self.domain.dimension:
                raise LipschitzSpecError("Curvature index %d outside [0, %d)"
                                         % (i, self.domain.dimension))
        object.__setattr__(self, 'convex_dims', convex)
        object.__setattr__(self, 'concave_dims', concave)

    def dims(self, side):
        return self.concave_dims if side == UPPER else self.convex_dims

    def as_dict(self):
        return {'convex_dims': sorted(self.convex_dims),
                'concave_dims': sorted(self.concave_dims),
                'domain': self.domain.as_dict()}


@dataclass(frozen=True, eq=False)
class DerivativeBounds(object):
    """
    lower_i <= df/du_i (at) <= upper_i
    """
    at: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        at = _frozen(as_point(self.at))
        lower = _frozen(self.lower)
        upper = _frozen(self.upper)
        if lower.shape != at.shape or upper.shape != at.shape:
            raise DimensionMismatch("Derivative bounds do not match their anchor point")
        check_finite(lower, 'derivative lower')
        check_finite(upper, 'derivative upper')
        if np.any(lower > upper):
            raise LipschitzSpecError("Derivative lower exceeds upper: %s > %s" % (lower, upper))
        object.__setattr__(self, 'at', at)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    def anchored_at(self, point):
        return np.allclose(self.at, point, rtol=0.0, atol=constants.abs_tol)

    def as_dict(self):
        return {'at': self.at.tolist(), 'lower': self.lower.tolist(),
                'upper': self.upper.tolist()}


@dataclass(frozen=True, eq=False)
class LipschitzSpec(object):
    """
    Everything known about the sensitivity of one experimental function.
    `local` holds extra directional constants valid on sub-boxes.
    """
    lumped: LumpedConstant = None
    directional: DirectionalConstants = None
    curvature: CurvatureInfo = None
    deriv_bounds: DerivativeBounds = None
    local: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, 'local', tuple(self.local))
        if self.lumped is None and self.directional is None and not self.local:
            raise LipschitzSpecError("A Lipschitz spec needs lumped or directional constants")
        if self.deriv_bounds is not None and (self.curvature is None or
                                              self.directional is None):
            raise LipschitzSpecError("Derivative bounds need curvature and directional constants")
        dims = set(c.dimension for c in self.all_directional())
        if self.curvature is not None:
            dims.add(self.curvature.domain.dimension)
        if self.deriv_bounds is not None:
            dims.add(self.deriv_bounds.at.shape[0])
        if len(dims) > 1:
            raise DimensionMismatch("Lipschitz spec mixes dimensions %s" % sorted(dims))
        if (self.deriv_bounds is not None and
                self.directional.domain.contains(self.deriv_bounds.at)):
            tol = constants.abs_tol
            if (np.any(self.deriv_bounds.lower < self.directional.lower - tol) or
                    np.any(self.deriv_bounds.upper > self.directional.upper + tol)):
                raise LipschitzSpecError("Derivative bounds fall outside the directional constants")

    @property
    def dimension(self):
        constants_ = self.all_directional()
        return constants_[0].dimension if constants_ else None

    def all_directional(self):
        found = [self.directional] if self.directional is not None else []
        return found + list(self.local)


def _as_kappa(kappa):
    if isinstance(kappa, LumpedConstant):
        return kappa.kappa
    if isinstance(kappa, LipschitzSpec):
        if kappa.lumped is None:
            raise LipschitzSpecError("Spec has no lumped constant")
        return kappa.lumped.kappa
    return LumpedConstant(kappa).kappa


def _check_side(side):
    if side not in SIDES:
        raise ValueError("side must be one of %s, got %r" % (SIDES, side))


def _pair(a, b):
    a = as_point(a)
    points, single = as_points(b, a.shape[0])
    return a, points, single


def _result(values, single):
    return float(values[0]) if single else values


def lumped_bounds(f_at_a, a, b, kappa):
    """
    (f(a) - kappa |b - a|, f(a) + kappa |b - a|)
    """
    f_at_a = float(check_finite(f_at_a, 'f_at_a'))
    a, points, single = _pair(a, b)
    radius = _as_kappa(kappa) * np.linalg.norm(points - a, axis=1)
    return _result(f_at_a - radius, single), _result(f_at_a + radius, single)


def select_directional(spec, a, b):
    """
    Tightest directional constants whose domain holds the box spanned by a and b
    """
    candidates = spec.all_directional()
    if not candidates:
        raise LipschitzSpecError("Spec has no directional constants")
    span = BoxDomain.spanned(a, b)
    holding = [c for c in candidates if c.domain.contains_box(span)]
    if not holding:
        raise OutsideDomain("No directional constants cover the box %s - %s"
                            % (span.lower, span.upper))
    return min(holding, key=lambda c: c.spread)


def increment_slopes(spec, a, box, side, strict=False):
    """
    Per-coordinate slope pairs (lo, hi) such that the bound increment from a
    to any b in box is sum(max(lo*d, hi*d)) on the upper side and
    sum(min(lo*d, hi*d)) on the lower side, d = b - a.
    Curvature coordinates use the derivative bounds anchored at a; without
    them they fall back to the directional constants.
    """
    _check_side(side)
    chosen = select_directional(spec, box.lower, box.upper)
    lo = np.array(chosen.lower)
    hi = np.array(chosen.upper)
    curvature = spec.curvature
    if curvature is None or not curvature.dims(side):
        return lo, hi
    if not curvature.domain.contains_box(box):
        logger.debug("Curvature domain does not hold the step box, using directional constants")
        return lo, hi
    bounds = spec.deriv_bounds
    if bounds is None:
        logger.debug("No derivative bounds for curvature coordinates, using directional constants")
        return lo, hi
    if not bounds.anchored_at(a):
        if strict:
            raise LipschitzSpecError("Derivative bounds are anchored at %s, not at %s"
                                     % (bounds.at, a))
        return lo, hi
    dims = sorted(curvature.dims(side))
    lo[dims] = bounds.lower[dims]
    hi[dims] = bounds.upper[dims]
    return lo, hi


def _directional_increment(a, points, spec, side, strict):
    box = BoxDomain.spanned(a, points)
    lo, hi = increment_slopes(spec, a, box, side, strict=strict)
    delta = points - a
    if side == UPPER:
        return np.maximum(lo * delta, hi * delta).sum(axis=1)
    return np.minimum(lo * delta, hi * delta).sum(axis=1)


def directional_upper_bound(f_at_a, a, b, spec):
    """
    Upper bound on f(b) from f(a) using directional constants, concavity and
    derivative bounds
    """
    f_at_a = float(check_finite(f_at_a, 'f_at_a'))
    a, points, single = _pair(a, b)
    return _result(f_at_a + _directional_increment(a, points, spec, UPPER, True), single)


def directional_lower_bound(f_at_a, a, b, spec):
    """
    Lower bound on f(b) from f(a) using directional constants, convexity and
    derivative bounds
    """
    f_at_a = float(check_finite(f_at_a, 'f_at_a'))
    a, points, single = _pair(a, b)
    return _result(f_at_a + _directional_increment(a, points, spec, LOWER, True), single)


def upper_increment(a, b, spec):
    """
    Largest possible rise of f from a to b that spec allows; the tighter of
    the lumped and directional forms when both are known
    """
    a, points, single = _pair(a, b)
    return _result(_increment(a, points, spec, UPPER), single)


def lower_increment(a, b, spec):
    """
    Largest possible drop of f from a to b (a nonpositive number)
    """
    a, points, single = _pair(a, b)
    return _result(_increment(a, points, spec, LOWER), single)


def _increment(a, points, spec, side):
    found = []
    if spec.lumped is not None:
        radius = spec.lumped.kappa * np.linalg.norm(points - a, axis=1)
        found.append(radius if side == UPPER else -radius)
    if spec.all_directional():
        try:
            found.append(_directional_increment(a, points, spec, side, False))
        except OutsideDomain:
            if not found:
                raise
            logger.debug("Step leaves the directional domain, using the lumped constant")
    if len(found) == 1:
        return found[0]
    return np.minimum(*found) if side == UPPER else np.maximum(*found)


def anchored_at(spec, point):
    """
    Same spec without derivative bounds unless they are anchored at point
    """
    if spec.deriv_bounds is None or spec.deriv_bounds.anchored_at(point):
        return spec
    return replace(spec, deriv_bounds=None)


def mixed_kappa(spec, side, box=None, at=None):
    """
    Mixed vector of greatest absolute constants: derivative-bound magnitudes on
    curvature coordinates of the side, directional magnitudes elsewhere
    """
    _check_side(side)
    if not spec.all_directional():
        raise LipschitzSpecError("mixed_kappa needs directional constants")
    if box is None:
        box = spec.directional.domain if spec.directional is not None else spec.local[0].domain
    if at is None:
        at = spec.deriv_bounds.at if spec.deriv_bounds is not None else box.lower
    lo, hi = increment_slopes(spec, as_point(at, box.dimension), box, side)
    return np.maximum(np.abs(lo), np.abs(hi))


def lumped_from_directional(spec):
    """
    A valid lumped constant: the larger norm of the two mixed vectors
    """
    kappa = max(np.linalg.norm(mixed_kappa(spec, UPPER)),
                np.linalg.norm(mixed_kappa(spec, LOWER)))
    return LumpedConstant(float(kappa))


def is_directional_tighter(spec, kappa, side):
    """
    Sufficient condition for the directional bound on side to be at least as
    tight as the lumped bound with kappa
    """
    return bool(np.linalg.norm(mixed_kappa(spec, side)) <= _as_kappa(kappa))


def scale_spec(spec, factor):
    """
    Every constant multiplied by factor; derivative bounds are kept
    """
    if factor <= 0:
        raise LipschitzSpecError("Scale factor must be positive, got %r" % factor)
    if factor == 1:
        return spec

    def scaled(c):
        return DirectionalConstants(c.lower * factor, c.upper * factor, c.domain)
    return replace(spec,
                   lumped=None if spec.lumped is None else LumpedConstant(spec.lumped.kappa * factor),
                   directional=None if spec.directional is None else scaled(spec.directional),
                   deriv_bounds=None,
                   local=tuple(scaled(c) for c in spec.local))


def spec_as_dict(spec):
    """
    JSON-ready form of a LipschitzSpec
    """
    return {
        'lumped': None if spec.lumped is None else spec.lumped.kappa,
        'directional': None if spec.directional is None else spec.directional.as_dict(),
        'curvature': None if spec.curvature is None else spec.curvature.as_dict(),
        'deriv_bounds': None if spec.deriv_bounds is None else spec.deriv_bounds.as_dict(),
        'local': [c.as_dict() for c in spec.local],
    }


def _box_from(data):
    return BoxDomain(data['lower'], data['upper'])


def _directional_from(data):
    return DirectionalConstants(data['lower'], data['upper'], _box_from(data['domain']))


def spec_from_dict(data):
    """
    Inverse of spec_as_dict
    """
    curvature = data.get('curvature')
    bounds = data.get('deriv_bounds')
    return LipschitzSpec(
        lumped=None if data.get('lumped') is None else LumpedConstant(data['lumped']),
        directional=(None if data.get('directional') is None
                     else _directional_from(data['directional'])),
        curvature=(None if curvature is None else
                   CurvatureInfo(curvature['convex_dims'], curvature['concave_dims'],
                                 _box_from(curvature['domain']))),
        deriv_bounds=(None if bounds is None else
                      DerivativeBounds(bounds['at'], bounds['lower'], bounds['upper'])),
        local=tuple(_directional_from(c) for c in data.get('local', ())))

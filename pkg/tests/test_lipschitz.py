import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lipexp.exceptions import (DimensionMismatch, LipschitzSpecError,
                               NonFiniteInput, OutsideDomain)
from lipexp.lipschitz import (LOWER, UPPER, BoxDomain, CurvatureInfo, DerivativeBounds,
                              DirectionalConstants, LipschitzSpec, LumpedConstant,
                              anchored_at, directional_lower_bound, directional_upper_bound,
                              is_directional_tighter, lower_increment, lumped_bounds,
                              lumped_from_directional, mixed_kappa, scale_spec,
                              spec_as_dict, spec_from_dict, upper_increment)
from lipexp.plants import get_plant
from lipexp.utilities import grid_points

UNIT1 = BoxDomain.unit(1)
UNIT2 = BoxDomain.unit(2)
unit = st.floats(min_value=0.0, max_value=1.0)


def directional(lower, upper, box=None):
    box = box if box is not None else BoxDomain.unit(len(lower))
    return LipschitzSpec(directional=DirectionalConstants(lower, upper, box))


def test_lumped_bounds_zero_distance():
    assert lumped_bounds(0.0, [0.0, 0.0], [0.0, 0.0], LumpedConstant(3.0)) == (0.0, 0.0)


def test_lumped_bounds_unit_step():
    lower, upper = lumped_bounds(1.0, [0.0], [1.0], LumpedConstant(3.0))
    assert lower == pytest.approx(-2.0)
    assert upper == pytest.approx(4.0)


def test_lumped_bounds_accept_point_stacks():
    lower, upper = lumped_bounds(0.0, [0.0, 0.0], [[1.0, 0.0], [0.0, 2.0], [3.0, 4.0]], 1.0)
    np.testing.assert_allclose(upper, [1.0, 2.0, 5.0])
    np.testing.assert_allclose(lower, [-1.0, -2.0, -5.0])


def test_lumped_bounds_reject_bad_input():
    with pytest.raises(DimensionMismatch):
        lumped_bounds(0.0, [0.0, 0.0], [1.0], 1.0)
    with pytest.raises(NonFiniteInput):
        lumped_bounds(np.nan, [0.0], [1.0], 1.0)
    with pytest.raises(NonFiniteInput):
        lumped_bounds(0.0, [0.0], [np.inf], 1.0)
    with pytest.raises(LipschitzSpecError):
        LumpedConstant(-1.0)


def test_lumped_bounds_hold_for_linear_plant():
    plant = get_plant('P-LIN')
    g = plant.constraints[0]
    points = grid_points(plant.box.lower, plant.box.upper, 21)
    values = np.array([g.value(u) for u in points])
    kappa = plant.oracle_spec(0).lumped
    for a, f_a in zip(points, values):
        lower, upper = lumped_bounds(f_a, a, points, kappa)
        assert np.all(lower <= values + 1e-9)
        assert np.all(values <= upper + 1e-9)


def test_directional_bounds_at_anchor():
    spec = directional([-1.0, 0.0], [2.0, 1.0])
    a = [0.3, 0.6]
    assert directional_upper_bound(0.7, a, a, spec) == pytest.approx(0.7)
    assert directional_lower_bound(0.7, a, a, spec) == pytest.approx(0.7)


def test_directional_upper_uses_sign_of_step():
    spec = directional([0.0], [1.0])
    # a nondecreasing function cannot rise when u decreases
    assert directional_upper_bound(0.0, [0.5], [0.0], spec) == pytest.approx(0.0)


def test_directional_lower_uses_sign_of_step():
    spec = directional([-1.0], [0.0])
    assert directional_lower_bound(0.0, [0.25], [0.75], spec) == pytest.approx(-0.5)


def _curved_spec(a, side):
    # f = -u^2 is concave, f = u^2 convex; exact derivative bounds at a
    if side == UPPER:
        grad = -2.0 * a
        return LipschitzSpec(
            directional=DirectionalConstants([-2.0], [0.0], UNIT1),
            curvature=CurvatureInfo((), (0,), UNIT1),
            deriv_bounds=DerivativeBounds(a, grad, grad))
    grad = 2.0 * a
    return LipschitzSpec(
        directional=DirectionalConstants([0.0], [2.0], UNIT1),
        curvature=CurvatureInfo((0,), (), UNIT1),
        deriv_bounds=DerivativeBounds(a, grad, grad))


def test_concave_upper_bound_holds_and_beats_lumped():
    points = np.linspace(0.0, 1.0, 41).reshape(-1, 1)
    values = -points[:, 0] ** 2
    tighter = 0
    for a, f_a in zip(points, values):
        upper = directional_upper_bound(f_a, a, points, _curved_spec(a, UPPER))
        assert np.all(values <= upper + 1e-9)
        lumped = lumped_bounds(f_a, a, points, 2.0)[1]
        assert np.all(upper <= lumped + 1e-9)
        tighter += int(np.count_nonzero(upper < lumped - 1e-9))
    assert tighter > 0


def test_convex_lower_bound_holds():
    points = np.linspace(0.0, 1.0, 41).reshape(-1, 1)
    values = points[:, 0] ** 2
    for a, f_a in zip(points, values):
        lower = directional_lower_bound(f_a, a, points, _curved_spec(a, LOWER))
        assert np.all(lower <= values + 1e-9)


def test_convexity_plant_bounds_hold_on_grid():
    plant = get_plant('P-CONV')
    g = plant.constraints[0]
    points = grid_points(plant.box.lower, plant.box.upper, 41)
    values = np.array([g.value(u) for u in points])
    kappa = plant.oracle_spec(0).lumped
    tighter = 0
    for a, f_a in zip(points, values):
        spec = plant.oracle_spec(0, at=a)
        upper = directional_upper_bound(f_a, a, points, spec)
        lower = directional_lower_bound(f_a, a, points, spec)
        if np.any(values > upper + 1e-9) or np.any(values < lower - 1e-9):
            pytest.fail("Directional bounds from %s do not contain the constraint" % a)
        assert np.linalg.norm(mixed_kappa(spec, UPPER)) <= kappa.kappa + 1e-12
        lumped_upper = lumped_bounds(f_a, a, points, kappa)[1]
        tighter += int(np.count_nonzero(upper < lumped_upper - 1e-12))
    assert tighter >= 0.1 * len(points) ** 2


def test_derivative_bounds_must_match_anchor():
    spec = _curved_spec(np.array([0.5]), UPPER)
    with pytest.raises(LipschitzSpecError):
        directional_upper_bound(0.0, [0.2], [0.4], spec)
    # the combined increments quietly drop them instead
    assert upper_increment([0.2], [0.4], spec) == pytest.approx(0.0)


def test_curvature_without_derivative_bounds_falls_back():
    plain = directional([-0.4, -0.4], [1.6, 0.6])
    curved = LipschitzSpec(directional=plain.directional,
                           curvature=CurvatureInfo((0,), (1,), UNIT2))
    a = [0.3, 0.3]
    b = [[0.9, 0.1], [0.0, 1.0], [0.5, 0.5]]
    np.testing.assert_allclose(directional_upper_bound(0.0, a, b, curved),
                               directional_upper_bound(0.0, a, b, plain))


def test_spec_validation():
    with pytest.raises(LipschitzSpecError):
        LipschitzSpec()
    with pytest.raises(LipschitzSpecError):
        LipschitzSpec(lumped=LumpedConstant(1.0),
                      deriv_bounds=DerivativeBounds([0.5], [0.0], [0.0]))
    with pytest.raises(LipschitzSpecError):
        LipschitzSpec(directional=DirectionalConstants([-1.0], [1.0], UNIT1),
                      curvature=CurvatureInfo((0,), (), UNIT1),
                      deriv_bounds=DerivativeBounds([0.5], [0.0], [3.0]))
    with pytest.raises(DimensionMismatch):
        LipschitzSpec(directional=DirectionalConstants([-1.0], [1.0], UNIT1),
                      curvature=CurvatureInfo((0,), (), UNIT2))
    with pytest.raises(LipschitzSpecError):
        DirectionalConstants([1.0], [0.0], UNIT1)
    with pytest.raises(LipschitzSpecError):
        BoxDomain([1.0], [0.0])
    with pytest.raises(LipschitzSpecError):
        CurvatureInfo((2,), (), UNIT2)


def test_mixed_kappa_takes_absolute_maximum():
    spec = directional([0.0, -1.0], [1.0, 0.0])
    np.testing.assert_allclose(mixed_kappa(spec, UPPER), [1.0, 1.0])
    np.testing.assert_allclose(mixed_kappa(spec, LOWER), [1.0, 1.0])


def test_mixed_kappa_uses_derivative_bounds_on_concave_dims():
    spec = LipschitzSpec(
        directional=DirectionalConstants([-1.0, -1.0], [1.0, 1.0], UNIT2),
        curvature=CurvatureInfo((), (0,), UNIT2),
        deriv_bounds=DerivativeBounds([0.5, 0.5], [-0.2, -0.5], [0.1, 0.5]))
    np.testing.assert_allclose(mixed_kappa(spec, UPPER), [0.2, 1.0])
    np.testing.assert_allclose(mixed_kappa(spec, LOWER), [1.0, 1.0])


def test_lumped_from_linear_plant():
    spec = get_plant('P-LIN').oracle_spec(0)
    assert np.linalg.norm(mixed_kappa(spec, UPPER)) == pytest.approx(np.sqrt(2.0))
    assert lumped_from_directional(spec).kappa == pytest.approx(np.sqrt(2.0))


def test_lumped_from_directional_edge_cases():
    assert lumped_from_directional(directional([-1.0, -1.0], [1.0, 1.0])).kappa == \
        pytest.approx(np.sqrt(2.0))
    assert lumped_from_directional(directional([0.0, 0.0], [0.0, 0.0])).kappa == 0.0


def test_lumped_from_directional_dominates_quotients():
    plant = get_plant('P-QUAD')
    g = plant.constraints[0]
    kappa = lumped_from_directional(plant.oracle_spec(0)).kappa
    points = grid_points(plant.box.lower, plant.box.upper, 21)
    values = np.array([g.value(u) for u in points])
    distances = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    usable = distances > 0
    quotients = np.abs(values[:, None] - values[None, :])[usable] / distances[usable]
    assert quotients.max() <= kappa + 1e-9


def test_is_directional_tighter():
    spec = directional([-1.0, -1.0], [1.0, 1.0])
    assert is_directional_tighter(spec, 3.0, UPPER)
    assert not is_directional_tighter(spec, 1.0, UPPER)


def test_upper_increment_takes_tighter_form():
    spec = LipschitzSpec(lumped=LumpedConstant(np.sqrt(2.0)),
                         directional=DirectionalConstants([1.0, 1.0], [1.0, 1.0], UNIT2))
    assert upper_increment([0.0, 1.0], [1.0, 0.0], spec) == pytest.approx(0.0)
    assert lower_increment([0.0, 1.0], [1.0, 0.0], spec) == pytest.approx(0.0)


def test_local_constants_are_preferred_inside_their_box():
    spec = LipschitzSpec(
        directional=DirectionalConstants([-2.0, -2.0], [2.0, 2.0], UNIT2),
        local=(DirectionalConstants([-1.0, -1.0], [1.0, 1.0],
                                    BoxDomain([0.0, 0.0], [0.5, 0.5])),))
    assert upper_increment([0.1, 0.1], [0.4, 0.1], spec) == pytest.approx(0.3)
    assert upper_increment([0.1, 0.1], [0.9, 0.1], spec) == pytest.approx(1.6)


def test_outside_every_directional_domain():
    small = BoxDomain([0.0], [0.5])
    spec = directional([-1.0], [1.0], small)
    with pytest.raises(OutsideDomain):
        directional_upper_bound(0.0, [0.1], [0.9], spec)
    # a lumped constant takes over
    both = LipschitzSpec(lumped=LumpedConstant(2.0), directional=spec.directional)
    assert upper_increment([0.1], [0.9], both) == pytest.approx(1.6)


def test_anchored_at_drops_foreign_bounds():
    spec = _curved_spec(np.array([0.5]), UPPER)
    assert anchored_at(spec, [0.5]) is spec
    assert anchored_at(spec, [0.2]).deriv_bounds is None


def test_scale_spec():
    spec = get_plant('P-CONV').oracle_spec(0, at=[0.5, 0.5])
    scaled = scale_spec(spec, 0.5)
    assert scaled.lumped.kappa == pytest.approx(0.5 * spec.lumped.kappa)
    np.testing.assert_allclose(scaled.directional.upper, 0.5 * spec.directional.upper)
    assert scaled.deriv_bounds is None
    assert scale_spec(spec, 1.0) is spec
    with pytest.raises(LipschitzSpecError):
        scale_spec(spec, 0.0)


def test_spec_dict_round_trip():
    spec = get_plant('P-CONV').oracle_spec(0, at=[0.25, 0.75])
    back = spec_from_dict(spec_as_dict(spec))
    assert back.lumped.kappa == spec.lumped.kappa
    np.testing.assert_array_equal(back.directional.lower, spec.directional.lower)
    assert back.curvature.concave_dims == frozenset([1])
    np.testing.assert_array_equal(back.deriv_bounds.at, [0.25, 0.75])


@settings(max_examples=200, deadline=None)
@given(st.lists(unit, min_size=2, max_size=2), st.lists(unit, min_size=2, max_size=2),
       st.lists(unit, min_size=2, max_size=2), st.lists(unit, min_size=2, max_size=2))
def test_directional_bounds_contain_linear_functions(a, b, widths, weights):
    lower = np.array([-1.0, 0.5]) - np.array(widths)
    upper = np.array([-1.0, 0.5]) + np.array(widths)
    slope = lower + np.array(weights) * (upper - lower)
    spec = directional(lower, upper)
    value = slope.dot(np.subtract(b, a))
    assert directional_lower_bound(0.0, a, b, spec) <= value + 1e-9
    assert value <= directional_upper_bound(0.0, a, b, spec) + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.lists(unit, min_size=3, max_size=3), st.lists(unit, min_size=3, max_size=3),
       st.floats(min_value=0.0, max_value=10.0))
def test_directional_tighter_than_lumped_when_condition_holds(a, b, c):
    spec = directional([-c] * 3, [c] * 3, BoxDomain.unit(3))
    kappa = c * np.sqrt(3.0) + 1e-12
    assert is_directional_tighter(spec, kappa, UPPER)
    upper = directional_upper_bound(0.0, a, b, spec)
    assert upper <= lumped_bounds(0.0, a, b, kappa)[1] + 1e-9

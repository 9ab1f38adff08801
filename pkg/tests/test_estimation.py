import numpy as np
import pytest

from lipexp.estimation import (FREE, NONNEG, NONPOS, ParametricModel, check_consistency,
                               consistency_repair, estimate_directional_from_model,
                               estimate_from_axial_data, estimate_lumped_from_model,
                               fit_local_model, intersect_directional, preset_from_physics)
from lipexp.exceptions import InconsistentData, LipschitzSpecError, ModelError, SingularDesign
from lipexp.lipschitz import BoxDomain, DirectionalConstants, LipschitzSpec, LumpedConstant
from lipexp.plants import get_plant
from lipexp.uncertainty import Measurement, refine_bounds
from lipexp.utilities import grid_points

UNIT1 = BoxDomain.unit(1)
UNIT2 = BoxDomain.unit(2)


def fixed(theta):
    return BoxDomain(theta, theta)


def test_linear_model_with_uncertain_slope():
    model = ParametricModel(lambda u, th: th[0] * u[0], lambda u, th: np.array([th[0]]),
                            param_box=BoxDomain([1.0], [2.0]), domain=UNIT1)
    constants = estimate_directional_from_model(model, UNIT1)
    assert constants.lower[0] == pytest.approx(1.0, abs=1e-6)
    assert constants.upper[0] == pytest.approx(2.0, abs=1e-6)


def test_square_model():
    model = ParametricModel(lambda u, th: u[0] ** 2, lambda u, th: 2.0 * u, domain=UNIT1)
    constants = estimate_directional_from_model(model, UNIT1)
    assert constants.lower[0] == pytest.approx(0.0, abs=1e-9)
    assert constants.upper[0] == pytest.approx(2.0, abs=1e-9)
    assert estimate_lumped_from_model(model, UNIT1).kappa == pytest.approx(2.0, abs=1e-9)


def test_padding_widens_constants():
    model = ParametricModel(lambda u, th: u[0] ** 2, lambda u, th: 2.0 * u, domain=UNIT1)
    constants = estimate_directional_from_model(model, UNIT1, padding=0.1)
    assert constants.lower[0] == pytest.approx(-0.1, abs=1e-9)
    assert constants.upper[0] == pytest.approx(2.1, abs=1e-9)


def test_lumped_of_linear_model():
    model = ParametricModel(lambda u, th: th.dot(u), lambda u, th: np.array(th),
                            param_box=fixed([3.0, 4.0]), domain=UNIT2)
    assert estimate_lumped_from_model(model, UNIT2).kappa == pytest.approx(5.0, abs=1e-6)


def _bilinear_model():
    return ParametricModel(
        lambda u, th: th[0] * u[0] ** 2 + th[1] * u[0] * u[1] + u[1] ** 2,
        lambda u, th: np.array([2.0 * th[0] * u[0] + th[1] * u[1], th[1] * u[0] + 2.0 * u[1]]),
        param_box=BoxDomain([0.5, -1.0], [1.5, 1.0]), domain=UNIT2)


def test_two_uncertain_coefficients_match_exhaustive_search():
    model = _bilinear_model()
    constants = estimate_directional_from_model(model, UNIT2)
    u = grid_points([0.0, 0.0], [1.0, 1.0], 41)
    theta = grid_points([0.5, -1.0], [1.5, 1.0], 21)
    u0, u1 = u[:, None, 0], u[:, None, 1]
    t0, t1 = theta[None, :, 0], theta[None, :, 1]
    d0 = 2.0 * t0 * u0 + t1 * u1
    d1 = t1 * u0 + 2.0 * u1
    oracle = [(d0.min(), d0.max()), (d1.min(), d1.max())]
    for i, (lo, hi) in enumerate(oracle):
        assert abs(constants.lower[i] - lo) <= 0.01 * max(1.0, abs(lo))
        assert abs(constants.upper[i] - hi) <= 0.01 * max(1.0, abs(hi))


def test_parallel_search_matches_serial():
    model = _bilinear_model()
    serial = estimate_directional_from_model(model, UNIT2, workers=1)
    threaded = estimate_directional_from_model(model, UNIT2, workers=3)
    np.testing.assert_allclose(threaded.lower, serial.lower)
    np.testing.assert_allclose(threaded.upper, serial.upper)


def test_lumped_estimate_close_to_pair_quotients():
    model = ParametricModel(lambda u, th: np.sin(2.0 * u[0]) + u[1] ** 2,
                            lambda u, th: np.array([2.0 * np.cos(2.0 * u[0]), 2.0 * u[1]]),
                            domain=UNIT2)
    kappa = estimate_lumped_from_model(model, UNIT2).kappa
    points = grid_points([0.0, 0.0], [1.0, 1.0], 21)
    values = np.array([model.value(u) for u in points])
    distances = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    usable = distances > 0
    oracle = (np.abs(values[:, None] - values[None, :])[usable] / distances[usable]).max()
    assert oracle <= kappa + 1e-9
    assert kappa <= 1.02 * oracle


def test_model_constants_cover_the_plant():
    plant = get_plant('P-QUAD')
    model = plant.model.constraints[0]
    truth = plant.oracle_spec(0).directional
    constants = estimate_directional_from_model(model, plant.box)
    assert np.all(constants.lower <= truth.lower + 1e-6)
    assert np.all(constants.upper >= truth.upper - 1e-6)


def test_wrong_gradient_is_rejected():
    with pytest.raises(ModelError):
        ParametricModel(lambda u, th: u[0] ** 2, lambda u, th: np.array([1.0]), domain=UNIT1)


def test_model_without_gradient_uses_central_differences():
    model = ParametricModel(lambda u, th: u[0] ** 2 + 3.0 * u[1])
    np.testing.assert_allclose(model.grad([0.5, 0.5]), [1.0, 3.0], atol=1e-6)


def _samples(func, points, noise=None):
    noise = np.zeros(len(points)) if noise is None else noise
    return [Measurement(u, func(np.asarray(u)) + w) for u, w in zip(points, noise)]


def test_fit_recovers_exact_linear_data():
    data = _samples(lambda u: u[0] + u[1] - 1.0, [[0, 0], [1, 0], [0, 1]])
    model = fit_local_model(data)
    np.testing.assert_allclose(model.coefficients, [-1.0, 1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(model.param_box.widths, 0.0)
    np.testing.assert_allclose(model.grad([0.3, 0.3]), [1.0, 1.0])


def test_fit_with_redundant_points_has_tight_box():
    points = [[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]]
    model = fit_local_model(_samples(lambda u: 2.0 * u[0] - u[1] + 0.5, points))
    np.testing.assert_allclose(model.coefficients, [0.5, 2.0, -1.0], atol=1e-9)
    assert np.all(model.param_box.widths <= 1e-6)


def test_fit_quadratic():
    points = grid_points([0.0, 0.0], [1.0, 1.0], 3)
    model = fit_local_model(_samples(lambda u: 1.0 + u[0] ** 2 - u[0] * u[1], points),
                            'quadratic')
    # (1, u0, u1, u0^2, u0 u1, u1^2)
    np.testing.assert_allclose(model.coefficients, [1.0, 0.0, 0.0, 1.0, -1.0, 0.0], atol=1e-9)


def test_fit_rejects_singular_designs():
    with pytest.raises(SingularDesign):
        fit_local_model(_samples(lambda u: u[0], [[0, 0], [0.5, 0.5], [1, 1]]))
    with pytest.raises(SingularDesign):
        fit_local_model(_samples(lambda u: u[0], [[0, 0], [1, 0]]))
    with pytest.raises(SingularDesign):
        fit_local_model([])


def test_fit_confidence_box_coverage():
    truth = np.array([0.2, 1.0, -0.5])
    points = np.array([[0.5, 0.5], [0.6, 0.5], [0.4, 0.5], [0.5, 0.6], [0.5, 0.4],
                       [0.6, 0.6], [0.4, 0.4]])
    rng = np.random.default_rng(17)
    covered = 0
    for _ in range(1000):
        noise = 0.07 * rng.standard_normal(len(points))
        model = fit_local_model(_samples(lambda u: truth.dot([1.0, u[0], u[1]]), points, noise))
        covered += int(np.all(model.param_box.contains(truth)))
    # three 95% intervals, jointly
    assert covered >= 800


def test_axial_data_constants():
    centre = np.array([0.5, 0.5])
    points = [centre] + [centre + s * 0.1 * e for e in np.eye(2) for s in (1, -1)]
    data = _samples(lambda u: u[0] + 2.0 * u[1], points)
    constants = estimate_from_axial_data(data, UNIT2)
    np.testing.assert_allclose(constants.lower, [0.5, 1.0], atol=1e-6)
    np.testing.assert_allclose(constants.upper, [1.5, 3.0], atol=1e-6)
    with pytest.raises(ValueError):
        estimate_from_axial_data(data, UNIT2, conservatism=0.5)


def test_preset_from_physics():
    constants = preset_from_physics([NONNEG], [1.0])
    assert (constants.lower[0], constants.upper[0]) == (0.0, 1.0)
    constants = preset_from_physics([NONPOS, FREE], [2.0, 3.0])
    np.testing.assert_array_equal(constants.lower, [-2.0, -3.0])
    np.testing.assert_array_equal(constants.upper, [0.0, 3.0])
    constants = preset_from_physics([NONNEG, NONPOS], default_magnitude=0.5)
    np.testing.assert_array_equal(constants.upper, [0.5, 0.0])
    with pytest.raises(LipschitzSpecError):
        preset_from_physics([NONNEG, NONNEG], [1.0, None])
    with pytest.raises(LipschitzSpecError):
        preset_from_physics(['upward'], [1.0])


def test_intersect_directional():
    physics = preset_from_physics([NONNEG, FREE], [2.0, 1.0])
    model = DirectionalConstants([-0.5, -2.0], [1.0, 0.5], UNIT2)
    both = intersect_directional(physics, model)
    np.testing.assert_array_equal(both.lower, [0.0, -1.0])
    np.testing.assert_array_equal(both.upper, [1.0, 0.5])
    with pytest.raises(LipschitzSpecError):
        intersect_directional(physics, DirectionalConstants([-2.0, 0.0], [-1.0, 0.0], UNIT2))


def test_consistent_data_needs_no_repair():
    spec = LipschitzSpec(lumped=LumpedConstant(2.0))
    data = _samples(lambda u: u[0] + u[1], grid_points([0, 0], [1, 1], 3))
    report = consistency_repair(spec, data, inflation=1e-3)
    assert report.inflation_steps == 0
    assert report.violations_found == 0
    assert report.repaired is spec


def test_check_consistency_lists_both_directions():
    spec = LipschitzSpec(lumped=LumpedConstant(1.0))
    data = [Measurement([0.0], 0.0), Measurement([1.0], 10.0)]
    assert sorted(check_consistency(spec, data)) == [(0, 1), (1, 0)]


def test_repair_doubles_until_consistent():
    spec = LipschitzSpec(lumped=LumpedConstant(1.0))
    data = [Measurement([0.0], 0.0), Measurement([1.0], 10.0)]
    report = consistency_repair(spec, data, inflation=1e-3)
    assert report.inflation_steps == 4
    assert report.repaired.lumped.kappa == pytest.approx(16.0)
    assert report.violations_found == 2
    # one step less is not enough
    assert check_consistency(LipschitzSpec(lumped=LumpedConstant(8.0)), data)


def test_repair_grows_zero_constants_by_the_floor():
    spec = LipschitzSpec(lumped=LumpedConstant(0.0))
    data = [Measurement([0.0], 0.0), Measurement([1.0], 0.0025)]
    report = consistency_repair(spec, data, inflation=1e-3)
    # 0 -> 0.001 -> 0.002 -> 0.004
    assert report.inflation_steps == 3
    assert report.repaired.lumped.kappa == pytest.approx(0.004)


def test_repair_widens_directional_constants():
    spec = LipschitzSpec(directional=DirectionalConstants([0.0], [1.0], UNIT1))
    data = [Measurement([0.0], 0.0), Measurement([1.0], -0.5)]
    report = consistency_repair(spec, data, inflation=1e-3)
    assert report.inflation_steps == 1
    np.testing.assert_allclose(report.repaired.directional.lower, [-1.0])
    np.testing.assert_allclose(report.repaired.directional.upper, [2.0])


def test_noisy_check_uses_intervals():
    spec = LipschitzSpec(lumped=LumpedConstant(0.1))
    data = [Measurement([0.0], 0.0, -0.3, 0.3), Measurement([1.0], 0.5, -0.3, 0.3)]
    assert check_consistency(spec, data)
    assert not check_consistency(spec, data, noisy=True)


def test_repaired_constants_make_refinement_consistent():
    rng = np.random.default_rng(23)
    plant = get_plant('P-QUAD')
    g = plant.constraints[0]
    for _ in range(50):
        points = rng.random((8, 2))
        data = [Measurement(u, g.value(u)) for u in points]
        spec = LipschitzSpec(lumped=LumpedConstant(rng.uniform(0.01, 0.3)))
        report = consistency_repair(spec, data, inflation=1e-3)
        assert not check_consistency(report.repaired, data)
        refine_bounds(data, report.repaired)
        if report.inflation_steps:
            halved = LipschitzSpec(lumped=LumpedConstant(report.repaired.lumped.kappa / 2.0))
            if halved.lumped.kappa >= spec.lumped.kappa:
                with pytest.raises(InconsistentData):
                    refine_bounds(data, halved)

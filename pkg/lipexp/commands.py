"""
The run, compare-trim, estimate and plants commands
"""
import logging

import numpy as np

from .algorithms import CampaignConfig
from .archive import CampaignArchive, read_measurements
from .batch import BatchSummary, compare_trim, histogram, run_batch
from .constants import LipexpConstants as constants
from .estimation import (consistency_repair, estimate_directional_from_model,
                         estimate_lumped_from_model, fit_local_model,
                         preset_from_physics)
from .exceptions import ConfigError
from .lipschitz import BoxDomain, LipschitzSpec, lumped_from_directional, scale_spec
from .plants import COST, builtin_plants, get_plant

logger = logging.getLogger(constants.app_name)


def campaign_config(spec):
    try:
        return CampaignConfig(
            max_iterations=spec.max_iterations, delta_e=spec.delta_e, guard=spec.guard,
            noise=spec.noise, seed=spec.seed, alpha=spec.alpha, trim=spec.trim,
            n_starts=spec.n_starts, step_size=spec.step_size, refine_tol=spec.refine_tol,
            max_passes=spec.max_passes, inflation=spec.inflation)
    except ValueError as e:
        raise ConfigError(str(e))


def provenance(spec):
    return {
        'version': constants.version,
        'plant': spec.plant_id,
        'algorithm': spec.algorithm,
        'guard': spec.guard,
        'noise': spec.noise,
        'trim': spec.trim,
        'seed': spec.seed,
        'realizations': spec.realizations,
        'max_iterations': spec.max_iterations,
        'delta_e': spec.delta_e,
        'alpha': spec.alpha,
        'kappa_scale': spec.kappa_scale,
    }


def _constraint_specs(plant, spec):
    if spec.kappa_scale == 1:
        return None
    return [scale_spec(plant.oracle_spec(j), spec.kappa_scale)
            for j in range(len(plant.constraints))]


def cmd_run(spec):
    """
    Single campaign or Monte-Carlo batch; writes iterates and summary
    """
    plant = get_plant(spec.plant_id)
    config = campaign_config(spec)
    logs = run_batch(plant, spec.algorithm, config, spec.realizations, spec.workers,
                     specs=_constraint_specs(plant, spec))
    archive = CampaignArchive(spec.output_dir)
    archive.write_iterates(logs)
    summary = BatchSummary.from_logs(logs).as_dict()
    summary['provenance'] = provenance(spec)
    archive.write_summary(summary)
    logger.info("%d violation(s) at iterates, %d at probes; results in %s",
                summary['violations']['iterates'], summary['violations']['probes'],
                archive.output_dir)
    return constants.rc_ok


def cmd_compare_trim(spec):
    """
    Paired untrimmed/trimmed campaigns per realization and the distribution
    of their average cost differences
    """
    if spec.realizations < 2:
        raise ConfigError("compare-trim needs at least 2 realizations")
    if spec.noise != 'on':
        logger.warning("Noise is off: trimmed and untrimmed campaigns will coincide")
    plant = get_plant(spec.plant_id)
    config = campaign_config(spec)
    logs, deltas = compare_trim(plant, spec.algorithm, config, spec.realizations,
                                spec.workers, specs=_constraint_specs(plant, spec))
    archive = CampaignArchive(spec.output_dir)
    archive.write_iterates(logs)
    summary = BatchSummary.from_logs(logs, deltas).as_dict()
    summary['histogram'] = histogram(deltas)
    summary['provenance'] = provenance(spec)
    archive.write_summary(summary)
    logger.info("Mean average cost difference over %d realizations: %g",
                spec.realizations, float(np.mean(deltas)))
    return constants.rc_ok


def _output_index(output):
    if output == COST:
        return COST
    try:
        index = int(output[1:]) - 1
    except ValueError:
        index = -1
    if not output.startswith('g') or index < 0:
        raise ConfigError("Output must be 'cost' or g<j>, got %r" % output)
    return index


def _model_for(plant, output):
    index = _output_index(output)
    if index == COST:
        return plant.model.cost
    if index >= len(plant.model.constraints):
        raise ConfigError("%s has no output %s" % (plant.plant_id, output))
    return plant.model.constraints[index]


def cmd_estimate(spec):
    """
    Lipschitz spec from physics, a plant model or a data fit, optionally
    repaired against data; writes the spec with its provenance
    """
    data = read_measurements(spec.data) if spec.data else None
    grid_density = spec.grid_density
    if spec.method == 'physics':
        if not spec.signs:
            raise ConfigError("The physics method needs signs")
        directional = preset_from_physics(spec.signs, spec.magnitudes or None)
        lipschitz = LipschitzSpec(lumped=lumped_from_directional(
            LipschitzSpec(directional=directional)), directional=directional)
        grid_density = None
    else:
        if spec.method == 'model':
            plant = get_plant(spec.plant_id)
            model, domain = _model_for(plant, spec.output), plant.box
        else:
            if data is None:
                raise ConfigError("The fit method needs a data file")
            model = fit_local_model(data, spec.form)
            domain = BoxDomain.spanned(*[m.at for m in data])
        directional = estimate_directional_from_model(
            model, domain, spec.padding, grid_density, workers=spec.workers, seed=spec.seed)
        lumped = estimate_lumped_from_model(
            model, domain, spec.padding, grid_density, workers=spec.workers, seed=spec.seed)
        lipschitz = LipschitzSpec(lumped=lumped, directional=directional)

    inflation_steps = violations_found = 0
    if spec.repair:
        if data is None:
            raise ConfigError("Repair needs a data file")
        noisy = any(m.noise_upper > m.noise_lower for m in data)
        report = consistency_repair(lipschitz, data, spec.inflation, noisy=noisy)
        lipschitz = report.repaired
        inflation_steps = report.inflation_steps
        violations_found = report.violations_found

    archive = CampaignArchive(spec.output_dir)
    path = archive.write_spec(lipschitz, {
        'method': spec.method,
        'grid_density': grid_density,
        'inflation_steps': inflation_steps,
        'violations_found': violations_found,
        'plant': spec.plant_id if spec.method == 'model' else None,
        'output': spec.output if spec.method == 'model' else None,
        'version': constants.version,
    })
    logger.info("Wrote Lipschitz spec to %s", path)
    return constants.rc_ok


def cmd_plants(spec):
    """
    List the built-in plant catalog
    """
    for plant in builtin_plants().values():
        print("%-8s n_u=%d n_g=%d optimum=%s cost=%g  %s" % (
            plant.plant_id, plant.dimension, len(plant.constraints),
            plant.optimum.tolist(), plant.optimal_cost, plant.description))
    return constants.rc_ok


COMMAND_TABLE = {
    'run': cmd_run,
    'compare-trim': cmd_compare_trim,
    'estimate': cmd_estimate,
    'plants': cmd_plants,
}

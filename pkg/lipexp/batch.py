"""
Monte-Carlo batches of campaigns and their aggregate statistics
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .algorithms import average_cost_difference, run_campaign
from .constants import LipexpConstants as constants
from .utilities import realization_streams

logger = logging.getLogger(constants.app_name)

UNTRIMMED = 'untrimmed'
TRIMMED = 'trimmed'


@dataclass
class BatchSummary(object):
    realizations: int
    iterate_violations: int
    probe_violations: int
    delta_phi_ave: list = field(default_factory=list)
    convergence_iterations: list = field(default_factory=list)
    final_cost_gaps: list = field(default_factory=list)
    stalls: int = 0
    step_backs: int = 0
    repairs: int = 0

    @classmethod
    def from_logs(cls, logs, deltas=()):
        return cls(
            realizations=len(set(log.realization for log in logs)),
            iterate_violations=sum(log.iterate_violations for log in logs),
            probe_violations=sum(log.probe_violations for log in logs),
            delta_phi_ave=[float(d) for d in deltas],
            convergence_iterations=[log.convergence_iteration() for log in logs],
            final_cost_gaps=[float(log.final_cost_gap) for log in logs],
            stalls=sum(log.stalls for log in logs),
            step_backs=sum(log.step_backs for log in logs),
            repairs=sum(log.repairs for log in logs))

    def as_dict(self):
        found = {
            'realizations': self.realizations,
            'violations': {'iterates': self.iterate_violations,
                           'probes': self.probe_violations},
            'delta_phi_ave': self.delta_phi_ave,
            'convergence_iterations': self.convergence_iterations,
            'final_cost_gaps': self.final_cost_gaps,
            'stalls': self.stalls,
            'step_backs': self.step_backs,
            'repairs': self.repairs,
        }
        if self.delta_phi_ave:
            deltas = np.array(self.delta_phi_ave)
            found['delta_phi_ave_stats'] = {
                'mean': float(deltas.mean()), 'std': float(deltas.std()),
                'min': float(deltas.min()), 'max': float(deltas.max())}
        return found


def _map(func, items, workers):
    """
    Results in submission order whatever the worker count
    """
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def _tagged(log, realization):
    log.realization = realization
    return log


def run_batch(plant, algorithm, config, realizations=1, workers=1, **kwargs):
    """
    Independent campaigns, realization r drawing from its own streams of
    config.seed
    """
    if realizations < 1:
        raise ValueError("realizations must be at least 1")

    def one(r):
        log = run_campaign(plant, algorithm, config,
                           streams=realization_streams(config.seed, r), **kwargs)
        logger.debug("Realization %d: %d violations", r, log.violations)
        return _tagged(log, r)
    logs = _map(one, range(realizations), workers)
    logger.info("Ran %d %s campaign(s) on %s", realizations, algorithm, plant.plant_id)
    return logs


def compare_trim(plant, algorithm, config, realizations=2, workers=1, **kwargs):
    """
    Paired campaigns per realization, untrimmed and trimmed, on identical
    noise streams. Returns (logs, deltas) with deltas[r] the mean untrimmed
    minus trimmed true cost of realization r.
    """
    if realizations < 1:
        raise ValueError("realizations must be at least 1")

    def pair(r):
        off = run_campaign(plant, algorithm, replace(config, trim=False), variant=UNTRIMMED,
                           streams=realization_streams(config.seed, r), **kwargs)
        on = run_campaign(plant, algorithm, replace(config, trim=True), variant=TRIMMED,
                          streams=realization_streams(config.seed, r), **kwargs)
        return _tagged(off, r), _tagged(on, r), average_cost_difference(off, on)
    results = _map(pair, range(realizations), workers)
    logs = [log for off, on, _ in results for log in (off, on)]
    deltas = [delta for _, _, delta in results]
    logger.info("Compared trimming over %d realization(s): mean difference %g",
                realizations, float(np.mean(deltas)))
    return logs, deltas


def histogram(values, bins=constants.histogram_bins):
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    return {'counts': counts.tolist(), 'edges': edges.tolist()}

"""
Writing campaign results to an output directory and reading them back
"""
import csv
import io
import json
import logging
import os

import numpy as np

from .algorithms import ExperimentRecord
from .constants import LipexpConstants as constants
from .exceptions import LipexpError
from .lipschitz import spec_as_dict, spec_from_dict
from .uncertainty import Measurement
from .utilities import write_data_to_file

logger = logging.getLogger(constants.app_name)


def iterates_header(dimension, n_constraints):
    """
    Column names of the iterates table
    """
    def numbered(prefix, count):
        return ['%s_%d' % (prefix, i + 1) for i in range(count)]
    return (['realization', 'variant', 'index', 'tag'] + numbered('u', dimension) +
            ['cost_measured', 'cost_true', 'cost_lower', 'cost_upper'] +
            numbered('g_measured', n_constraints) +
            numbered('g_true', n_constraints) + numbered('guard_margin', n_constraints) +
            numbered('g_lower', n_constraints) + numbered('g_upper', n_constraints))


def _floats(values):
    return [repr(float(v)) for v in values]


class CampaignArchive(object):

    """
    The output directory of one command: iterates table, summary document and
    Lipschitz spec files
    """

    def __init__(self, output_dir=None):
        self.output_dir = output_dir or constants.default_output_dir
        self.create_output_dir()

    def create_output_dir(self):
        """
        Create the output dir
        """
        try:
            os.makedirs(self.output_dir, 0o700)
        except OSError:
            if not os.path.isdir(self.output_dir):
                raise
        logger.debug("Output directory: %s", self.output_dir)

    def get_full_path(self, name):
        return os.path.join(self.output_dir, name)

    def write_iterates(self, logs):
        """
        One row per experiment of every campaign in logs
        """
        logs = list(logs)
        if not logs:
            raise LipexpError("No campaigns to write")
        first = logs[0].records[0]
        dimension = first.point.shape[0]
        n_constraints = first.g_true.shape[0]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(iterates_header(dimension, n_constraints))
        for log in logs:
            for r in log.records:
                writer.writerow([log.realization, log.variant, r.index, r.tag] +
                                _floats(r.point) +
                                _floats([r.cost_measured, r.cost_true,
                                         r.cost_lower, r.cost_upper]) +
                                _floats(r.g_measured) + _floats(r.g_true) +
                                _floats(r.guard_margins) + _floats(r.g_lower) +
                                _floats(r.g_upper))
        path = self.get_full_path(constants.iterates_file_name)
        write_data_to_file(buf.getvalue(), path)
        logger.debug("Wrote %s", path)
        return path

    def write_summary(self, summary):
        path = self.get_full_path(constants.summary_file_name)
        write_data_to_file(json.dumps(summary, indent=2, sort_keys=True) + '\n', path)
        logger.debug("Wrote %s", path)
        return path

    def write_spec(self, spec, provenance, name=None):
        path = self.get_full_path(name or constants.spec_file_name)
        document = {'spec': spec_as_dict(spec), 'provenance': provenance}
        write_data_to_file(json.dumps(document, indent=2, sort_keys=True) + '\n', path)
        logger.debug("Wrote %s", path)
        return path


def read_iterates(path):
    """
    Rows of an iterates table as (realization, variant, ExperimentRecord)
    """
    with open(path, newline='') as f:
        reader = csv.reader(f)
        header = next(reader)
        dimension = sum(1 for h in header if h.startswith('u_'))
        n_constraints = sum(1 for h in header if h.startswith('g_true_'))
        found = []
        for row in reader:
            values = [float(v) for v in row[4:]]
            point, values = values[:dimension], values[dimension:]
            costs, values = values[:4], values[4:]
            blocks = [np.array(values[i * n_constraints:(i + 1) * n_constraints])
                      for i in range(5)]
            record = ExperimentRecord(int(row[2]), row[3], np.array(point), *costs, *blocks)
            found.append((int(row[0]), row[1], record))
    return found


def read_summary(path):
    with open(path) as f:
        return json.load(f)


def read_spec(path):
    """
    (LipschitzSpec, provenance) from a spec file
    """
    with open(path) as f:
        document = json.load(f)
    return spec_from_dict(document['spec']), document.get('provenance', {})


def read_measurements(path):
    """
    Measurements from a CSV file with columns u_1..u_n, value and optionally
    noise_lower, noise_upper
    """
    with open(path, newline='') as f:
        reader = csv.DictReader(f)
        coords = [h for h in reader.fieldnames if h.startswith('u_')]
        coords.sort(key=lambda h: int(h[2:]))
        found = []
        for index, row in enumerate(reader):
            found.append(Measurement(
                [float(row[h]) for h in coords], float(row['value']),
                float(row.get('noise_lower') or 0.0), float(row.get('noise_upper') or 0.0),
                index=index))
    if not found:
        raise LipexpError("No measurements in %s" % path)
    return found

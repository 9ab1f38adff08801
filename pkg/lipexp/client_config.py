'''
Declare global config here so that other modules can import it
Gets initialized in __init__._main()
'''
import logging
import configparser
from dataclasses import dataclass, field

from .constants import LipexpConstants as constants
from .exceptions import ConfigError

APP_NAME = constants.app_name
logger = logging.getLogger(APP_NAME)

COMMANDS = ('run', 'compare-trim', 'estimate', 'plants')
ESTIMATE_METHODS = ('model', 'fit', 'physics')


class LipexpClient:
    pass


def set_up_options(parser):
    """
    Add options to the option parser
    """
    parser.add_option('--spec',
                      help='Run spec file ([run], [compare-trim], [estimate] sections)',
                      action="store",
                      dest="spec")
    parser.add_option('--seed',
                      help='Seed of every random stream of the command',
                      action="store",
                      type="int",
                      dest="seed")
    parser.add_option('--realizations',
                      help='Number of Monte-Carlo realizations',
                      action="store",
                      type="int",
                      dest="realizations")
    parser.add_option('--out',
                      help='Output directory (default %s)' % constants.default_output_dir,
                      action="store",
                      dest="out")
    parser.add_option('--workers',
                      help='Worker threads for batches and estimation searches',
                      action="store",
                      type="int",
                      dest="workers")
    parser.add_option('-c', '--conf',
                      help="Pass a custom config file",
                      dest="conf",
                      default=constants.default_conf_file)
    parser.add_option('--version',
                      help="Display version",
                      action="store_true",
                      dest="version",
                      default=False)
    parser.add_option('--verbose',
                      help="DEBUG output to stdout",
                      action="store_true",
                      dest="verbose",
                      default=False)
    parser.add_option('--quiet',
                      help="Only display error messages to stdout",
                      action="store_true",
                      dest="quiet",
                      default=False)
    parser.add_option('--silent',
                      help="Display no messages to stdout",
                      action="store_true",
                      dest="silent",
                      default=False)


def parse_config_file(conf_file):
    """
    Parse the configuration from the file
    """
    parsedconfig = configparser.RawConfigParser(
        {'loglevel': constants.log_level,
         'log_dir': constants.log_dir,
         'trace': 'False',
         'workers': str(constants.default_workers),
         'n_starts': str(constants.n_starts),
         'grid_density': str(constants.grid_density),
         'refine_tol': str(constants.refine_tol),
         'max_passes': str(constants.max_passes),
         'inflation': str(constants.inflation)})
    try:
        parsedconfig.read(conf_file)
    except configparser.Error:
        logger.error("ERROR: Could not read configuration file, using defaults")
    try:
        parsedconfig.add_section(APP_NAME)
    except configparser.Error:
        pass
    return parsedconfig


@dataclass
class RunSpec(object):
    """
    Everything one command needs, after merging flags, spec file and config
    """
    command: str
    plant_id: str = 'P-QUAD'
    algorithm: str = 'CA'
    guard: str = 'lumped'
    noise: str = 'off'
    trim: bool = False
    realizations: int = 1
    seed: int = 0
    output_dir: str = constants.default_output_dir
    max_iterations: int = constants.max_iterations
    delta_e: float = constants.delta_e
    alpha: float = constants.filter_gain
    step_size: float = constants.descent_step
    workers: int = constants.default_workers
    n_starts: int = constants.n_starts
    grid_density: int = constants.grid_density
    refine_tol: float = constants.refine_tol
    max_passes: int = constants.max_passes
    inflation: float = constants.inflation
    kappa_scale: float = 1.0
    # estimate
    method: str = 'model'
    output: str = 'g1'
    repair: bool = False
    data: str = None
    form: str = 'linear'
    signs: list = field(default_factory=list)
    magnitudes: list = field(default_factory=list)
    padding: float = 0.0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError("Unknown command %r; expected one of %s"
                              % (self.command, ', '.join(COMMANDS)))
        if self.realizations < 1:
            raise ConfigError("realizations must be at least 1, got %d" % self.realizations)
        if self.workers < 1:
            raise ConfigError("workers must be at least 1, got %d" % self.workers)
        if self.kappa_scale <= 0:
            raise ConfigError("kappa_scale must be positive")
        if self.method not in ESTIMATE_METHODS:
            raise ConfigError("Unknown estimation method %r; expected one of %s"
                              % (self.method, ', '.join(ESTIMATE_METHODS)))


_INTS = ('realizations', 'seed', 'max_iterations', 'workers', 'n_starts', 'grid_density',
         'max_passes')
_FLOATS = ('delta_e', 'alpha', 'step_size', 'refine_tol', 'inflation', 'kappa_scale',
           'padding')
_BOOLS = ('trim', 'repair')
_LISTS = ('signs', 'magnitudes')
_STRINGS = ('plant', 'algorithm', 'guard', 'noise', 'output_dir', 'method', 'output',
            'data', 'form')
_GLOBAL_KEYS = ('workers', 'n_starts', 'grid_density', 'refine_tol', 'max_passes',
                'inflation')


def _typed(parser, section, key):
    try:
        if key in _INTS:
            return parser.getint(section, key)
        if key in _FLOATS:
            return parser.getfloat(section, key)
        if key in _BOOLS:
            return parser.getboolean(section, key)
        raw = parser.get(section, key)
    except ValueError as e:
        raise ConfigError("Bad value for %s in [%s]: %s" % (key, section, e))
    if key in _LISTS:
        items = [item.strip() for item in raw.split(',') if item.strip()]
        if key == 'magnitudes':
            try:
                return [None if item == '-' else float(item) for item in items]
            except ValueError as e:
                raise ConfigError("Bad magnitudes in [%s]: %s" % (section, e))
        return items
    return raw


def read_spec_file(spec_file, command):
    """
    Values of the [run] section overlaid with the command's own section
    """
    found = {}
    if spec_file is None:
        return found
    parser = configparser.RawConfigParser()
    try:
        if not parser.read(spec_file):
            raise ConfigError("Could not read spec file %s" % spec_file)
    except configparser.Error as e:
        raise ConfigError("Could not parse spec file %s: %s" % (spec_file, e))
    for section in ('run', command):
        if not parser.has_section(section):
            continue
        for key in parser.options(section):
            if key not in _INTS + _FLOATS + _BOOLS + _LISTS + _STRINGS:
                raise ConfigError("Unknown key %r in [%s] of %s" % (key, section, spec_file))
            found[key] = _typed(parser, section, key)
    return found


def build_run_spec(command, options, config):
    """
    Merge config file globals, spec file values and command-line flags, in
    increasing precedence
    """
    values = {}
    for key in _GLOBAL_KEYS:
        values[key] = _typed(config, APP_NAME, key)
    values.update(read_spec_file(getattr(options, 'spec', None), command))
    for key, flag in (('seed', 'seed'), ('realizations', 'realizations'),
                      ('output_dir', 'out'), ('workers', 'workers')):
        value = getattr(options, flag, None)
        if value is not None:
            values[key] = value
    if 'plant' in values:
        values['plant_id'] = values.pop('plant')
    logger.debug("Run spec values: %s", values)
    return RunSpec(command=command, **values)

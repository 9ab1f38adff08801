#!/usr/bin/python
"""
 Run experimental-optimization campaigns with Lipschitz guards,
 compare measurement trimming and estimate Lipschitz constants
"""
import sys
import logging
import logging.handlers
import optparse
import os
import traceback

from .constants import LipexpConstants as constants
from .client_config import (COMMANDS, LipexpClient, build_run_spec,
                            parse_config_file, set_up_options)
from .exceptions import ConfigError, LipexpError

LOG_FORMAT = ("%(asctime)s %(levelname)s %(message)s")
APP_NAME = constants.app_name
logger = logging.getLogger(APP_NAME)


def set_up_logging():
    """
    Initialize Logging
    """
    log_dir = os.path.expanduser(LipexpClient.config.get(APP_NAME, 'log_dir'))
    if not os.path.exists(log_dir):
        os.makedirs(log_dir, 0o700)
    logging_file = os.path.join(log_dir, APP_NAME + '.log')
    valid_levels = ['ERROR', 'DEBUG', 'INFO', 'WARNING', 'CRITICAL']
    handler = logging.handlers.RotatingFileHandler(logging_file,
                                                   backupCount=3)

    # Send anything INFO+ to stdout and log
    stdout_handler = logging.StreamHandler(sys.stdout)
    stderr_handler = logging.StreamHandler(sys.stderr)
    stderr_handler.setLevel(logging.ERROR)
    logging.root.addHandler(stderr_handler)
    if not LipexpClient.options.verbose:
        stdout_handler.setLevel(logging.INFO)
    if LipexpClient.options.quiet:
        stdout_handler.setLevel(logging.ERROR)
    if not LipexpClient.options.silent:
        logging.root.addHandler(stdout_handler)

    logging.root.addHandler(handler)

    formatter = logging.Formatter(LOG_FORMAT)
    handler.setFormatter(formatter)
    logging.root.setLevel(logging.WARNING)
    if LipexpClient.options.verbose:
        config_level = 'DEBUG'
    else:
        config_level = LipexpClient.config.get(APP_NAME, 'loglevel')

    if config_level in valid_levels:
        init_log_level = logging.getLevelName(config_level)
    else:
        print("Invalid log level %s, defaulting to DEBUG" % config_level)
        init_log_level = logging.getLevelName("DEBUG")

    logger.setLevel(init_log_level)
    logging.root.setLevel(init_log_level)
    logger.debug("Logging initialized")
    return handler


def handle_startup():
    """
    Handle startup options
    """
    # show version and exit
    if LipexpClient.options.version:
        print(constants.version)
        sys.exit(constants.rc_ok)

    if LipexpClient.options.verbose and LipexpClient.options.quiet:
        logger.error('Conflicting options: --verbose and --quiet')
        sys.exit(constants.rc_config_error)


def handle_exception(exc_type, exc_value, exc_traceback):
    """
    Exception handler so exception messages land in our log instead of them
    vanishing into thin air
    """
    if issubclass(exc_type, KeyboardInterrupt):
        sys.exit(1)
    if logger:
        logger.error(
            traceback.format_exception(exc_type, exc_value, exc_traceback))
    else:
        print(traceback.format_exception(exc_type, exc_value, exc_traceback))
    sys.exit(constants.rc_runtime_failure)


def trace_calls(frame, event, arg):
    if event != 'call':
        return
    co = frame.f_code
    func_name = co.co_name
    if func_name == 'write':
        return
    caller = frame.f_back
    print('Call to %s on line %s of %s from line %s of %s' %
          (func_name, frame.f_lineno, co.co_filename,
           caller.f_lineno, caller.f_code.co_filename))
    return


def run_command(command):
    """
    Build the run spec for command and execute it, mapping failures onto
    exit codes
    """
    from .commands import COMMAND_TABLE
    try:
        spec = build_run_spec(command, LipexpClient.options, LipexpClient.config)
        return COMMAND_TABLE[command](spec)
    except ConfigError as e:
        logger.error("ERROR: %s", e)
        return constants.rc_config_error
    except LipexpError as e:
        logger.error("ERROR: %s", e)
        return constants.rc_runtime_failure
    except (IOError, OSError) as e:
        logger.error("ERROR: Could not write output: %s", e)
        return constants.rc_runtime_failure


def _main():
    """
    Main entry point
    Parse cmdline options
    Parse config file
    Run the requested command
    """
    sys.excepthook = handle_exception

    parser = optparse.OptionParser(
        usage="%%prog {%s} [options]" % '|'.join(COMMANDS))
    set_up_options(parser)
    options, args = parser.parse_args()
    config = parse_config_file(options.conf)

    # copy to global config object
    LipexpClient.config = config
    LipexpClient.options = options
    LipexpClient.argv = sys.argv
    handler = set_up_logging()

    if LipexpClient.config.getboolean(APP_NAME, 'trace'):
        sys.settrace(trace_calls)

    # Defer logging till it's ready
    logger.debug('invoked with args: %s', LipexpClient.options)
    logger.debug("Version: " + constants.version)

    # Handle all the options
    handle_startup()

    if len(args) != 1 or args[0] not in COMMANDS:
        parser.error("Expected exactly one command out of %s, got %s"
                     % (', '.join(COMMANDS), args))

    rc = run_command(args[0])

    # Roll log over on success
    if not rc:
        handler.doRollover()
    sys.exit(rc)

if __name__ == '__main__':
    _main()

import filecmp
import json
import logging
import os
import re
import subprocess
import sys

import pytest

from lipexp.constants import LipexpConstants as constants

logging.basicConfig(stream=sys.stdout, level=logging.DEBUG,
                    format='%(asctime)s %(message)s')
mylogger = logging.getLogger()

SMALL_RUN = """[run]
plant=P-LIN
algorithm=CA
guard=lumped
noise=on
max_iterations=4
n_starts=3
realizations=2
"""


def lipexp(tmp_path, *args):
    env = dict(os.environ, HOME=str(tmp_path))
    command = subprocess.Popen([sys.executable, '-m', constants.app_name] + list(args),
                               stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                               cwd=constants.package_path, env=env,
                               universal_newlines=True)
    output, err = command.communicate()
    print(output)
    return command.returncode, output, err


def small_spec(tmp_path):
    path = os.path.join(str(tmp_path), 'small.spec')
    with open(path, 'w') as f:
        f.write(SMALL_RUN)
    return path


def test_version_option(tmp_path):
    rc, version_output, err = lipexp(tmp_path, '--version')
    version_regex = re.compile(r"[0-9]+\.[0-9]+\.[0-9]+\-[0-9]")
    if rc != constants.rc_ok or re.search(version_regex, version_output) is None:
        print(err)
        pytest.fail("Did not print version number")


def test_plants_option(tmp_path):
    rc, output, err = lipexp(tmp_path, 'plants')
    for plant_id in ('P-LIN', 'P-QUAD', 'P-CONV', 'P-PREM'):
        if re.search(r"^%s\s+n_u=2" % plant_id, output, re.M) is None:
            print(err)
            pytest.fail("Plant %s missing from the catalog" % plant_id)
    assert rc == constants.rc_ok


def test_run_writes_results(tmp_path):
    spec = small_spec(tmp_path)
    outputs = []
    for name in ('first', 'second'):
        out = os.path.join(str(tmp_path), name)
        rc, output, err = lipexp(tmp_path, 'run', '--spec', spec, '--seed', '3', '--out', out)
        if rc != constants.rc_ok:
            print(err)
            pytest.fail("run exited with %d" % rc)
        for file_name in (constants.iterates_file_name, constants.summary_file_name):
            if not os.path.isfile(os.path.join(out, file_name)):
                pytest.fail("run did not write %s" % file_name)
        outputs.append(out)
    mylogger.debug("Comparing %s with %s", *outputs)
    for file_name in (constants.iterates_file_name, constants.summary_file_name):
        if not filecmp.cmp(os.path.join(outputs[0], file_name),
                           os.path.join(outputs[1], file_name), shallow=False):
            pytest.fail("%s differs between identical runs" % file_name)
    with open(os.path.join(outputs[0], constants.summary_file_name)) as f:
        summary = json.load(f)
    assert summary['realizations'] == 2
    assert summary['provenance']['seed'] == 3


def test_log_file_written(tmp_path):
    lipexp(tmp_path, 'plants')
    log_file = os.path.join(str(tmp_path), '.' + constants.app_name,
                            constants.app_name + '.log')
    if not os.path.isfile(log_file):
        pytest.fail("'%s' was not created" % log_file)


def test_unknown_plant(tmp_path):
    path = os.path.join(str(tmp_path), 'bad.spec')
    with open(path, 'w') as f:
        f.write("[run]\nplant=P-NONE\n")
    rc, output, err = lipexp(tmp_path, 'run', '--spec', path,
                             '--out', os.path.join(str(tmp_path), 'out'))
    assert rc == constants.rc_config_error
    if re.search(r"ERROR: .*P-NONE", err) is None:
        pytest.fail("Unknown plant was not reported")


def test_missing_command(tmp_path):
    rc, output, err = lipexp(tmp_path)
    assert rc == constants.rc_config_error
    rc, output, err = lipexp(tmp_path, 'optimize')
    assert rc == constants.rc_config_error


def test_compare_trim_needs_two_realizations(tmp_path):
    rc, output, err = lipexp(tmp_path, 'compare-trim', '--spec', small_spec(tmp_path),
                             '--realizations', '1',
                             '--out', os.path.join(str(tmp_path), 'out'))
    assert rc == constants.rc_config_error
    if re.search("at least 2 realizations", err) is None:
        pytest.fail("compare-trim accepted a single realization")


def test_estimate_physics_preset(tmp_path):
    out = os.path.join(str(tmp_path), 'out')
    spec = os.path.join(constants.package_path, 'etc', 'estimate-physics.spec')
    rc, output, err = lipexp(tmp_path, 'estimate', '--spec', spec, '--out', out)
    if rc != constants.rc_ok:
        print(err)
        pytest.fail("estimate exited with %d" % rc)
    with open(os.path.join(out, constants.spec_file_name)) as f:
        document = json.load(f)
    assert document['spec']['directional']['lower'] == [0.0]
    assert document['spec']['directional']['upper'] == [1.0]
    assert document['provenance']['method'] == 'physics'

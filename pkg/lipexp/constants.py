"""
Constants
"""
import os


class LipexpConstants(object):
    app_name = 'lipexp'
    version = '1.0.0-1'
    log_level = 'INFO'
    package_path = os.path.dirname(
        os.path.dirname(os.path.abspath(__file__)))
    default_conf_dir = os.path.join(os.path.expanduser('~'), '.' + app_name)
    log_dir = default_conf_dir
    default_log_file = os.path.join(log_dir, app_name) + '.log'
    default_conf_file_name = app_name + '.conf'
    default_conf_file = os.path.join(default_conf_dir, default_conf_file_name)
    default_output_dir = os.path.join(os.getcwd(), app_name + '-out')

    # exit codes
    rc_ok = 0
    rc_config_error = 2
    rc_runtime_failure = 3

    # output file names
    iterates_file_name = 'iterates.csv'
    summary_file_name = 'summary.json'
    spec_file_name = 'lipschitz_spec.json'

    # numerical defaults
    abs_tol = 1e-9
    margin_tol = 1e-12
    filter_gain = 0.7
    delta_e = 0.05
    noise_sigma = 0.07
    noise_bound_multiplier = 3.0
    max_iterations = 30
    refine_tol = 1e-6
    max_passes = 1000
    grid_density = 9
    max_grid_points = 20000
    n_starts = 20
    solver_ftol = 1e-9
    solver_maxiter = 100
    solver_patience = 5
    polish_starts = 5
    confidence = 0.95
    inflation = 1e-3
    min_pair_distance = 1e-8
    gradient_check_rtol = 1e-4
    gradient_check_samples = 5
    central_difference_step = 1e-6
    guard_shrink = 1e-9
    descent_step = 0.1
    histogram_bins = 20
    default_workers = 1

"""
Experiment harness: built-in scenes, the trial matrix, statistics and
stage timing
"""
from .stats import mean_stderr, welch_t
from .scenarios import scenario_library
from .timing import timing_report, write_timing_csv
from .experiment import ExperimentSpec, SceneRef, ResultTable, CellStats, \
    TrialResult, load_experiment, run_experiment, run_trial, trial_seed, \
    read_trials_csv, alpha_sweep, worker_count

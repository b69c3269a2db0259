from .experiments import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    Report,
    run_baseline_random,
    run_experiment,
    run_expectation,
    run_greedy_cert,
    run_maxload_tail,
    run_nullity,
    run_tail_lemma,
    run_two_sided,
    wilson_interval,
)
from .report import emit_report, report_from_json, report_to_csv, report_to_json
from .seeding import derive_trial_seed, derive_trial_seeds

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "ExperimentConfig",
    "Report",
    "derive_trial_seed",
    "derive_trial_seeds",
    "emit_report",
    "report_from_json",
    "report_to_csv",
    "report_to_json",
    "run_baseline_random",
    "run_experiment",
    "run_expectation",
    "run_greedy_cert",
    "run_maxload_tail",
    "run_nullity",
    "run_tail_lemma",
    "run_two_sided",
    "wilson_interval",
]

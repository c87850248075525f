"""Experiment harness: configuration, runs, sweeps and the CLI."""

from .cli import main
from .config import (ALGORITHMS, DEFAULT_CONFIG, ConfigError, RunConfig,
                     load_config, parse_config)
from .experiment import (METRIC_FIELDS, AlgoResult, Problem, build_problem,
                         run_algorithm, sweep, tail_median, tune_baseline)

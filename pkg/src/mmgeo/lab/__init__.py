"""Experiment harness and command line interface."""
from .config import ExperimentConfig
from .experiments import ExperimentReport, run_condition_matrix, run_counterexample, run_experiment, run_sphere_convergence, run_suite

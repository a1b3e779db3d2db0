"""Simulation, Monte-Carlo runs, CSV traces, reports and the CLI."""

from .certify import certify
from .config import BUILTIN_CONFIGS, Config, Scenario, config_from_dict, load_config
from .simulate import TruthTrace, simulate_config, simulate_truth
from .trace import TracePair, TraceRow, read_truth_csv, run_observer, summarize, write_trace_csv, write_truth_csv

__all__ = [
    "BUILTIN_CONFIGS", "Config", "Scenario", "TracePair", "TraceRow", "TruthTrace",
    "certify", "config_from_dict", "load_config", "read_truth_csv", "run_observer",
    "simulate_config", "simulate_truth", "summarize", "write_trace_csv", "write_truth_csv",
]

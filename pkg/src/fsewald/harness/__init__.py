"""Benchmark harness: random systems, timed runs, sweeps and the command line tool."""
from .runner import (COLUMNS, SCHEMA_VERSION, RunReport, RunSpec, build_config, generate_system,
                     obtain_green, run, sweep_xi)

__all__ = ["COLUMNS", "SCHEMA_VERSION", "RunReport", "RunSpec", "build_config", "generate_system",
           "obtain_green", "run", "sweep_xi"]

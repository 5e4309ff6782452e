"""
Configuration Module

Contains tolerances, budgets, run settings and logging setup for the simulator.
"""

from .constants import (
    ConfigError,
    LoggingConfig,
    NumericsConfig,
    OracleConfig,
    RunConfig,
    TebdConfig,
    TruncationPolicy,
)
from .logging_config import setup_logging, get_logger

__all__ = [
    'ConfigError', 'LoggingConfig', 'NumericsConfig', 'OracleConfig', 'RunConfig',
    'TebdConfig', 'TruncationPolicy', 'setup_logging', 'get_logger',
]

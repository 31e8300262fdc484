"""Verification suites and the coordinator that runs them."""

from src.suites.base_suite import BaseSuite, SuiteContext, SuiteResult
from src.suites.coordinator import SUITES, Coordinator, RunOutput, build_generator

__all__ = [
    'BaseSuite',
    'SuiteContext',
    'SuiteResult',
    'SUITES',
    'Coordinator',
    'RunOutput',
    'build_generator',
]

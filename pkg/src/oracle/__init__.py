"""
Oracle Module

Exact dense statevector reference and the cross-validation suites built on it.
"""

from .statevector import (
    basis_statevector,
    dense_hamiltonian,
    ghz_statevector,
    product_statevector,
    random_hermitian,
    random_statevector,
    random_unitary,
    sv_apply_gate,
    sv_cluster_state,
    sv_evolve_exact,
    sv_expectation,
    sv_ground_state,
    sv_inner,
    sv_measure_branch,
    sv_partial_trace,
    sv_schmidt,
    sv_truncate,
)
from .checks import SUITES, CheckResult, SuiteResult, run_suite

__all__ = [
    'basis_statevector', 'dense_hamiltonian', 'ghz_statevector', 'product_statevector',
    'random_hermitian', 'random_statevector', 'random_unitary', 'sv_apply_gate',
    'sv_cluster_state', 'sv_evolve_exact', 'sv_expectation', 'sv_ground_state', 'sv_inner',
    'sv_measure_branch', 'sv_partial_trace', 'sv_schmidt', 'sv_truncate',
    'SUITES', 'CheckResult', 'SuiteResult', 'run_suite',
]

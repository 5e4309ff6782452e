"""
Simulation Module

Workflows on top of TTN states: measurements and one-way computation,
Hamiltonians, and real- and imaginary-time evolution.
"""

from .hamiltonians import HamiltonianSpec, HamiltonianTerm, hamiltonian_library, load_hamiltonian
from .locc import (
    MeasurementOp,
    MeasurementPattern,
    MeasurementStep,
    RandomSource,
    Selector,
    Transcript,
    enumerate_branches,
    measure,
    run_locc,
    run_mbqc,
    tree_cluster_state,
)
from .tebd import (
    EvolutionReport,
    TrotterSchedule,
    anneal_schedule,
    evolve_imag,
    evolve_real,
    ground_state,
    trotter_schedule,
)

__all__ = [
    'HamiltonianSpec', 'HamiltonianTerm', 'hamiltonian_library', 'load_hamiltonian',
    'MeasurementOp', 'MeasurementPattern', 'MeasurementStep', 'RandomSource', 'Selector',
    'Transcript', 'enumerate_branches', 'measure', 'run_locc', 'run_mbqc', 'tree_cluster_state',
    'EvolutionReport', 'TrotterSchedule', 'anneal_schedule', 'evolve_imag', 'evolve_real',
    'ground_state', 'trotter_schedule',
]

"""
Cross-validation suites comparing the TTN simulator with the dense oracle.

Each suite runs a handful of seeded random instances at a given n and
reports the largest deviation it found against its tolerance.
"""

from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List

import networkx as nx
import numpy as np

from config import get_logger
from errors import ValidationError
from simulation.hamiltonians import hamiltonian_library
from simulation.locc import MeasurementOp, measure, outcome_probabilities, tree_cluster_state
from simulation.tebd import evolve_real
from ttn.canonical import canonicalize, check_canonical, truncate_edge
from ttn.gates import GateOp, apply_gate_routed
from ttn.observables import fidelity, rdm1, rdm2
from ttn.state import random_state, to_statevector
from ttn.topology import LAYOUTS, layout

from .statevector import (
    random_unitary,
    sv_apply_gate,
    sv_cluster_state,
    sv_evolve_exact,
    sv_measure_branch,
    sv_partial_trace,
    sv_schmidt,
    sv_truncate,
)

logger = get_logger(__name__)


@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)


@dataclass
class SuiteResult:
    suite: str
    n: int
    seed: int
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, error: float, tolerance: float) -> None:
        self.checks.append(CheckResult(name, float(error), tolerance))

    def to_dict(self) -> Dict:
        return {
            'suite': self.suite,
            'n': self.n,
            'seed': self.seed,
            'passed': self.passed,
            'checks': [dict(asdict(c), passed=c.passed) for c in self.checks],
        }


def _spectrum_error(a: np.ndarray, b: np.ndarray) -> float:
    size = max(len(a), len(b))
    return float(np.max(np.abs(np.pad(a, (0, size - len(a))) - np.pad(b, (0, size - len(b))))))


def _check_canonical(result: SuiteResult, n: int, rng: np.random.Generator) -> None:
    for kind in LAYOUTS:
        state = random_state(layout(kind, n), 2, 4, rng, canonicalize=False)
        v = to_statevector(state)
        canonicalize(state)
        error = max((_spectrum_error(state.weights[e], sv_schmidt(v, state.topology.bipartition_of(e).side_a))
                     for e in state.topology.internal_edges), default=0.0)
        result.add(f"{kind}: edge weights vs Schmidt values", error, 1e-10)
        result.add(f"{kind}: canonical deviation", check_canonical(state).max_deviation, 1e-10)


def _check_rdm(result: SuiteResult, n: int, rng: np.random.Generator) -> None:
    for kind in LAYOUTS:
        state = random_state(layout(kind, n), 2, 4, rng)
        v = to_statevector(state)
        error1 = max(np.max(np.abs(rdm1(state, q).matrix - sv_partial_trace(v, [q]).matrix))
                     for q in range(n))
        error2 = max(np.max(np.abs(rdm2(state, 0, q).matrix - sv_partial_trace(v, [0, q]).matrix))
                     for q in range(1, n))
        result.add(f"{kind}: one-qudit marginals", error1, 1e-10)
        result.add(f"{kind}: two-qudit marginals", error2, 1e-10)


def _check_gates(result: SuiteResult, n: int, rng: np.random.Generator) -> None:
    for kind in LAYOUTS:
        state = random_state(layout(kind, n), 2, 4, rng)
        v = to_statevector(state)
        for targets in [(0, 1), (0, n - 1), (n - 1, 1)]:
            g = GateOp(random_unitary(4, rng), targets)
            apply_gate_routed(state, g)
            v = sv_apply_gate(v, g)
        result.add(f"{kind}: routed gates fidelity", 1 - fidelity(state, v), 1e-9)
        result.add(f"{kind}: canonical after gates", check_canonical(state).max_deviation, 1e-9)


def _check_truncation(result: SuiteResult, n: int, rng: np.random.Generator) -> None:
    state = random_state(layout("caterpillar", n), 2, 8, rng)
    v = to_statevector(state)
    edge = state.topology.internal_edges[len(state.topology.internal_edges) // 2]
    side_a = state.topology.bipartition_of(edge).side_a
    truncated = truncate_edge(state, edge, 2)
    best = sv_truncate(v, side_a, 2)
    result.add("fidelity equals sqrt(kept weight)", abs(fidelity(state, v) - truncated.fidelity), 1e-10)
    result.add("fidelity equals best rank-2 approximation",
               abs(truncated.fidelity - abs(np.vdot(best.amplitudes, v.amplitudes))), 1e-9)


def _check_measurement(result: SuiteResult, n: int, rng: np.random.Generator) -> None:
    state = random_state(layout("balanced-binary", n), 2, 4, rng)
    v = to_statevector(state)
    m = MeasurementOp.in_basis(int(rng.integers(n)), "X")
    errors, fidelities = [], []
    for r, p in enumerate(outcome_probabilities(state, m)):
        p_exact, post = sv_measure_branch(v, m.target, m.operators[r])
        errors.append(abs(p - p_exact))
        branch = state.copy()
        measure(branch, m, outcome=r)
        fidelities.append(1 - fidelity(branch, post))
    result.add("Born probabilities", max(errors), 1e-10)
    result.add("post-measurement states", max(fidelities), 1e-10)


def cut_rank(graph: nx.Graph, side_a) -> int:
    """GF(2) rank of the adjacency block between side_a and the rest."""
    rows = sorted(v for v in graph.nodes if v in side_a)
    cols = sorted(v for v in graph.nodes if v not in side_a)
    block = np.array([[int(graph.has_edge(r, c)) for c in cols] for r in rows], dtype=np.uint8)
    rank = 0
    for c in range(block.shape[1] if block.size else 0):
        pivot = next((r for r in range(rank, block.shape[0]) if block[r, c]), None)
        if pivot is None:
            continue
        block[[rank, pivot]] = block[[pivot, rank]]
        for r in range(block.shape[0]):
            if r != rank and block[r, c]:
                block[r] ^= block[rank]
        rank += 1
    return rank


def _check_cluster(result: SuiteResult, n: int, rng: np.random.Generator) -> None:
    graph = nx.Graph()
    graph.add_node(0)
    for k in range(1, n):
        graph.add_edge(int(rng.integers(k)), k)
    state = tree_cluster_state(graph, layout("balanced-binary", n))
    result.add("cluster-state fidelity", 1 - fidelity(state, sv_cluster_state(graph.edges, n)), 1e-10)
    mismatches = sum(state.edge_rank(e) != 2 ** cut_rank(graph, state.topology.bipartition_of(e).side_a)
                     for e in state.topology.internal_edges)
    result.add("edge ranks equal graph cut ranks", mismatches, 0)

    chain = nx.path_graph(n)
    state = tree_cluster_state(chain, layout("caterpillar", n))
    result.add("chain cluster state: ranks other than 2",
               sum(state.edge_rank(e) != 2 for e in state.topology.internal_edges), 0)


def _check_tebd(result: SuiteResult, n: int, rng: np.random.Generator) -> None:
    n = min(n, 6)
    h = hamiltonian_library("tfim-chain", n)
    state = random_state(layout("caterpillar", n), 2, 2, rng)
    v = sv_evolve_exact(to_statevector(state), h, 0.2)
    evolve_real(state, h, 0.2, dt=0.01, order=2)
    result.add("real-time evolution vs exact propagator", 1 - fidelity(state, v), 1e-6)


SUITES: Dict[str, Callable[[SuiteResult, int, np.random.Generator], None]] = {
    'canonical': _check_canonical,
    'rdm': _check_rdm,
    'gates': _check_gates,
    'truncation': _check_truncation,
    'measurement': _check_measurement,
    'cluster': _check_cluster,
    'tebd': _check_tebd,
}


def run_suite(name: str, n: int, seed: int = 0) -> List[SuiteResult]:
    """Run one named suite, or every suite for ``"all"``."""
    if name != 'all' and name not in SUITES:
        raise ValidationError(f"unknown suite {name!r}; known: all, {', '.join(SUITES)}")
    if n < 4:
        raise ValidationError(f"oracle checks need n >= 4, got {n}")
    results = []
    for suite in (SUITES if name == 'all' else [name]):
        result = SuiteResult(suite=suite, n=n, seed=seed)
        SUITES[suite](result, n, np.random.default_rng(seed))
        status = "passed" if result.passed else "FAILED"
        logger.info(f"Oracle suite {suite} (n={n}): {status}")
        results.append(result)
    return results

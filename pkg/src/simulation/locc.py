"""
LOCC and Measurement-Based Computation

Generalized single-qudit measurements on a TTN, adaptive measurement
patterns, tree-graph cluster states and one-way computation on them.

Outcomes are drawn by inverse-CDF sampling from a PCG64 generator seeded
with (seed, stream), so a seed fixes the whole outcome stream.
"""

import json
import re
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from config import NumericsConfig, get_logger
from errors import NumericalError, ValidationError
from ttn.canonical import canonicalize
from ttn.gates import EXACT, GateOp, apply_gate_routed, apply_local, matrix_from_raw, named_matrix
from ttn.observables import rdm1
from ttn.state import TtnState, leaf_index, product_state, require_canonical
from ttn.topology import TreeTopology, layout

logger = get_logger(__name__)

_ANGLE_BASIS = re.compile(r"^\s*(-?)XY\(\s*([^)]+)\s*\)\s*$", re.IGNORECASE)


@dataclass
class RandomSource:
    """Seeded outcome generator (numpy PCG64 over SeedSequence([seed, stream]))."""

    seed: int
    stream: int = 0
    algorithm: str = field(default="PCG64", init=False)

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        self._generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, self.stream])))

    def uniform(self) -> float:
        return float(self._generator.random())

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def for_trajectory(self, index: int) -> "RandomSource":
        return RandomSource(self.seed, stream=self.stream + index + 1)


# ----------------------------------------------------------------------
# Measurement operators
# ----------------------------------------------------------------------

def _projectors(vectors: Sequence[np.ndarray]) -> List[np.ndarray]:
    return [np.outer(v, v.conj()) for v in vectors]


def basis_operators(spec: Union[str, Dict[str, Any]], d: int = 2) -> List[np.ndarray]:
    """
    Measurement operators of a named basis or a raw operator set.

    Names: ``Z``, ``X``, ``Y`` (projective, outcome 0 is the +1 eigenvector),
    ``XY(theta)`` for projectors on (|0> +- e^{i theta}|1>)/sqrt(2), and the
    outcome-swapped ``-Z``, ``-X``, ``-Y``, ``-XY(theta)``. A dict
    ``{"operators": [[re, im, ...], ...]}`` gives raw d x d operators.
    """
    if isinstance(spec, dict):
        if 'operators' not in spec:
            raise ValidationError(f"raw basis {spec!r} needs 'operators'")
        return [matrix_from_raw(op, d) for op in spec['operators']]

    if d != 2:
        if spec.strip().upper() == "Z":
            return _projectors(list(np.eye(d, dtype=np.complex128)))
        raise ValidationError(f"named basis {spec!r} needs d=2 (only Z is defined for d={d})")

    match = _ANGLE_BASIS.match(spec)
    if match:
        theta = float(match.group(2))
        phase = np.exp(1j * theta)
        vectors = [np.array([1, phase]) / np.sqrt(2), np.array([1, -phase]) / np.sqrt(2)]
        flipped = bool(match.group(1))
    else:
        key = spec.strip().upper()
        flipped = key.startswith("-")
        key = key.lstrip("-")
        if key not in ("X", "Y", "Z"):
            raise ValidationError(f"unknown measurement basis {spec!r}")
        values, vectors_ = np.linalg.eigh(named_matrix(key))
        vectors = [vectors_[:, 1], vectors_[:, 0]]  # +1 eigenvector first
    if flipped:
        vectors = vectors[::-1]
    return _projectors([np.asarray(v, dtype=np.complex128) for v in vectors])


@dataclass
class MeasurementOp:
    """Generalized measurement {E_r} on one qudit."""

    target: int
    operators: List[np.ndarray]

    def __post_init__(self):
        self.operators = [np.asarray(op, dtype=np.complex128) for op in self.operators]
        if not self.operators:
            raise ValidationError("a measurement needs at least one operator")
        d = self.operators[0].shape[0]
        for op in self.operators:
            if op.shape != (d, d):
                raise ValidationError(f"measurement operators must all be {d}x{d}")
        completeness = sum(op.conj().T @ op for op in self.operators)
        if np.linalg.norm(completeness - np.eye(d)) > NumericsConfig.COMPLETENESS_TOLERANCE:
            raise ValidationError(f"measurement on qudit {self.target} is not complete (sum E^dag E != I)")

    @property
    def d(self) -> int:
        return self.operators[0].shape[0]

    @classmethod
    def in_basis(cls, target: int, basis: Union[str, Dict[str, Any]], d: int = 2) -> "MeasurementOp":
        return cls(target, basis_operators(basis, d))


@dataclass
class MeasurementResult:
    outcome: int
    probability: float
    probabilities: List[float]


def outcome_probabilities(state: TtnState, m: MeasurementOp) -> List[float]:
    """p_r = tr(E_r rho E_r^dag) from the target's reduced density matrix."""
    rho = rdm1(state, m.target).matrix
    return [float(np.real(np.trace(op @ rho @ op.conj().T))) for op in m.operators]


def measure(
    state: TtnState,
    m: MeasurementOp,
    rng: Optional[RandomSource] = None,
    outcome: Optional[int] = None,
) -> MeasurementResult:
    """
    Draw an outcome, absorb E_r into the qudit's tensor and re-canonicalize.

    Args:
        state: Canonical state, modified in place
        m: Complete measurement on one qudit
        rng: Outcome source (ignored when ``outcome`` is given)
        outcome: Force this outcome instead of sampling

    Returns:
        MeasurementResult with the outcome and all outcome probabilities
    """
    require_canonical(state, "measure")
    if m.d != state.d:
        raise ValidationError(f"measurement acts on d={m.d}, state has d={state.d}")
    leaf_index(state, m.target)
    probabilities = outcome_probabilities(state, m)
    if max(probabilities) < NumericsConfig.MIN_PROBABILITY:
        raise NumericalError(f"every outcome on qudit {m.target} has probability below "
                             f"{NumericsConfig.MIN_PROBABILITY}")

    if outcome is None:
        if rng is None:
            raise ValidationError("measure needs a RandomSource or a forced outcome")
        cumulative = np.cumsum(probabilities) / sum(probabilities)
        outcome = int(np.searchsorted(cumulative, rng.uniform(), side='right'))
        outcome = min(outcome, len(probabilities) - 1)
    elif not 0 <= outcome < len(probabilities):
        raise ValidationError(f"outcome {outcome} out of range for {len(probabilities)} operators")
    p = probabilities[outcome]
    if p < NumericsConfig.MIN_PROBABILITY:
        raise ValidationError(f"outcome {outcome} on qudit {m.target} has probability {p:.3e}")

    rank_before = state.chi_max_observed
    apply_local(state, GateOp(m.operators[outcome] / np.sqrt(p), (m.target,)))
    canonicalize(state)
    if state.chi_max_observed > rank_before:
        logger.warning(f"Rank grew from {rank_before} to {state.chi_max_observed} in a local measurement")
    logger.debug(f"Measured qudit {m.target}: outcome {outcome} with p={p:.6f}")
    return MeasurementResult(outcome=outcome, probability=p, probabilities=probabilities)


# ----------------------------------------------------------------------
# Patterns
# ----------------------------------------------------------------------

@dataclass
class Selector:
    """Affine choice of basis: (constant + sum of referenced outcomes) mod #bases."""

    constant: int = 0
    outcomes: List[int] = field(default_factory=list)

    def choose(self, recorded: Sequence[int], n_bases: int) -> int:
        try:
            total = self.constant + sum(recorded[k] for k in self.outcomes)
        except IndexError:
            raise ValidationError(f"selector references an outcome that was not recorded: {self.outcomes}")
        return total % n_bases

    @classmethod
    def parse(cls, spec: Union[None, int, str, Dict[str, Any]]) -> "Selector":
        """From ``{"constant": c, "outcomes": [k, ...]}``, an int, or text like ``"s0 + s2 + 1"``."""
        if spec is None:
            return cls()
        if isinstance(spec, int):
            return cls(constant=spec)
        if isinstance(spec, dict):
            return cls(int(spec.get('constant', 0)), [int(k) for k in spec.get('outcomes', [])])
        constant, outcomes = 0, []
        for token in str(spec).replace(" ", "").split("+"):
            if re.fullmatch(r"s\d+", token):
                outcomes.append(int(token[1:]))
            elif re.fullmatch(r"\d+", token):
                constant += int(token)
            else:
                raise ValidationError(f"bad selector term {token!r} in {spec!r}")
        return cls(constant, outcomes)

    def to_dict(self) -> Dict[str, Any]:
        return {'constant': self.constant, 'outcomes': list(self.outcomes)}


@dataclass
class MeasurementStep:
    target: int
    bases: List[Union[str, Dict[str, Any]]]
    selector: Selector = field(default_factory=Selector)


@dataclass
class MeasurementPattern:
    """Ordered measurement steps; a step's basis may depend on earlier outcomes."""

    steps: List[MeasurementStep] = field(default_factory=list)

    def validate(self, n: Optional[int] = None) -> None:
        seen = set()
        for index, step in enumerate(self.steps):
            if step.target in seen:
                raise ValidationError(f"step {index}: qudit {step.target} is measured twice")
            if n is not None and not 0 <= step.target < n:
                raise ValidationError(f"step {index}: qudit {step.target} out of range for n={n}")
            if not step.bases:
                raise ValidationError(f"step {index}: no bases declared")
            if any(k >= index or k < 0 for k in step.selector.outcomes):
                raise ValidationError(f"step {index}: selector may only reference earlier steps")
            seen.add(step.target)

    @property
    def targets(self) -> List[int]:
        return [step.target for step in self.steps]

    @classmethod
    def from_dict(cls, data: Any) -> "MeasurementPattern":
        records = data.get('steps', []) if isinstance(data, dict) else data
        steps = []
        for record in records:
            try:
                bases = record['bases'] if 'bases' in record else [record['basis']]
                steps.append(MeasurementStep(int(record['target']), list(bases),
                                             Selector.parse(record.get('selector'))))
            except (KeyError, TypeError) as e:
                raise ValidationError(f"bad pattern step {record!r}") from e
        pattern = cls(steps)
        pattern.validate()
        return pattern

    @classmethod
    def from_file(cls, path: str) -> "MeasurementPattern":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> Dict[str, Any]:
        return {'steps': [{'target': s.target, 'bases': s.bases, 'selector': s.selector.to_dict()}
                          for s in self.steps]}


@dataclass
class TranscriptRecord:
    step: int
    target: int
    outcome: int
    probability: float
    basis: Any = None


@dataclass
class Transcript:
    records: List[TranscriptRecord] = field(default_factory=list)

    @property
    def outcomes(self) -> List[int]:
        return [r.outcome for r in self.records]

    @property
    def probability(self) -> float:
        """Probability of the whole outcome sequence."""
        return float(np.prod([r.probability for r in self.records])) if self.records else 1.0

    def to_json_lines(self) -> str:
        lines = [json.dumps({'step': r.step, 'target': r.target, 'outcome': r.outcome,
                             'probability': r.probability, 'basis': r.basis})
                 for r in self.records]
        return "\n".join(lines) + ("\n" if lines else "")


def run_locc(
    state: TtnState,
    pattern: MeasurementPattern,
    rng: Optional[RandomSource] = None,
    forced: Optional[Sequence[int]] = None,
) -> Tuple[Transcript, TtnState]:
    """
    Execute a measurement pattern step by step.

    Each step's basis is resolved from the outcomes recorded so far. With
    ``forced`` the listed outcomes are used instead of sampling.
    """
    pattern.validate(state.n)
    transcript = Transcript()
    for index, step in enumerate(pattern.steps):
        choice = step.selector.choose(transcript.outcomes, len(step.bases))
        basis = step.bases[choice]
        m = MeasurementOp.in_basis(step.target, basis, state.d)
        result = measure(state, m, rng, outcome=None if forced is None else forced[index])
        transcript.records.append(TranscriptRecord(index, step.target, result.outcome,
                                                   result.probability, basis))
    logger.info(f"Pattern of {len(pattern.steps)} steps done, outcomes {transcript.outcomes}")
    return transcript, state


def enumerate_branches(state: TtnState, pattern: MeasurementPattern) -> List[Tuple[Tuple[int, ...], float, TtnState]]:
    """Every outcome branch of a pattern with nonzero probability: (outcomes, probability, final state)."""
    pattern.validate(state.n)
    branches = [((), 1.0, state.copy())]
    for index, step in enumerate(pattern.steps):
        grown = []
        for outcomes, p, branch_state in branches:
            basis = step.bases[step.selector.choose(outcomes, len(step.bases))]
            m = MeasurementOp.in_basis(step.target, basis, state.d)
            for r, p_r in enumerate(outcome_probabilities(branch_state, m)):
                if p_r < NumericsConfig.MIN_PROBABILITY:
                    continue
                child = branch_state.copy()
                measure(child, m, outcome=r)
                grown.append((outcomes + (r,), p * p_r, child))
        branches = grown
    return branches


# ----------------------------------------------------------------------
# Cluster states
# ----------------------------------------------------------------------

def _as_graph(g: Union[nx.Graph, Iterable[Tuple[int, int]]]) -> nx.Graph:
    if isinstance(g, nx.Graph):
        return g
    graph = nx.Graph()
    graph.add_edges_from((int(u), int(w)) for u, w in g)
    return graph


def tree_cluster_state(g: Union[nx.Graph, Iterable[Tuple[int, int]]], topology: TreeTopology) -> TtnState:
    """
    Cluster state of a tree graph on qubits 0..k-1, hosted by a topology with n >= k.

    Qubits of the topology that are not graph vertices stay in |+>.
    """
    graph = _as_graph(g)
    if graph.number_of_nodes() == 0 or not nx.is_tree(graph):
        raise ValidationError("cluster graph must be a nonempty tree")
    if any(not isinstance(v, (int, np.integer)) or not 0 <= v < topology.n for v in graph.nodes):
        raise ValidationError(f"graph vertices must be qubits 0..{topology.n - 1}")

    plus = np.array([1, 1]) / np.sqrt(2)
    state = product_state(topology, 2, [plus] * topology.n)
    cz = named_matrix("CZ")
    for u, w in sorted(tuple(sorted(e)) for e in graph.edges):
        apply_gate_routed(state, GateOp(cz, (u, w), name="CZ"), EXACT)
    logger.info(f"Built cluster state on {graph.number_of_nodes()} qubits, chi={state.chi_max_observed}")
    return state


def run_mbqc(
    g: Union[nx.Graph, Iterable[Tuple[int, int]]],
    pattern: MeasurementPattern,
    rng: Optional[RandomSource] = None,
    topology: Optional[TreeTopology] = None,
    forced: Optional[Sequence[int]] = None,
) -> Tuple[Transcript, TtnState]:
    """Build the tree cluster state of g and run the pattern on it."""
    graph = _as_graph(g)
    if topology is None:
        topology = layout("balanced-binary", max(3, graph.number_of_nodes()))
    for target in pattern.targets:
        if target not in graph.nodes:
            raise ValidationError(f"pattern measures qubit {target}, which is not in the graph")
    state = tree_cluster_state(graph, topology)
    return run_locc(state, pattern, rng, forced)

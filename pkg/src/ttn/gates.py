"""
Gate Application

One- and two-qudit operators acting on a TTN: absorption into a single
tensor, nearest-neighbor gates across one internal edge, swaps that move a
qudit's leaf to the neighboring tensor, and routed gates that bring two
distant qudits together, apply the gate and move them back.

Every SVD inside a gate or a swap is truncated by one TruncationPolicy.
"""

import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import NumericsConfig, TruncationPolicy, get_logger
from errors import NumericalError, ValidationError

from .kernel import as_tensor, contract_network, permute, svd_split
from .state import TtnState, leaf_index, require_canonical
from .topology import edge_key, is_leaf, leaf_name

logger = get_logger(__name__)

EXACT = TruncationPolicy()

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

_FIXED_GATES = {
    "H": np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2),
    "S": np.diag([1, 1j]).astype(np.complex128),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]).astype(np.complex128),
    "CZ": np.diag([1, 1, 1, -1]).astype(np.complex128),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
    ),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
    ),
}

_GATE_TEXT = re.compile(r"^\s*([A-Za-z]+)\s*(?:\(([^)]*)\))?\s*$")


def named_matrix(name: str, params: Sequence[Any] = (), d: int = 2) -> np.ndarray:
    """
    Matrix of a named gate or Pauli string.

    Known names: Pauli strings of length 1 or 2 (``X``, ``ZZ``, ``XI`` ...),
    H, S, T, CZ, CNOT, SWAP, ``phase(theta)`` and ``rot(axis, theta)``.
    ``I`` is accepted for any d; everything else is defined for qubits.
    """
    key = name.strip().upper()
    if key == "I":
        return np.eye(d, dtype=np.complex128)
    if d != 2:
        raise ValidationError(f"named gate {name!r} is only defined for d=2, got d={d}")

    if key == "PHASE":
        if len(params) != 1:
            raise ValidationError("phase needs one angle")
        return np.diag([1, np.exp(1j * float(params[0]))]).astype(np.complex128)
    if key == "ROT":
        if len(params) != 2 or str(params[0]).upper() not in ("X", "Y", "Z"):
            raise ValidationError("rot needs an axis (x, y or z) and an angle")
        theta = float(params[1])
        sigma = _PAULI[str(params[0]).upper()]
        return np.cos(theta / 2) * _PAULI["I"] - 1j * np.sin(theta / 2) * sigma
    if params:
        raise ValidationError(f"gate {name!r} takes no parameters")
    if key in _FIXED_GATES:
        return _FIXED_GATES[key].copy()
    if 1 <= len(key) <= 2 and all(c in _PAULI for c in key):
        matrix = _PAULI[key[0]]
        for c in key[1:]:
            matrix = np.kron(matrix, _PAULI[c])
        return matrix.copy()
    raise ValidationError(f"unknown gate {name!r}")


def matrix_from_raw(entries: Sequence[float], dim: int) -> np.ndarray:
    """Square matrix from interleaved (re, im) entries in row-major order."""
    entries = np.asarray(entries, dtype=np.float64)
    if entries.size != 2 * dim * dim:
        raise ValidationError(f"raw matrix needs {2 * dim * dim} entries, got {entries.size}")
    return (entries[0::2] + 1j * entries[1::2]).reshape(dim, dim)


@dataclass
class GateOp:
    """A one- or two-qudit operator with its target qudits."""

    matrix: np.ndarray
    targets: Tuple[int, ...]
    name: Optional[str] = None
    is_unitary: bool = field(init=False)

    def __post_init__(self):
        self.matrix = as_tensor(self.matrix)
        self.targets = tuple(int(q) for q in self.targets)
        if len(self.targets) not in (1, 2):
            raise ValidationError(
                f"gates act on one or two qudits, got targets {self.targets}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise ValidationError(f"gate targets must be distinct, got {self.targets}")
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValidationError(f"gate matrix must be square, got shape {self.matrix.shape}")
        d = round(self.matrix.shape[0] ** (1.0 / self.arity))
        if d ** self.arity != self.matrix.shape[0]:
            raise ValidationError(
                f"matrix dimension {self.matrix.shape[0]} is not d^{self.arity}"
            )
        identity = np.eye(self.matrix.shape[0])
        deviation = np.linalg.norm(self.matrix.conj().T @ self.matrix - identity)
        self.is_unitary = bool(deviation <= NumericsConfig.UNITARY_TOLERANCE)

    @property
    def arity(self) -> int:
        return len(self.targets)

    @property
    def d(self) -> int:
        return round(self.matrix.shape[0] ** (1.0 / self.arity))

    @classmethod
    def named(cls, name: str, targets: Sequence[int], params: Sequence[Any] = (), d: int = 2) -> "GateOp":
        return cls(named_matrix(name, params, d), tuple(targets), name=name)

    @classmethod
    def from_raw(cls, entries: Sequence[float], targets: Sequence[int], d: int) -> "GateOp":
        return cls(matrix_from_raw(entries, d ** len(targets)), tuple(targets))

    def dagger(self) -> "GateOp":
        return GateOp(self.matrix.conj().T, self.targets, name=self.name)

    def check_dimension(self, d: int) -> None:
        if self.d != d:
            raise ValidationError(f"gate acts on d={self.d} but the state has d={d}")


def parse_gate_spec(spec: Union[str, Dict[str, Any]], d: int = 2) -> GateOp:
    """
    Build a GateOp from its text or dict form.

    Text: ``"CZ 0 3"``, ``"phase(0.25) 1"``, ``"rot(x, 1.57) 2"``.
    Dict: ``{"gate": "CNOT", "targets": [0, 1]}``, with optional ``"params"``,
    or ``{"matrix": [re, im, ...], "targets": [...]}`` for a raw matrix.
    """
    if isinstance(spec, str):
        parts = spec.rsplit(")", 1)
        if len(parts) == 2:
            head, rest = parts[0] + ")", parts[1]
        else:
            head, _, rest = spec.strip().partition(" ")
        try:
            targets = [int(tok) for tok in rest.split()]
        except ValueError as e:
            raise ValidationError(f"bad targets in gate spec {spec!r}") from e
        match = _GATE_TEXT.match(head)
        if not match:
            raise ValidationError(f"cannot parse gate spec {spec!r}")
        params = [_parse_param(p) for p in match.group(2).split(",")] if match.group(2) else []
        return GateOp.named(match.group(1), targets, params, d)

    if "targets" not in spec:
        raise ValidationError(f"gate spec {spec!r} has no targets")
    if "matrix" in spec:
        return GateOp.from_raw(spec["matrix"], spec["targets"], d)
    if "gate" in spec:
        return GateOp.named(spec["gate"], spec["targets"], spec.get("params", ()), d)
    raise ValidationError(f"gate spec {spec!r} needs 'gate' or 'matrix'")


def _parse_param(token: str) -> Any:
    token = token.strip()
    try:
        return float(token)
    except ValueError:
        return token


@dataclass
class RoutedGateReport:
    discarded_weight: float
    swap_count: int
    path_length: int


# ----------------------------------------------------------------------
# Single-tensor gates
# ----------------------------------------------------------------------

def _after_gate(state: TtnState, g: GateOp) -> None:
    if not g.is_unitary:
        state.invalidate(canonical=True, normalized=True)


def apply_local(state: TtnState, g: GateOp) -> None:
    """Contract a one-qudit gate into the tensor holding the qudit's leaf."""
    if g.arity != 1:
        raise ValidationError("apply_local needs a one-qudit gate")
    g.check_dimension(state.d)
    vertex, pos = leaf_index(state, g.targets[0])
    letters = ["a", "b", "c"]
    ket = "".join(letters)
    letters[pos] = "o"
    out = "".join(letters)
    state.tensors[vertex] = as_tensor(
        contract_network(f"o{ket[pos]},{ket}->{out}", g.matrix, state.tensors[vertex])
    )
    _after_gate(state, g)


def apply_same_tensor(state: TtnState, g: GateOp) -> None:
    """Contract a two-qudit gate into the tensor both target leaves hang on."""
    if g.arity != 2:
        raise ValidationError("apply_same_tensor needs a two-qudit gate")
    g.check_dimension(state.d)
    (v1, p1), (v2, p2) = (leaf_index(state, q) for q in g.targets)
    if v1 != v2:
        raise ValidationError(
            f"qudits {g.targets} are on different vertices ({v1}, {v2})"
        )
    ket = ["a", "b", "c"]
    out = list(ket)
    out[p1], out[p2] = "o", "p"
    subscripts = f"op{ket[p1]}{ket[p2]},{''.join(ket)}->{''.join(out)}"
    gate = g.matrix.reshape((state.d,) * 4)
    state.tensors[v1] = as_tensor(contract_network(subscripts, gate, state.tensors[v1]))
    _after_gate(state, g)


# ----------------------------------------------------------------------
# Two-tensor operations
# ----------------------------------------------------------------------

def _third_neighbor(state: TtnState, vertex: str, used: Sequence[str]) -> str:
    rest = [nb for nb in state.topology.neighbors(vertex) if nb not in used]
    if len(rest) != 1:
        raise ValidationError(f"cannot identify the third neighbor of {vertex}")
    return rest[0]


def _oriented(state: TtnState, vertex: str, labels: List[str], exclude: str) -> np.ndarray:
    """Tensor with lateral weights absorbed, permuted to the given neighbor labels."""
    t = state.tensor_with_weights(vertex, exclude=[exclude])
    neighbors = list(state.topology.neighbors(vertex))
    return permute(t, [neighbors.index(label) for label in labels])


def _detach(state: TtnState, t: np.ndarray, vertex: str, labels: List[str], axes: Sequence[int]) -> np.ndarray:
    """Divide the weights of the edges vertex-labels[axis] back out of t."""
    for axis in axes:
        w = state.weight_of(vertex, labels[axis])
        if w is None:
            continue
        if np.min(w) < NumericsConfig.DIVISION_THRESHOLD:
            raise NumericalError(
                f"weight {np.min(w):.3e} on edge {edge_key(vertex, labels[axis])} "
                f"is too small to divide out; the state is corrupted"
            )
        shape = [1] * t.ndim
        shape[axis] = w.size
        t = t / w.reshape(shape)
    return t


def _restore_order(state: TtnState, vertex: str, t: np.ndarray, labels: List[str]) -> np.ndarray:
    return permute(t, [labels.index(nb) for nb in state.topology.neighbors(vertex)])


def _split_weights(singular_values: np.ndarray, discarded: float) -> Tuple[np.ndarray, float]:
    kept = float(np.sum(singular_values ** 2))
    if kept <= 0 or not np.isfinite(kept):
        raise NumericalError("two-site update produced a zero or non-finite tensor")
    return singular_values / np.sqrt(kept), discarded / (kept + discarded)


def _require_adjacent(state: TtnState, a: str, b: str) -> None:
    if a == b or not state.topology.graph.has_edge(a, b) or is_leaf(a) or is_leaf(b):
        raise ValidationError(f"{a} and {b} are not adjacent internal vertices")


def apply_neighbor_gate(
    state: TtnState,
    g: GateOp,
    policy: TruncationPolicy = EXACT,
    sweep: bool = True,
) -> float:
    """
    Apply a two-qudit gate whose qudits hang on adjacent vertices.

    The lateral weights are absorbed into the two tensors, the gate and both
    tensors are contracted into one four-index tensor, which is split again
    by SVD; the new singular values become the central weights and the
    lateral weights are divided back out. For a unitary gate the result is
    canonical. A non-unitary gate renormalizes the central weights and, with
    ``sweep``, re-canonicalizes the whole tree.

    Args:
        state: Canonical state (``sweep=False`` lets a caller that restores
            the canonical form itself pass a non-canonical one)
        g: Two-qudit gate; targets[0] is the first tensor factor
        policy: Truncation of the central SVD
        sweep: Re-canonicalize after a non-unitary gate

    Returns:
        Discarded weight relative to the total
    """
    if g.arity != 2:
        raise ValidationError("apply_neighbor_gate needs a two-qudit gate")
    g.check_dimension(state.d)
    if sweep:
        require_canonical(state, "apply_neighbor_gate")
    q1, q2 = g.targets
    a = state.topology.leaf_vertex(q1)
    b = state.topology.leaf_vertex(q2)
    _require_adjacent(state, a, b)
    was_canonical = state.is_canonical

    a_labels = [_third_neighbor(state, a, [leaf_name(q1), b]), leaf_name(q1), b]
    b_labels = [a, leaf_name(q2), _third_neighbor(state, b, [a, leaf_name(q2)])]
    ta = _oriented(state, a, a_labels, exclude=b)
    tb = _oriented(state, b, b_labels, exclude=a)
    lam = state.weights[edge_key(a, b)]
    gate = g.matrix.reshape((state.d,) * 4)
    theta = contract_network("xik,k,kjy,abij->xaby", ta, lam, tb, gate)

    split = svd_split(theta, [0, 1], max_rank=policy.chi_max, cutoff=policy.cutoff,
                      floor=NumericsConfig.SCHMIDT_FLOOR)
    weights, discarded = _split_weights(split.singular_values, split.discarded_weight)
    state.weights[edge_key(a, b)] = weights
    state.tensors[a] = _restore_order(state, a, _detach(state, split.left, a, a_labels, [0]), a_labels)
    state.tensors[b] = _restore_order(state, b, _detach(state, split.right, b, b_labels, [2]), b_labels)
    logger.debug(f"Gate on ({q1}, {q2}) at edge {(a, b)}: rank {len(lam)} -> {len(weights)}")

    if not g.is_unitary:
        state.is_canonical = False
        state.is_normalized = was_canonical
        if sweep:
            from .canonical import canonicalize
            canonicalize(state, cutoff=policy.cutoff)
    return discarded


def swap_step(
    state: TtnState,
    a: str,
    b: str,
    q: int,
    on_b: str,
    policy: TruncationPolicy = EXACT,
    require: bool = True,
) -> float:
    """
    Move qudit q's leaf from vertex a to the adjacent vertex b.

    The neighbor ``on_b`` of b (a leaf or an internal vertex) moves to a in
    exchange, taking q's index position; the represented state is unchanged
    (up to truncation), only the network layout differs.

    Returns:
        Discarded weight relative to the total
    """
    if require:
        require_canonical(state, "swap_step")
    _require_adjacent(state, a, b)
    leaf = leaf_name(q)
    if leaf not in state.topology.neighbors(a):
        raise ValidationError(f"qudit {q} is not attached to {a}")
    if on_b == a or on_b not in state.topology.neighbors(b):
        raise ValidationError(f"{on_b!r} is not a movable neighbor of {b}")

    a_labels = [_third_neighbor(state, a, [leaf, b]), leaf, b]
    b_labels = [a, on_b, _third_neighbor(state, b, [a, on_b])]
    ta = _oriented(state, a, a_labels, exclude=b)
    tb = _oriented(state, b, b_labels, exclude=a)
    lam = state.weights[edge_key(a, b)]
    theta = contract_network("xik,k,kcy->xicy", ta, lam, tb)

    split = svd_split(theta, [0, 2], max_rank=policy.chi_max, cutoff=policy.cutoff,
                      floor=NumericsConfig.SCHMIDT_FLOOR)
    weights, discarded = _split_weights(split.singular_values, split.discarded_weight)
    new_a = _detach(state, split.left, a, a_labels, [0])
    new_a = _detach(state, new_a, b, [a_labels[0], on_b], [1])
    new_b = _detach(state, split.right, b, [None, leaf, b_labels[2]], [2])

    state.topology = state.topology.rewired(a, b, leaf, on_b)
    if not is_leaf(on_b):
        state.weights[edge_key(a, on_b)] = state.weights.pop(edge_key(b, on_b))
    state.weights[edge_key(a, b)] = weights
    state.tensors[a] = _restore_order(state, a, new_a, [a_labels[0], on_b, b])
    state.tensors[b] = _restore_order(state, b, new_b, [a, leaf, b_labels[2]])
    logger.debug(f"Swapped qudit {q} from {a} to {b} (with {on_b}), rank {len(lam)} -> {len(weights)}")
    return discarded


def apply_gate_routed(
    state: TtnState,
    g: GateOp,
    policy: TruncationPolicy = EXACT,
    sweep: bool = True,
) -> RoutedGateReport:
    """
    Apply a two-qudit gate to qudits anywhere in the tree.

    The first qudit is swapped along the path toward the second until both
    hang on adjacent vertices, the gate is applied there, and the swaps are
    undone in reverse order so the layout ends where it started.
    """
    if g.arity == 1:
        apply_local(state, g)
        return RoutedGateReport(discarded_weight=0.0, swap_count=0, path_length=1)
    if sweep:
        require_canonical(state, "apply_gate_routed")
    q1, q2 = g.targets
    path = state.topology.path_between(q1, q2)
    m = len(path)
    if m == 1:
        apply_same_tensor(state, g)
        return RoutedGateReport(discarded_weight=0.0, swap_count=0, path_length=1)

    discarded = 0.0
    moves = []
    for j in range(m - 2):
        a, b, after = path[j], path[j + 1], path[j + 2]
        on_b = _third_neighbor(state, b, [a, after])
        discarded += swap_step(state, a, b, q1, on_b, policy, require=False)
        moves.append((a, b, on_b))

    discarded += apply_neighbor_gate(state, g, policy, sweep=sweep)

    for a, b, on_b in reversed(moves):
        discarded += swap_step(state, b, a, q1, on_b, policy, require=False)
    return RoutedGateReport(discarded_weight=discarded, swap_count=2 * len(moves), path_length=m)

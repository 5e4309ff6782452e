"""
TTN State

A tree tensor network state: one three-index tensor per internal vertex and a
weight sequence on every internal edge. Weights are kept apart from the
tensors; the represented state is the contraction of all tensors with
diag(weights) inserted on each internal edge.

Statevectors use big-endian qudit order: qudit 0 is the most significant digit.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config import NumericsConfig, OracleConfig, get_logger
from errors import BudgetExceededError, NotCanonicalError, ValidationError

from .kernel import as_tensor, contract, permute, svd_split
from .topology import Edge, TreeTopology, edge_key, is_leaf, leaf_name, qudit_of

logger = get_logger(__name__)


@dataclass
class Statevector:
    """Dense amplitudes of an n-qudit state."""

    n: int
    d: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.amplitudes.size != self.d ** self.n:
            raise ValidationError(
                f"statevector length {self.amplitudes.size} != d^n = {self.d ** self.n}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.d,) * self.n)

    def normalized(self) -> "Statevector":
        return Statevector(self.n, self.d, self.amplitudes / self.norm())


def check_budget(n: int, d: int) -> None:
    """Raise BudgetExceededError when d^n amplitudes exceed the configured budget."""
    budget = OracleConfig.amplitude_budget()
    if d ** n > budget:
        raise BudgetExceededError(f"d^n = {d}^{n} amplitudes exceeds the budget of {budget}")


class TtnState:
    """Tensors on internal vertices plus weights on internal edges."""

    def __init__(
        self,
        topology: TreeTopology,
        d: int,
        tensors: Dict[str, np.ndarray],
        weights: Dict[Edge, np.ndarray],
        canonical: bool = False,
        normalized: bool = False,
    ):
        self.topology = topology
        self.d = d
        self.tensors = {v: as_tensor(t) for v, t in tensors.items()}
        self.weights = {edge_key(*e): np.asarray(w, dtype=np.float64) for e, w in weights.items()}
        self.is_canonical = canonical
        self.is_normalized = normalized
        self.check_shapes()

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def chi_max_observed(self) -> int:
        """Largest internal-edge rank (1 when there are no internal edges)."""
        return max((len(w) for w in self.weights.values()), default=1)

    max_rank = chi_max_observed

    def edge_rank(self, edge: Edge) -> int:
        return len(self.weights[edge_key(*edge)])

    def weight_of(self, u: str, w: str) -> Optional[np.ndarray]:
        """Weights on the edge u-w, or None for a leaf edge."""
        if is_leaf(u) or is_leaf(w):
            return None
        return self.weights[edge_key(u, w)]

    def index_dim(self, vertex: str, neighbor: str) -> int:
        if is_leaf(neighbor):
            return self.d
        return len(self.weights[edge_key(vertex, neighbor)])

    def check_shapes(self) -> None:
        """Tensor index ranges must match edge ranks (leaf edges: d)."""
        for v in self.topology.vertices:
            if v not in self.tensors:
                raise ValidationError(f"missing tensor for vertex {v}")
            expected = tuple(self.index_dim(v, nb) for nb in self.topology.neighbors(v))
            if self.tensors[v].shape != expected:
                raise ValidationError(
                    f"tensor at {v} has shape {self.tensors[v].shape}, expected {expected}"
                )
        for edge, w in self.weights.items():
            if w.ndim != 1 or w.size == 0:
                raise ValidationError(f"weights on {edge} must be a nonempty sequence")

    def tensor_with_weights(self, vertex: str, exclude: Iterable[str] = ()) -> np.ndarray:
        """Tensor at ``vertex`` with the weights of its internal edges multiplied in."""
        exclude = set(exclude)
        t = self.tensors[vertex]
        for pos, nb in enumerate(self.topology.neighbors(vertex)):
            w = self.weight_of(vertex, nb)
            if w is None or nb in exclude:
                continue
            shape = [1] * t.ndim
            shape[pos] = w.size
            t = t * w.reshape(shape)
        return t

    def invalidate(self, canonical: bool = True, normalized: bool = False) -> None:
        """Clear status flags after a mutation that may break them."""
        if canonical:
            self.is_canonical = False
        if normalized:
            self.is_normalized = False

    def copy(self) -> "TtnState":
        return TtnState(
            self.topology,
            self.d,
            {v: t.copy() for v, t in self.tensors.items()},
            {e: w.copy() for e, w in self.weights.items()},
            canonical=self.is_canonical,
            normalized=self.is_normalized,
        )

    def __repr__(self) -> str:
        return (f"TtnState(n={self.n}, d={self.d}, chi={self.chi_max_observed}, "
                f"canonical={self.is_canonical})")


# ----------------------------------------------------------------------
# Construction
# ----------------------------------------------------------------------

def product_state(topology: TreeTopology, d: int, locals_: Sequence[Sequence[complex]]) -> TtnState:
    """
    Canonical product state with every internal edge of rank 1.

    Args:
        topology: Valid tree topology
        d: Local dimension
        locals_: One unit vector of length d per qudit
    """
    topology.require_valid()
    if len(locals_) != topology.n:
        raise ValidationError(f"expected {topology.n} local vectors, got {len(locals_)}")
    vectors = []
    for q, vec in enumerate(locals_):
        vec = np.asarray(vec, dtype=np.complex128)
        if vec.shape != (d,):
            raise ValidationError(f"local vector for qudit {q} must have length {d}")
        if abs(np.linalg.norm(vec) - 1.0) > NumericsConfig.UNIT_VECTOR_TOLERANCE:
            raise ValidationError(f"local vector for qudit {q} is not a unit vector")
        vectors.append(vec)

    tensors = {}
    for v in topology.vertices:
        t = np.ones((1,) * 0, dtype=np.complex128)
        for nb in topology.neighbors(v):
            factor = vectors[qudit_of(nb)] if is_leaf(nb) else np.ones(1, dtype=np.complex128)
            t = np.multiply.outer(t, factor)
        tensors[v] = t
    weights = {e: np.ones(1) for e in topology.internal_edges}
    return TtnState(topology, d, tensors, weights, canonical=True, normalized=True)


def basis_state(topology: TreeTopology, d: int, digits: Sequence[int]) -> TtnState:
    """Computational basis state |digits[0] ... digits[n-1]>."""
    return product_state(topology, d, [np.eye(d)[k] for k in digits])


def random_product_state(topology: TreeTopology, d: int, rng: np.random.Generator) -> TtnState:
    locals_ = []
    for _ in range(topology.n):
        vec = rng.normal(size=d) + 1j * rng.normal(size=d)
        locals_.append(vec / np.linalg.norm(vec))
    return product_state(topology, d, locals_)


def random_state(
    topology: TreeTopology,
    d: int,
    bond_dim: int,
    rng: np.random.Generator,
    canonicalize: bool = True,
) -> TtnState:
    """
    Random TTN with Gaussian complex tensors.

    Edge ranks are min(bond_dim, d^|A|, d^|B|) for the edge's bipartition A:B.
    With ``canonicalize`` the result is brought to canonical form.
    """
    topology.require_valid()
    dims = {}
    for edge in topology.internal_edges:
        part = topology.bipartition_of(edge)
        cap = min(d ** len(part.side_a), d ** len(part.side_b))
        dims[edge] = min(bond_dim, cap)
    tensors = {}
    for v in topology.vertices:
        shape = tuple(d if is_leaf(nb) else dims[edge_key(v, nb)] for nb in topology.neighbors(v))
        tensors[v] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    weights = {e: np.ones(k) for e, k in dims.items()}
    state = TtnState(topology, d, tensors, weights)
    if canonicalize:
        from .canonical import canonicalize as _canonicalize
        _canonicalize(state)
    return state


# ----------------------------------------------------------------------
# Dense conversion
# ----------------------------------------------------------------------

def subtree_tensor(state: TtnState, node: str, parent: Optional[str]) -> Tuple[np.ndarray, List[int]]:
    """
    Contract the subtree hanging from ``node`` (away from ``parent``).

    Weights on internal edges inside the subtree are multiplied in; the weight
    of the edge to ``parent`` is not.

    Returns:
        (tensor, qudits) where the tensor's axes are the listed qudits, followed
        by the index toward ``parent`` when a parent is given
    """
    if is_leaf(node):
        return np.eye(state.d, dtype=np.complex128), [qudit_of(node)]

    result = state.tensors[node]
    labels: List = list(state.topology.neighbors(node))
    for nb in state.topology.neighbors(node):
        if nb == parent:
            continue
        child, child_qudits = subtree_tensor(state, nb, node)
        w = state.weight_of(node, nb)
        if w is not None:
            child = child * w
        pos = labels.index(nb)
        result = contract(child, result, [(child.ndim - 1, pos)])
        labels = child_qudits + labels[:pos] + labels[pos + 1:]

    qudit_axes = sorted((i for i, label in enumerate(labels) if isinstance(label, int)),
                        key=lambda i: labels[i])
    bond_axes = [i for i, label in enumerate(labels) if not isinstance(label, int)]
    result = permute(result, qudit_axes + bond_axes)
    return result, [labels[i] for i in qudit_axes]


def subtree_vectors(state: TtnState, side: str, other: str) -> np.ndarray:
    """Subtree states as columns: shape (d^|subtree|, rank of the edge side-other)."""
    tensor, qudits = subtree_tensor(state, side, other)
    check_budget(len(qudits), state.d)
    return tensor.reshape(state.d ** len(qudits), -1)


def to_statevector(state: TtnState) -> Statevector:
    """Contract the whole network (weights included) into dense amplitudes."""
    check_budget(state.n, state.d)
    root = state.topology.vertices[0]
    tensor, _ = subtree_tensor(state, root, None)
    return Statevector(state.n, state.d, tensor.reshape(-1))


def from_statevector(v: Statevector, topology: TreeTopology) -> TtnState:
    """
    Canonical TTN for a dense state by recursive SVD from the leaves inward.

    Every edge ends with the exact Schmidt rank of its bipartition.
    """
    topology.require_valid()
    if v.n != topology.n:
        raise ValidationError(f"statevector has {v.n} qudits, topology has {topology.n}")
    check_budget(v.n, v.d)
    norm = v.norm()
    if norm == 0:
        raise ValidationError("cannot build a TTN for the zero vector")

    psi = v.as_tensor() / norm
    labels: List = list(range(v.n))  # qudit ints, or vertex names for finished subtrees
    tensors = {}
    dims = {}
    order = topology.rooted_order()
    root = order[0][0]

    for vertex, parent in reversed(order[1:]):
        children = [nb for nb in topology.neighbors(vertex) if nb != parent]
        child_labels = [qudit_of(c) if is_leaf(c) else c for c in children]
        positions = [labels.index(label) for label in child_labels]
        split = svd_split(psi, positions, floor=NumericsConfig.SCHMIDT_FLOOR)

        # left has axes (child0, child1, parent); reorder to the vertex's index order
        local = children + [parent]
        tensors[vertex] = permute(split.left, [local.index(nb) for nb in topology.neighbors(vertex)])
        dims[edge_key(vertex, parent)] = split.rank

        rest = [label for label in labels if label not in child_labels]
        psi = split.singular_values.reshape((-1,) + (1,) * len(rest)) * split.right
        labels = [vertex] + rest

    neighbor_labels = [qudit_of(nb) if is_leaf(nb) else nb for nb in topology.neighbors(root)]
    tensors[root] = permute(psi, [labels.index(label) for label in neighbor_labels])

    state = TtnState(topology, v.d, tensors, {e: np.ones(k) for e, k in dims.items()})
    from .canonical import canonicalize
    canonicalize(state)
    logger.debug(f"Imported statevector of {v.n} qudits, chi={state.chi_max_observed}")
    return state


# ----------------------------------------------------------------------
# Schmidt spectra
# ----------------------------------------------------------------------

def require_canonical(state: TtnState, operation: str) -> None:
    if not state.is_canonical:
        raise NotCanonicalError(f"{operation} needs a canonical state; call canonicalize first")


def schmidt_spectrum(state: TtnState, edge: Edge) -> np.ndarray:
    """Stored weights of an internal edge: the Schmidt coefficients of its bipartition."""
    require_canonical(state, "schmidt_spectrum")
    edge = state.topology.require_internal_edge(edge)
    return state.weights[edge].copy()


def entanglement_entropy(state: TtnState, edge: Edge) -> float:
    """Von Neumann entropy (natural log) of the bipartition across ``edge``."""
    p = schmidt_spectrum(state, edge) ** 2
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def leaf_index(state: TtnState, q: int) -> Tuple[str, int]:
    """(vertex hosting qudit q, position of q in that vertex's index order)."""
    vertex = state.topology.leaf_vertex(q)
    return vertex, state.topology.index_of(vertex, leaf_name(q))

"""
Canonical Form

Brings a TTN to canonical form, where every internal edge carries the
Schmidt coefficients of its bipartition and both subtrees describe
orthonormal Schmidt bases. Also checks canonicality and performs optimal
single-edge truncation.

The sweep roots the tree at its first vertex, accumulates Gram matrices of
subtree states from the leaves inward, then orthonormalizes edges from the
root outward so that every edge is handled once.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from config import NumericsConfig, get_logger
from errors import NumericalError, ValidationError

from .kernel import contract_network, eigh, truncation_rank
from .state import TtnState, require_canonical
from .topology import Edge, edge_key, is_leaf

logger = get_logger(__name__)

_KET = "abc"
_BRA = "ABC"

GramCache = Dict[Tuple[str, str], np.ndarray]


@dataclass
class GramMatrix:
    """Scalar products M[a, a'] = <phi_a'|phi_a> of one subtree's states."""

    edge: Edge
    side: str
    matrix: np.ndarray


@dataclass
class EdgeReport:
    edge: Edge
    gram_deviation_a: float
    gram_deviation_b: float
    weight_deviation: float
    ordered: bool

    @property
    def max_deviation(self) -> float:
        return max(self.gram_deviation_a, self.gram_deviation_b, self.weight_deviation)


@dataclass
class CanonicalReport:
    """Per-edge deviations from the canonical-form conditions."""

    tolerance: float
    edges: List[EdgeReport] = field(default_factory=list)
    norm_deviation: float = 0.0

    @property
    def max_deviation(self) -> float:
        return max([e.max_deviation for e in self.edges] + [self.norm_deviation])

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance and all(e.ordered for e in self.edges)

    def to_dict(self) -> Dict:
        return {
            'passed': self.passed,
            'tolerance': self.tolerance,
            'max_deviation': self.max_deviation,
            'norm_deviation': self.norm_deviation,
            'edges': [
                {
                    'edge': list(e.edge),
                    'gram_deviation_a': e.gram_deviation_a,
                    'gram_deviation_b': e.gram_deviation_b,
                    'weight_deviation': e.weight_deviation,
                    'ordered': e.ordered,
                }
                for e in self.edges
            ],
        }


@dataclass
class TruncationResult:
    kept_weight: float
    fidelity: float
    discarded_rank: int


# ----------------------------------------------------------------------
# Gram matrices
# ----------------------------------------------------------------------

def _directed_overlap(ket: TtnState, bra: TtnState, src: str, dst: str, cache: GramCache) -> np.ndarray:
    """Overlaps <bra_a'|ket_a> of the subtree states containing ``src`` seen across src-dst."""
    if is_leaf(src):
        return np.eye(ket.d, dtype=np.complex128)
    key = (src, dst)
    if key in cache:
        return cache[key]

    neighbors = ket.topology.neighbors(src)
    operands = [ket.tensors[src], bra.tensors[src].conj()]
    terms = [_KET, _BRA]
    for pos, nb in enumerate(neighbors):
        if nb == dst:
            continue
        env = _directed_overlap(ket, bra, nb, src, cache)
        w_ket, w_bra = ket.weight_of(src, nb), bra.weight_of(src, nb)
        if w_ket is not None:
            env = w_ket[:, None] * env
        if w_bra is not None:
            env = env * w_bra[None, :]
        operands.append(env)
        terms.append(_KET[pos] + _BRA[pos])
    out = neighbors.index(dst)
    subscripts = ",".join(terms) + "->" + _KET[out] + _BRA[out]
    env = contract_network(subscripts, *operands)
    cache[key] = env
    return env


def _directed_gram(state: TtnState, src: str, dst: str, cache: GramCache) -> np.ndarray:
    """Gram matrix of the subtree containing ``src`` seen across the edge src-dst."""
    return _directed_overlap(state, state, src, dst, cache)


def gram_matrix(state: TtnState, edge: Edge, side: str) -> GramMatrix:
    """
    Gram matrix of the subtree on ``side`` of an internal edge.

    Args:
        state: Any TTN (canonical or not)
        edge: Internal edge
        side: Endpoint of ``edge`` whose subtree is used
    """
    edge = state.topology.require_internal_edge(edge)
    if side not in edge:
        raise ValidationError(f"{side!r} is not an endpoint of {edge}")
    other = edge[1] if side == edge[0] else edge[0]
    return GramMatrix(edge=edge, side=side, matrix=_directed_gram(state, side, other, {}))


def state_norm(state: TtnState) -> float:
    """sqrt(<Psi|Psi>) by contracting Gram environments around the first vertex."""
    root = state.topology.vertices[0]
    cache: GramCache = {}
    t = state.tensors[root]
    operands = [t, t.conj()]
    terms = [_KET, _BRA]
    for pos, nb in enumerate(state.topology.neighbors(root)):
        env = _directed_gram(state, nb, root, cache)
        w = state.weight_of(root, nb)
        if w is not None:
            env = w[:, None] * env * w[None, :]
        operands.append(env)
        terms.append(_KET[pos] + _BRA[pos])
    value = contract_network(",".join(terms) + "->", *operands)
    return float(np.sqrt(max(value.real, 0.0)))


def overlap(bra: TtnState, ket: TtnState) -> complex:
    """<bra|ket> for two TTNs on the same tree; bond dimensions may differ."""
    if bra.topology != ket.topology or bra.d != ket.d:
        raise ValidationError("overlap needs two states on the same topology and local dimension")
    root = ket.topology.vertices[0]
    cache: GramCache = {}
    operands = [ket.tensors[root], bra.tensors[root].conj()]
    terms = [_KET, _BRA]
    for pos, nb in enumerate(ket.topology.neighbors(root)):
        env = _directed_overlap(ket, bra, nb, root, cache)
        w_ket, w_bra = ket.weight_of(root, nb), bra.weight_of(root, nb)
        if w_ket is not None:
            env = w_ket[:, None] * env
        if w_bra is not None:
            env = env * w_bra[None, :]
        operands.append(env)
        terms.append(_KET[pos] + _BRA[pos])
    return complex(contract_network(",".join(terms) + "->", *operands))


def normalize(state: TtnState) -> float:
    """Rescale the first vertex tensor so that <Psi|Psi> = 1; return the old norm."""
    norm = state_norm(state)
    if norm == 0:
        raise NumericalError("cannot normalize a zero-norm state")
    root = state.topology.vertices[0]
    state.tensors[root] = state.tensors[root] / norm
    state.is_normalized = True
    return norm


# ----------------------------------------------------------------------
# Canonicalization
# ----------------------------------------------------------------------

def _retained_factor(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvectors and eigenvalues of a Gram matrix with d_tau > eps * max(d)."""
    values, vectors = eigh(m)
    if values.size == 0 or values[0] <= 0:
        raise NumericalError("zero-norm state: every Gram eigenvalue vanished")
    keep = values > NumericsConfig.GRAM_EIGENVALUE_EPS * values[0]
    return vectors[:, keep], values[keep]


def _apply_on_index(t: np.ndarray, pos: int, g: np.ndarray) -> np.ndarray:
    """t'[.., k, ..] = sum_a t[.., a, ..] g[a, k] on index ``pos``."""
    return np.ascontiguousarray(np.moveaxis(np.tensordot(t, g, axes=([pos], [0])), -1, pos))


def canonicalize_edge(
    state: TtnState,
    edge: Edge,
    cutoff: float = 0.0,
    gram_a: Optional[np.ndarray] = None,
    gram_b: Optional[np.ndarray] = None,
) -> float:
    """
    Install the Schmidt decomposition on one internal edge.

    Diagonalizes both Gram matrices, drops eigenvalues d_tau <= eps * max(d),
    takes the SVD of X^T diag(lambda) Y and rotates the two incident tensors so
    that their subtrees carry orthonormal Schmidt bases. The new weights are
    normalized to sum(lambda^2) = 1.

    Args:
        state: State to modify in place
        edge: Internal edge (a, b)
        cutoff: Relative squared-weight truncation threshold
        gram_a, gram_b: Precomputed Gram matrices of the two sides

    Returns:
        Discarded weight relative to the total
    """
    a, b = state.topology.require_internal_edge(edge)
    if gram_a is None:
        gram_a = _directed_gram(state, a, b, {})
    if gram_b is None:
        gram_b = _directed_gram(state, b, a, {})

    vec_a, val_a = _retained_factor(gram_a)
    vec_b, val_b = _retained_factor(gram_b)
    x = vec_a * np.sqrt(val_a)
    y = vec_b * np.sqrt(val_b)
    lam = state.weights[(a, b)]
    core = x.T @ (lam[:, None] * y)

    try:
        u, s, vh = scipy.linalg.svd(core, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD failed on edge {(a, b)}: {e}") from e
    total = float(np.sum(s ** 2))
    if total <= 0:
        raise NumericalError(f"zero-norm state at edge {(a, b)}")
    k = truncation_rank(s, cutoff=cutoff, floor=NumericsConfig.SCHMIDT_FLOOR)
    discarded = float(np.sum(s[k:] ** 2)) / total

    g = (vec_a.conj() / np.sqrt(val_a)) @ u[:, :k]
    h = (vec_b.conj() / np.sqrt(val_b)) @ vh[:k, :].T
    topo = state.topology
    state.tensors[a] = _apply_on_index(state.tensors[a], topo.index_of(a, b), g)
    state.tensors[b] = _apply_on_index(state.tensors[b], topo.index_of(b, a), h)
    kept = s[:k]
    state.weights[(a, b)] = kept / np.sqrt(np.sum(kept ** 2))
    logger.debug(f"Edge {(a, b)}: rank {len(lam)} -> {k}, discarded {discarded:.3e}")
    return discarded


def canonicalize(state: TtnState, cutoff: float = 0.0) -> float:
    """
    Bring every internal edge to canonical form and normalize the state.

    Args:
        state: State to modify in place; must have positive norm
        cutoff: Relative squared-weight truncation threshold per edge

    Returns:
        Largest relative discarded weight over all edges
    """
    topo = state.topology
    if not topo.internal_edges:
        normalize(state)
        state.is_canonical = True
        return 0.0

    order = topo.rooted_order()
    cache: GramCache = {}
    for child, parent in order[1:]:
        _directed_gram(state, child, parent, cache)

    max_discarded = 0.0
    for child, parent in order[1:]:
        outer = dict(cache)
        outer.pop((parent, child), None)
        gram_parent = _directed_gram(state, parent, child, outer)
        gram_child = cache[(child, parent)]
        edge = edge_key(parent, child)
        if edge[0] == parent:
            discarded = canonicalize_edge(state, edge, cutoff, gram_parent, gram_child)
        else:
            discarded = canonicalize_edge(state, edge, cutoff, gram_child, gram_parent)
        max_discarded = max(max_discarded, discarded)
        identity = np.eye(state.edge_rank(edge), dtype=np.complex128)
        cache[(parent, child)] = identity
        cache[(child, parent)] = identity

    state.is_canonical = True
    state.is_normalized = True
    logger.debug(f"Canonicalized {len(order) - 1} edges, chi={state.chi_max_observed}")
    return max_discarded


def check_canonical(state: TtnState, tol: float = NumericsConfig.CANONICAL_TOLERANCE) -> CanonicalReport:
    """
    Measure how far each edge is from the canonical-form conditions.

    Sets ``state.is_canonical`` to whether every deviation is below ``tol``.
    """
    report = CanonicalReport(tolerance=tol)
    cache: GramCache = {}
    for a, b in state.topology.internal_edges:
        lam = state.weights[(a, b)]
        identity = np.eye(len(lam))
        dev_a = float(np.linalg.norm(_directed_gram(state, a, b, cache) - identity))
        dev_b = float(np.linalg.norm(_directed_gram(state, b, a, cache) - identity))
        ordered = bool(np.all(lam > 0) and np.all(np.diff(lam) <= tol))
        report.edges.append(EdgeReport(
            edge=(a, b),
            gram_deviation_a=dev_a,
            gram_deviation_b=dev_b,
            weight_deviation=abs(float(np.sum(lam ** 2)) - 1.0),
            ordered=ordered,
        ))
    if not report.edges:
        report.norm_deviation = abs(state_norm(state) - 1.0)
    state.is_canonical = report.passed
    return report


# ----------------------------------------------------------------------
# Truncation
# ----------------------------------------------------------------------

def truncate_edge(state: TtnState, edge: Edge, chi_tilde: int, recanonicalize: bool = True) -> TruncationResult:
    """
    Keep the chi_tilde largest Schmidt weights on one edge.

    The kept weights are renormalized, so the fidelity between the truncated
    and the original state is sqrt(K) with K the kept squared weight.
    """
    require_canonical(state, "truncate_edge")
    if chi_tilde < 1:
        raise ValidationError(f"chi_tilde must be >= 1, got {chi_tilde}")
    a, b = state.topology.require_internal_edge(edge)
    lam = state.weights[(a, b)]
    if chi_tilde >= len(lam):
        return TruncationResult(kept_weight=1.0, fidelity=1.0, discarded_rank=0)

    kept_weight = float(np.sum(lam[:chi_tilde] ** 2))
    topo = state.topology
    pos_a = topo.index_of(a, b)
    pos_b = topo.index_of(b, a)
    state.tensors[a] = np.ascontiguousarray(np.take(state.tensors[a], range(chi_tilde), axis=pos_a))
    state.tensors[b] = np.ascontiguousarray(np.take(state.tensors[b], range(chi_tilde), axis=pos_b))
    state.weights[(a, b)] = lam[:chi_tilde] / np.sqrt(kept_weight)
    state.invalidate(canonical=True)
    if recanonicalize:
        canonicalize(state)
    logger.debug(f"Truncated edge {(a, b)} to {chi_tilde}, kept weight {kept_weight:.6f}")
    return TruncationResult(
        kept_weight=kept_weight,
        fidelity=float(np.sqrt(kept_weight)),
        discarded_rank=len(lam) - chi_tilde,
    )


def truncate_state(state: TtnState, chi_tilde: int) -> float:
    """
    Truncate every internal edge to at most chi_tilde, one edge at a time.

    Returns the fidelity |<Psi|Psi~>| between the truncated state and the
    state before truncation. Each edge is cut in the canonical form left by
    the previous cut, so this is generally not the product of the per-edge
    sqrt(kept weight) values.
    """
    require_canonical(state, "truncate_state")
    original = state.copy()
    truncated = False
    for edge in state.topology.internal_edges:
        if state.edge_rank(edge) > chi_tilde:
            truncate_edge(state, edge, chi_tilde)
            truncated = True
    if not truncated:
        return 1.0
    return min(abs(overlap(original, state)), 1.0)

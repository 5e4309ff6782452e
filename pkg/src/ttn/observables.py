"""
Observables

Reduced density matrices of one and two qudits, expectation values,
energies, correlators and fidelities. All local quantities are computed
from a canonical state, where the subtrees hanging off a tensor contribute
orthonormal bases and only their edge weights need to be kept.
"""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from config import NumericsConfig, get_logger
from errors import ValidationError

from .kernel import contract_network, permute
from .state import Statevector, TtnState, entanglement_entropy, leaf_index, require_canonical, to_statevector
from .topology import Edge, leaf_name

logger = get_logger(__name__)


@dataclass
class DensityMatrix:
    """Reduced state of one or two qudits, rows ordered as ``qudits`` (big-endian)."""

    qudits: Tuple[int, ...]
    matrix: np.ndarray

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def deviations(self) -> Dict[str, float]:
        """Distances from Hermiticity, unit trace and positivity."""
        hermitian = float(np.linalg.norm(self.matrix - self.matrix.conj().T))
        eigenvalues = np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))
        return {
            'hermiticity': hermitian,
            'trace': abs(self.trace() - 1.0),
            'negativity': float(max(0.0, -eigenvalues.min())),
        }

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def _check_hermitian(obs: np.ndarray) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.complex128)
    if obs.ndim != 2 or obs.shape[0] != obs.shape[1]:
        raise ValidationError(f"observable must be a square matrix, got shape {obs.shape}")
    if np.linalg.norm(obs - obs.conj().T) > NumericsConfig.HERMITIAN_TOLERANCE * max(1.0, np.linalg.norm(obs)):
        raise ValidationError("observable is not Hermitian")
    return obs


def rdm1(state: TtnState, q: int) -> DensityMatrix:
    """One-qudit reduced density matrix from the qudit's tensor and its edge weights."""
    require_canonical(state, "rdm1")
    vertex, pos = leaf_index(state, q)
    t = state.tensor_with_weights(vertex)
    ket = ["a", "b", "c"]
    bra = list(ket)
    ket[pos], bra[pos] = "i", "j"
    rho = contract_network(f"{''.join(ket)},{''.join(bra)}->ij", t, t.conj())
    return DensityMatrix(qudits=(q,), matrix=rho)


def rdm2(state: TtnState, q1: int, q2: int) -> DensityMatrix:
    """
    Two-qudit reduced density matrix by contracting the path between them.

    The path tensors are contracted one at a time from q1's end; each step
    folds one tensor and its conjugate into a four-index environment.
    """
    require_canonical(state, "rdm2")
    if q1 == q2:
        raise ValidationError("rdm2 needs two distinct qudits")
    topo = state.topology
    path = topo.path_between(q1, q2)
    leaf1, leaf2 = leaf_name(q1), leaf_name(q2)
    d = state.d

    if len(path) == 1:
        vertex = path[0]
        t = state.tensor_with_weights(vertex)
        p1, p2 = topo.index_of(vertex, leaf1), topo.index_of(vertex, leaf2)
        ket = ["a", "b", "c"]
        bra = list(ket)
        ket[p1], ket[p2] = "i", "j"
        bra[p1], bra[p2] = "k", "l"
        rho = contract_network(f"{''.join(ket)},{''.join(bra)}->ijkl", t, t.conj())
        return DensityMatrix(qudits=(q1, q2), matrix=rho.reshape(d * d, d * d))

    def oriented(vertex, labels, exclude=()):
        t = state.tensor_with_weights(vertex, exclude=exclude)
        neighbors = list(topo.neighbors(vertex))
        return permute(t, [neighbors.index(label) for label in labels])

    first, nxt = path[0], path[1]
    side = [nb for nb in topo.neighbors(first) if nb not in (leaf1, nxt)][0]
    t = oriented(first, [side, leaf1, nxt], exclude=[nxt])
    env = contract_network("xik,xjl->ijkl", t, t.conj())

    for j in range(1, len(path) - 1):
        prev, vertex, nxt = path[j - 1], path[j], path[j + 1]
        side = [nb for nb in topo.neighbors(vertex) if nb not in (prev, nxt)][0]
        t = oriented(vertex, [prev, side, nxt], exclude=[nxt])
        env = contract_network("ijpq,pwk,qwl->ijkl", env, t, t.conj())

    prev, last = path[-2], path[-1]
    side = [nb for nb in topo.neighbors(last) if nb not in (prev, leaf2)][0]
    t = oriented(last, [prev, leaf2, side])
    rho = contract_network("ikpq,pjy,qly->ijkl", env, t, t.conj())
    return DensityMatrix(qudits=(q1, q2), matrix=rho.reshape(d * d, d * d))


def expectation(state: TtnState, obs: np.ndarray, targets: Sequence[int]) -> float:
    """<Psi|obs|Psi> for an observable on one or two qudits."""
    obs = _check_hermitian(obs)
    targets = tuple(targets)
    if len(targets) == 1:
        rho = rdm1(state, targets[0])
    elif len(targets) == 2:
        rho = rdm2(state, *targets)
    else:
        raise ValidationError(f"observables act on one or two qudits, got {targets}")
    if obs.shape != rho.matrix.shape:
        raise ValidationError(f"observable shape {obs.shape} does not match {rho.matrix.shape}")
    return float(np.real(np.trace(obs @ rho.matrix)))


def energy(state: TtnState, hamiltonian) -> float:
    """Sum of term expectations; each distinct support is contracted once."""
    cache: Dict[Tuple[int, ...], DensityMatrix] = {}
    total = 0.0
    for term in hamiltonian.terms:
        sites = tuple(term.sites)
        if sites not in cache:
            cache[sites] = rdm1(state, sites[0]) if len(sites) == 1 else rdm2(state, *sites)
        total += float(np.real(np.trace(term.matrix @ cache[sites].matrix)))
    return total


def correlator(state: TtnState, a: np.ndarray, b: np.ndarray, q1: int, q2: int) -> float:
    """Connected correlator <A_q1 B_q2> - <A_q1><B_q2>."""
    joint = expectation(state, np.kron(a, b), (q1, q2))
    return joint - expectation(state, a, (q1,)) * expectation(state, b, (q2,))


def entropies(state: TtnState) -> Dict[Edge, float]:
    """Entanglement entropy of every internal edge's bipartition."""
    return {edge: entanglement_entropy(state, edge) for edge in state.topology.internal_edges}


def fidelity(state: TtnState, v: Statevector) -> float:
    """|<v|Psi>| against a dense reference state."""
    if v.n != state.n or v.d != state.d:
        raise ValidationError(f"reference has n={v.n}, d={v.d}; state has n={state.n}, d={state.d}")
    psi = to_statevector(state).amplitudes
    return float(abs(np.vdot(v.amplitudes, psi)))

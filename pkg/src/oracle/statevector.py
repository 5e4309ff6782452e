"""
Statevector Oracle

Exact dense reference simulator for small systems: gate application,
partial traces, Schmidt spectra, measurements, dense Hamiltonians, exact
propagators and exact diagonalization. Amplitudes are big-endian, the same
convention as ``ttn.to_statevector``.
"""

from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from config import NumericsConfig, OracleConfig, get_logger
from errors import BudgetExceededError, ValidationError
from ttn.gates import GateOp, named_matrix
from ttn.observables import DensityMatrix
from ttn.state import Statevector, check_budget

logger = get_logger(__name__)


# ----------------------------------------------------------------------
# Reference states
# ----------------------------------------------------------------------

def product_statevector(locals_: Sequence[Sequence[complex]]) -> Statevector:
    amplitudes = np.ones(1, dtype=np.complex128)
    for vec in locals_:
        amplitudes = np.kron(amplitudes, np.asarray(vec, dtype=np.complex128))
    d = len(locals_[0])
    check_budget(len(locals_), d)
    return Statevector(len(locals_), d, amplitudes)


def basis_statevector(n: int, d: int, digits: Sequence[int]) -> Statevector:
    return product_statevector([np.eye(d)[k] for k in digits])


def ghz_statevector(n: int, d: int = 2) -> Statevector:
    """(|0...0> + ... + |d-1...d-1>) / sqrt(d)."""
    check_budget(n, d)
    amplitudes = np.zeros(d ** n, dtype=np.complex128)
    for k in range(d):
        amplitudes[sum(k * d ** i for i in range(n))] = 1 / np.sqrt(d)
    return Statevector(n, d, amplitudes)


def random_statevector(n: int, d: int, rng: np.random.Generator) -> Statevector:
    check_budget(n, d)
    amplitudes = rng.normal(size=d ** n) + 1j * rng.normal(size=d ** n)
    return Statevector(n, d, amplitudes / np.linalg.norm(amplitudes))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = scipy.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (z + z.conj().T)


# ----------------------------------------------------------------------
# Gates and local operators
# ----------------------------------------------------------------------

def _check_targets(targets: Sequence[int], n: int) -> Tuple[int, ...]:
    targets = tuple(int(q) for q in targets)
    if len(set(targets)) != len(targets):
        raise ValidationError(f"targets must be distinct, got {targets}")
    if any(not 0 <= q < n for q in targets):
        raise ValidationError(f"targets {targets} out of range for n={n}")
    return targets


def _apply_on_axes(tensor: np.ndarray, op: np.ndarray, axes: Sequence[int], d: int) -> np.ndarray:
    """Act with a d^k x d^k operator on k axes of a tensor (other axes untouched)."""
    k = len(axes)
    op = op.reshape((d,) * (2 * k))
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def sv_apply_gate(v: Statevector, g: GateOp, targets: Optional[Sequence[int]] = None) -> Statevector:
    """Exact dense application of a gate; targets default to the gate's own."""
    targets = _check_targets(targets if targets is not None else g.targets, v.n)
    if g.matrix.shape[0] != v.d ** len(targets):
        raise ValidationError(
            f"gate dimension {g.matrix.shape[0]} does not match {len(targets)} qudits of d={v.d}"
        )
    out = _apply_on_axes(v.as_tensor(), g.matrix, targets, v.d)
    return Statevector(v.n, v.d, out.reshape(-1))


def sv_partial_trace(v: Statevector, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix of one or two qudits, rows ordered as ``keep``."""
    keep = _check_targets(keep, v.n)
    if len(keep) not in (1, 2):
        raise ValidationError(f"partial traces keep one or two qudits, got {keep}")
    rest = [q for q in range(v.n) if q not in keep]
    m = np.transpose(v.as_tensor(), list(keep) + rest).reshape(v.d ** len(keep), -1)
    return DensityMatrix(qudits=keep, matrix=m @ m.conj().T)


def sv_schmidt(v: Statevector, side_a: Iterable[int]) -> np.ndarray:
    """Schmidt coefficients of the normalized state across side_a : rest."""
    side_a = sorted(set(side_a))
    if not side_a or len(side_a) >= v.n:
        raise ValidationError(f"side {side_a} must be a nonempty proper subset of {v.n} qudits")
    _check_targets(side_a, v.n)
    rest = [q for q in range(v.n) if q not in side_a]
    m = np.transpose(v.as_tensor(), side_a + rest).reshape(v.d ** len(side_a), -1)
    s = scipy.linalg.svdvals(m / v.norm())
    return s[s > NumericsConfig.SCHMIDT_FLOOR * s[0]]


def sv_truncate(v: Statevector, side_a: Iterable[int], rank: int) -> Statevector:
    """Best rank-limited approximation across a bipartition, renormalized."""
    side_a = sorted(set(side_a))
    rest = [q for q in range(v.n) if q not in side_a]
    order = side_a + rest
    m = np.transpose(v.as_tensor(), order).reshape(v.d ** len(side_a), -1)
    u, s, vh = scipy.linalg.svd(m, full_matrices=False)
    approx = (u[:, :rank] * s[:rank]) @ vh[:rank, :]
    tensor = approx.reshape((v.d,) * v.n)
    tensor = np.transpose(tensor, np.argsort(order))
    out = Statevector(v.n, v.d, tensor.reshape(-1))
    return out.normalized()


def sv_inner(v: Statevector, w: Statevector) -> complex:
    """<v|w>."""
    return complex(np.vdot(v.amplitudes, w.amplitudes))


def sv_expectation(v: Statevector, obs: np.ndarray, targets: Sequence[int]) -> float:
    targets = _check_targets(targets, v.n)
    out = _apply_on_axes(v.as_tensor(), np.asarray(obs, dtype=np.complex128), targets, v.d)
    return float(np.real(np.vdot(v.amplitudes, out.reshape(-1))))


def sv_measure_branch(v: Statevector, target: int, operator: np.ndarray) -> Tuple[float, Optional[Statevector]]:
    """
    Probability and normalized post-measurement state of one outcome.

    Returns (p, None) when p is below the minimum probability.
    """
    _check_targets([target], v.n)
    out = _apply_on_axes(v.as_tensor(), np.asarray(operator, dtype=np.complex128), [target], v.d)
    post = out.reshape(-1)
    p = float(np.real(np.vdot(post, post)))
    if p < NumericsConfig.MIN_PROBABILITY:
        return p, None
    return p, Statevector(v.n, v.d, post / np.sqrt(p))


def sv_cluster_state(edges: Iterable[Tuple[int, int]], n: int) -> Statevector:
    """|+>^n followed by CZ on every graph edge."""
    plus = np.array([1, 1]) / np.sqrt(2)
    v = product_statevector([plus] * n)
    for u, w in edges:
        v = sv_apply_gate(v, GateOp(named_matrix("CZ"), (u, w)))
    return v


# ----------------------------------------------------------------------
# Hamiltonians
# ----------------------------------------------------------------------

def check_operator_budget(n: int, d: int) -> int:
    dim = d ** n
    if dim > OracleConfig.MAX_OPERATOR_DIMENSION:
        raise BudgetExceededError(
            f"dense operator of dimension {dim} exceeds the budget of {OracleConfig.MAX_OPERATOR_DIMENSION}"
        )
    return dim


def dense_hamiltonian(h) -> np.ndarray:
    """Dense matrix of a HamiltonianSpec in the big-endian basis."""
    dim = check_operator_budget(h.n, h.d)
    identity = np.eye(dim, dtype=np.complex128).reshape((h.d,) * h.n + (dim,))
    total = np.zeros((dim, dim), dtype=np.complex128)
    for term in h.terms:
        total += _apply_on_axes(identity, term.matrix, term.sites, h.d).reshape(dim, dim)
    return total


def sv_evolve_exact(v: Statevector, h, t: float, imaginary: bool = False) -> Statevector:
    """
    exp(-iHt)|v>, or exp(-Ht)|v> renormalized in imaginary mode.

    Uses the eigendecomposition of the dense Hamiltonian.
    """
    if (h.n, h.d) != (v.n, v.d):
        raise ValidationError(f"Hamiltonian on n={h.n}, d={h.d} vs state n={v.n}, d={v.d}")
    energies, vectors = scipy.linalg.eigh(dense_hamiltonian(h))
    coefficients = vectors.conj().T @ v.amplitudes
    if imaginary:
        # shift by the ground energy so the largest factor is 1
        coefficients = coefficients * np.exp(-(energies - energies[0]) * t)
        out = vectors @ coefficients
        return Statevector(v.n, v.d, out / np.linalg.norm(out))
    return Statevector(v.n, v.d, vectors @ (coefficients * np.exp(-1j * energies * t)))


def sv_ground_state(h) -> Tuple[float, Statevector]:
    """Lowest eigenvalue and one eigenvector of the dense Hamiltonian."""
    energies, vectors = scipy.linalg.eigh(dense_hamiltonian(h), subset_by_index=[0, 0])
    logger.debug(f"Exact ground energy of {getattr(h, 'name', 'H')} (n={h.n}): {energies[0]:.12f}")
    return float(energies[0]), Statevector(h.n, h.d, vectors[:, 0])

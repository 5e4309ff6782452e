"""
Tensor Kernel

Dense complex tensor primitives used by every other module: permutation,
pairwise contraction, truncated SVD and Hermitian eigendecomposition.

Tensors are C-ordered ``numpy.ndarray`` objects of dtype complex128, so the
row-major index order of the data is the axis order of the array.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import opt_einsum as oe
import scipy.linalg

from config import NumericsConfig, get_logger
from errors import NumericalError, ValidationError

logger = get_logger(__name__)

DenseTensor = np.ndarray


@dataclass
class SvdResult:
    """Truncated SVD of a tensor split into a left and a right index group."""

    left: DenseTensor  # shape (*left_dims, k), isometric over the last index
    singular_values: np.ndarray  # shape (k,), non-increasing
    right: DenseTensor  # shape (k, *right_dims), isometric over the first index
    discarded_weight: float

    @property
    def rank(self) -> int:
        return len(self.singular_values)


def as_tensor(data) -> DenseTensor:
    """Return ``data`` as a C-ordered complex128 array."""
    return np.ascontiguousarray(data, dtype=np.complex128)


def _check_finite(t: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(t)):
        raise NumericalError(f"{what}: input contains non-finite entries")


def permute(t: DenseTensor, order: Sequence[int]) -> DenseTensor:
    """
    Reorder the indices of a tensor.

    Args:
        t: Input tensor
        order: New position -> old index, a permutation of 0..rank-1

    Returns:
        Tensor whose index i is the old index order[i]
    """
    order = list(order)
    if len(order) != t.ndim or sorted(order) != list(range(t.ndim)):
        raise ValidationError(f"invalid permutation {order} for a rank-{t.ndim} tensor")
    return np.ascontiguousarray(np.transpose(t, order))


def inverse_permutation(order: Sequence[int]) -> Tuple[int, ...]:
    inverse = [0] * len(order)
    for position, index in enumerate(order):
        inverse[index] = position
    return tuple(inverse)


def contract(a: DenseTensor, b: DenseTensor, pairs: Sequence[Tuple[int, int]]) -> DenseTensor:
    """
    Contract two tensors over paired indices.

    The result carries a's unpaired indices followed by b's unpaired indices,
    each group in its original order.

    Args:
        a: First tensor
        b: Second tensor
        pairs: (index of a, index of b) pairs summed over
    """
    a_axes = [p[0] for p in pairs]
    b_axes = [p[1] for p in pairs]
    if len(set(a_axes)) != len(a_axes) or len(set(b_axes)) != len(b_axes):
        raise ValidationError(f"an index is paired twice in {list(pairs)}")
    for i, j in pairs:
        if not (0 <= i < a.ndim and 0 <= j < b.ndim):
            raise ValidationError(f"pair ({i}, {j}) out of range for ranks {a.ndim}, {b.ndim}")
        if a.shape[i] != b.shape[j]:
            raise ValidationError(
                f"dimension mismatch on pair ({i}, {j}): {a.shape[i]} != {b.shape[j]}"
            )
    return np.tensordot(a, b, axes=(a_axes, b_axes))


def contract_network(subscripts: str, *operands: np.ndarray) -> np.ndarray:
    """Contract several tensors given in einsum notation with an optimized path."""
    return oe.contract(subscripts, *operands, optimize="auto")


def truncation_rank(
    singular_values: np.ndarray,
    max_rank: Optional[int] = None,
    cutoff: float = 0.0,
    floor: float = 0.0,
) -> int:
    """
    Number of leading singular values to keep.

    The rank cap is applied first; then values with s^2 < cutoff * sum(s^2)
    and values with s < floor * s_max are dropped. At least one value is kept.
    """
    k = len(singular_values)
    if k == 0:
        return 0
    if max_rank is not None:
        k = min(k, max_rank)
    total = float(np.sum(singular_values ** 2))
    if total > 0 and cutoff > 0:
        keep = singular_values[:k] ** 2 >= cutoff * total
        k = int(np.count_nonzero(keep))
    if floor > 0:
        s_max = singular_values[0]
        k = int(np.count_nonzero(singular_values[:k] >= floor * s_max))
    return max(k, 1)


def svd_split(
    t: DenseTensor,
    left_indices: Sequence[int],
    max_rank: Optional[int] = None,
    cutoff: float = 0.0,
    floor: float = 0.0,
) -> SvdResult:
    """
    Split a tensor by SVD across a bipartition of its indices.

    Args:
        t: Tensor to split
        left_indices: Indices grouped into the rows, in this order; the remaining
            indices form the columns in their original order
        max_rank: Keep at most this many singular values (None = unbounded)
        cutoff: Drop s with s^2 < cutoff * sum(s^2)
        floor: Drop s with s < floor * s_max (numerically-zero values)

    Returns:
        SvdResult with left of shape (*left_dims, k) and right of shape (k, *right_dims)
    """
    left_indices = list(left_indices)
    right_indices = [i for i in range(t.ndim) if i not in left_indices]
    if not left_indices or not right_indices or len(set(left_indices)) != len(left_indices):
        raise ValidationError(
            f"left_indices {left_indices} must be a nonempty proper subset of {t.ndim} indices"
        )
    _check_finite(t, "svd_split")

    left_dims = [t.shape[i] for i in left_indices]
    right_dims = [t.shape[i] for i in right_indices]
    matrix = permute(t, left_indices + right_indices).reshape(
        int(np.prod(left_dims)), int(np.prod(right_dims))
    )
    try:
        u, s, vh = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError):
        logger.debug("gesdd did not converge, retrying with gesvd")
        try:
            u, s, vh = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")
        except (np.linalg.LinAlgError, ValueError) as e:
            raise NumericalError(f"SVD failed: {e}") from e

    k = truncation_rank(s, max_rank=max_rank, cutoff=cutoff, floor=floor)
    discarded = float(np.sum(s[k:] ** 2))
    return SvdResult(
        left=np.ascontiguousarray(u[:, :k]).reshape(*left_dims, k),
        singular_values=np.array(s[:k], dtype=np.float64),
        right=np.ascontiguousarray(vh[:k, :]).reshape(k, *right_dims),
        discarded_weight=discarded,
    )


def eigh(m: np.ndarray, tolerance: float = NumericsConfig.HERMITIAN_TOLERANCE) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a Hermitian matrix.

    The input is symmetrized as (m + m^dagger)/2 to absorb rounding noise.

    Returns:
        (eigenvalues non-increasing, unitary matrix of eigenvectors as columns)
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"eigh needs a square matrix, got shape {m.shape}")
    _check_finite(m, "eigh")
    if np.linalg.norm(m - m.conj().T) > tolerance * np.linalg.norm(m):
        raise ValidationError("eigh: matrix is not Hermitian within tolerance")
    hermitian = 0.5 * (m + m.conj().T)
    try:
        values, vectors = scipy.linalg.eigh(hermitian)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"eigendecomposition failed: {e}") from e
    return values[::-1].copy(), np.ascontiguousarray(vectors[:, ::-1])

"""Sparse storage, direct factorization and block orthogonalization kernels.

Sparse matrices are scipy CSC matrices; dense blocks are column-major
float64 ndarrays of shape (n, k). Every other service builds on these.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from eksmor.core.config import settings
from eksmor.core.exceptions import DimensionMismatchError, SingularMatrixError
from eksmor.core.logger import logger

SparseMatrix = sp.csc_matrix
DenseBlock = npt.NDArray[np.float64]


def assemble(
    rows: Sequence[int],
    cols: Sequence[int],
    values: Sequence[float],
    shape: Tuple[int, int],
) -> SparseMatrix:
    """Build a CSC matrix from triplets; duplicate (row, col) pairs are summed."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if not (len(rows) == len(cols) == len(values)):
        raise DimensionMismatchError("triplet arrays differ in length", stage="assemble")
    if len(rows) and (
        rows.min() < 0 or cols.min() < 0 or rows.max() >= shape[0] or cols.max() >= shape[1]
    ):
        raise DimensionMismatchError(f"triplet index outside {shape}", stage="assemble")
    if not np.all(np.isfinite(values)):
        raise DimensionMismatchError("non-finite matrix entry", stage="assemble")
    matrix = sp.coo_matrix((values, (rows, cols)), shape=shape).tocsc()
    matrix.sum_duplicates()
    return matrix


def block_matrix(
    blocks: Sequence[Sequence[Optional[object]]],
    row_sizes: Sequence[int],
    col_sizes: Sequence[int],
) -> SparseMatrix:
    """Sparse block matrix; `None` blocks are zero. Zero-sized blocks are allowed."""
    row_offsets = np.concatenate([[0], np.cumsum(row_sizes)]).astype(np.int64)
    col_offsets = np.concatenate([[0], np.cumsum(col_sizes)]).astype(np.int64)
    rows, cols, values = [], [], []
    for bi, block_row in enumerate(blocks):
        for bj, block in enumerate(block_row):
            if block is None:
                continue
            block = sp.coo_matrix(block)
            if block.shape != (row_sizes[bi], col_sizes[bj]):
                raise DimensionMismatchError(
                    f"block ({bi}, {bj}) has shape {block.shape}, "
                    f"expected {(row_sizes[bi], col_sizes[bj])}"
                )
            rows.append(block.row + row_offsets[bi])
            cols.append(block.col + col_offsets[bj])
            values.append(block.data)
    shape = (int(row_offsets[-1]), int(col_offsets[-1]))
    if not rows:
        return sp.csc_matrix(shape)
    return assemble(np.concatenate(rows), np.concatenate(cols), np.concatenate(values), shape)


def as_sparse(matrix) -> SparseMatrix:
    matrix = sp.csc_matrix(matrix, dtype=np.float64)
    if not np.all(np.isfinite(matrix.data)):
        raise DimensionMismatchError("non-finite matrix entry", stage="assemble")
    return matrix


def as_block(values) -> DenseBlock:
    if sp.issparse(values):
        values = values.toarray()
    block = np.asarray(values, dtype=np.float64)
    if block.ndim == 1:
        block = block.reshape(-1, 1)
    return np.asfortranarray(block)


def is_symmetric(matrix: SparseMatrix, tol: float = 0.0) -> bool:
    if matrix.shape[0] != matrix.shape[1]:
        return False
    diff = abs(matrix - matrix.T)
    return diff.nnz == 0 or diff.max() <= tol


def _deficient_columns(matrix: SparseMatrix) -> List[int]:
    # Empty columns first, then isolated blocks whose rows sum to zero
    # (floating conductance clusters).
    col_mass = np.asarray(abs(matrix).sum(axis=0)).ravel()
    empty = np.flatnonzero(col_mass == 0)
    if len(empty):
        return empty.tolist()

    _, labels = connected_components(matrix, directed=False)
    row_sums = np.abs(np.asarray(matrix.sum(axis=1)).ravel())
    diag = np.abs(matrix.diagonal())
    columns: List[int] = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        if row_sums[members].sum() <= 1e-12 * max(diag[members].sum(), 1e-300):
            columns.extend(members.tolist())
    return columns


class Factorization:
    """Reusable sparse LU factorization (SuperLU, COLAMD column ordering).

    A singular matrix does not raise at construction time; `singular` is set
    and `pivot`/`columns` describe the offending pivot. Solving against a
    singular factorization raises SingularMatrixError. Instances are never
    mutated after construction, so concurrent solves are safe.
    """

    def __init__(
        self,
        matrix: SparseMatrix,
        lu=None,
        singular: bool = False,
        pivot: float = 0.0,
        columns: Sequence[int] = (),
    ):
        self.matrix = matrix
        self._lu = lu
        self.singular = singular
        self.pivot = pivot
        self.columns = list(columns)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def solve(self, rhs, trans: str = "N") -> DenseBlock:
        """Solve with the matrix (`trans="N"`) or its transpose (`trans="T"`)."""
        if self.singular:
            raise SingularMatrixError(
                "cannot solve with a singular factorization",
                pivot=self.pivot,
                columns=self.columns,
            )
        block = as_block(rhs)
        if block.shape[0] != self.n:
            raise DimensionMismatchError(
                f"right-hand side has {block.shape[0]} rows, matrix order is {self.n}"
            )
        if block.shape[1] == 0 or self.n == 0:
            return np.zeros(block.shape, order="F")
        return np.asfortranarray(self._lu.solve(np.ascontiguousarray(block), trans=trans))


def factorize(matrix, pivot_tol: Optional[float] = None) -> Factorization:
    matrix = as_sparse(matrix)
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"cannot factorize non-square matrix {matrix.shape}")
    if matrix.shape[0] == 0:
        return Factorization(matrix)
    pivot_tol = settings.PIVOT_TOL if pivot_tol is None else pivot_tol

    try:
        lu = splu(matrix, permc_spec="COLAMD")
    except RuntimeError as e:
        columns = _deficient_columns(matrix)
        logger.warning(f"Factorization hit an exact zero pivot ({e}); columns {columns[:10]}")
        return Factorization(matrix, singular=True, pivot=0.0, columns=columns)

    pivots = np.abs(lu.U.diagonal())
    # U column j belongs to original column k with perm_c[k] == j
    inverse = np.empty_like(lu.perm_c)
    inverse[lu.perm_c] = np.arange(len(lu.perm_c))
    column_scale = np.asarray(abs(matrix).max(axis=0).todense()).ravel()
    relative = pivots / np.maximum(column_scale[inverse], 1e-300)
    position = int(np.argmin(relative))
    if relative[position] <= pivot_tol:
        column = int(inverse[position])
        logger.warning(
            f"Factorization pivot {pivots[position]:.3e} below tolerance at column {column}"
        )
        return Factorization(
            matrix, lu, singular=True, pivot=float(pivots[position]), columns=[column]
        )

    return Factorization(matrix, lu, pivot=float(pivots[position]))


def solve(factorization: Factorization, rhs, trans: str = "N") -> DenseBlock:
    return factorization.solve(rhs, trans=trans)


def spmm(matrix: SparseMatrix, block) -> DenseBlock:
    block = as_block(block)
    if matrix.shape[1] != block.shape[0]:
        raise DimensionMismatchError(
            f"cannot multiply {matrix.shape} by {block.shape}"
        )
    return as_block(matrix @ block)


def column_norms(block) -> np.ndarray:
    return np.linalg.norm(as_block(block), axis=0)


def mgs(
    block,
    tol: Optional[float] = None,
    reference_norms: Optional[Sequence[float]] = None,
) -> Tuple[DenseBlock, List[int]]:
    """Modified Gram-Schmidt with one reorthogonalization pass and deflation.

    Returns the orthonormal columns and the input indices that survived.
    A column is dropped when its norm after orthogonalization falls below
    `tol` times its reference norm (its own norm unless `reference_norms`
    supplies the norm it had before an earlier projection).
    """
    tol = settings.RANK_TOL if tol is None else tol
    block = as_block(block)
    n, k = block.shape
    if reference_norms is None:
        reference_norms = column_norms(block)
    basis = np.zeros((n, k), order="F")
    kept: List[int] = []

    for j in range(k):
        v = block[:, j].copy()
        reference = reference_norms[j]
        if reference == 0.0 or not np.any(v):
            continue
        for _ in range(2):
            for i in range(len(kept)):
                q = basis[:, i]
                v -= q * (q @ v)
        residual = np.linalg.norm(v)
        if residual < tol * reference:
            continue
        basis[:, len(kept)] = v / residual
        kept.append(j)

    return np.asfortranarray(basis[:, :len(kept)]), kept


def qr_orth(block, tol: Optional[float] = None) -> DenseBlock:
    block = as_block(block)
    basis, kept = mgs(block, tol)
    if block.shape[1] and not kept:
        logger.warning("qr_orth: every column deflated, returning an empty basis")
    return basis


def orth_wrt(
    block,
    basis,
    p: int,
    block_sizes: Optional[Sequence[int]] = None,
) -> DenseBlock:
    """Orthogonalize `block` against the orthonormal columns of `basis`.

    The basis is swept block by block (widths 2p unless `block_sizes` gives
    the actual widths), and the whole sweep is repeated once.
    """
    block = as_block(block)
    basis = as_block(basis)
    if block.shape[0] != basis.shape[0]:
        raise DimensionMismatchError(
            f"block has {block.shape[0]} rows, basis has {basis.shape[0]}"
        )
    if block_sizes is None:
        width = 2 * p
        if width <= 0 or basis.shape[1] % width:
            raise DimensionMismatchError(
                f"basis with {basis.shape[1]} columns is not made of blocks of 2p = {width}"
            )
        block_sizes = [width] * (basis.shape[1] // width)
    elif sum(block_sizes) != basis.shape[1]:
        raise DimensionMismatchError(
            f"block sizes sum to {sum(block_sizes)}, basis has {basis.shape[1]} columns"
        )

    result = block.copy(order="F")
    for _ in range(2):
        start = 0
        for size in block_sizes:
            panel = basis[:, start:start + size]
            result -= panel @ (panel.T @ result)
            start += size
    return result


def max_orthogonality_error(basis) -> float:
    basis = as_block(basis)
    if basis.shape[1] == 0:
        return 0.0
    return float(np.abs(basis.T @ basis - np.eye(basis.shape[1])).max())

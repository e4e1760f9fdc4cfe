import os
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.io import mmread, mmwrite

from eksmor.core.exceptions import RepositoryError


def matrix_path(directory: str, name: str) -> str:
    return os.path.join(directory, f"{name}.mtx")


def write_matrix(directory: str, name: str, matrix) -> Optional[str]:
    """Write a sparse (coordinate) or dense (array) Matrix Market file.

    Matrices with a zero dimension are not written; readers rebuild them
    from the shape recorded in the manifest.
    """
    if 0 in matrix.shape:
        return None
    path = matrix_path(directory, name)
    try:
        if sp.issparse(matrix):
            mmwrite(path, sp.coo_matrix(matrix))
        else:
            mmwrite(path, np.atleast_2d(np.asarray(matrix, dtype=np.float64)))
    except OSError as e:
        raise RepositoryError(f"cannot write {path}: {e}")
    return path


def read_matrix(directory: str, name: str, shape: Tuple[int, int], dense: bool = False):
    if 0 in shape:
        return np.zeros(shape) if dense else sp.csc_matrix(shape)
    path = matrix_path(directory, name)
    if not os.path.exists(path):
        raise RepositoryError(f"missing matrix file {path}")
    try:
        matrix = mmread(path)
    except (OSError, ValueError) as e:
        raise RepositoryError(f"cannot read {path}: {e}")
    if matrix.shape != tuple(shape):
        raise RepositoryError(f"{path} has shape {matrix.shape}, manifest says {tuple(shape)}")
    if dense:
        return matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=np.float64)
    return sp.csc_matrix(matrix, dtype=np.float64)

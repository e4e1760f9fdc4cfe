"""Elimination of capacitance-free nodes from singular MNA models.

Nodes whose capacitance row and column are empty carry algebraic equations
only. They are enumerated last and eliminated through G22; the regularized
model keeps E = diag(C1, M) nonsingular. Its dense system matrix is never
formed on the reduction path: products go through a sparse solve with G22
and solves go through a sparse bordered matrix that keeps G22 as extra
unknowns.
"""
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from eksmor.core.config import settings
from eksmor.core.exceptions import DenseCapExceededError, DimensionMismatchError, SingularMatrixError
from eksmor.core.logger import logger
from eksmor.models.descriptor import DescriptorModel
from eksmor.models.partitioned import PartitionedModel
from eksmor.services.sparse_core import DenseBlock, as_block, block_matrix, factorize, spmm

REGULAR = "regular"


def capacitance_free_nodes(model: DescriptorModel, cap_tol: Optional[float] = None) -> np.ndarray:
    tol = settings.CAP_ZERO_TOL if cap_tol is None else cap_tol
    C = abs(model.C)
    rows = np.asarray(C.max(axis=1).todense()).ravel()
    cols = np.asarray(C.max(axis=0).todense()).ravel()
    return np.flatnonzero(np.maximum(rows, cols) <= tol)


def detect_and_partition(
    model: DescriptorModel,
    cap_tol: Optional[float] = None,
) -> Union[PartitionedModel, str]:
    eliminated = capacitance_free_nodes(model, cap_tol)
    if len(eliminated) == 0:
        logger.info("Capacitance matrix has no empty rows, model is regular")
        return REGULAR
    logger.info(f"Found {len(eliminated)} capacitance-free nodes out of {model.n}")
    return partition(model, eliminated)


def partition(model: DescriptorModel, eliminated: Sequence[int]) -> PartitionedModel:
    eliminated = np.unique(np.asarray(eliminated, dtype=np.int64))
    mask = np.ones(model.n, dtype=bool)
    mask[eliminated] = False
    kept = np.flatnonzero(mask)
    if len(kept) + model.m == 0:
        raise SingularMatrixError(
            "every state is algebraic, nothing is left to reduce", stage="regularize"
        )
    permutation = np.concatenate([kept, eliminated])
    n1, n2, m = len(kept), len(eliminated), model.m

    G = model.G
    G11 = G[kept][:, kept].tocsc()
    G12 = G[kept][:, eliminated].tocsc()
    G22 = G[eliminated][:, eliminated].tocsc()
    W1 = model.W[kept].tocsc()
    W2 = model.W[eliminated].tocsc()
    C1 = model.C[kept][:, kept].tocsc()
    warnings = []
    if np.any(C1.diagonal() == 0):
        warnings.append("retained capacitance block has zero diagonal entries")
        logger.warning(warnings[-1])

    F22 = factorize(G22)
    names = model.node_names
    if F22.singular:
        nodes = [names[eliminated[c]] if names else str(eliminated[c]) for c in F22.columns]
        logger.error(f"G22 is singular; capacitance-free nodes without a resistive path: {nodes[:10]}")
        raise SingularMatrixError(
            "conductance block of the capacitance-free nodes is singular; each of them needs a "
            "resistive path to ground",
            pivot=F22.pivot,
            columns=[int(eliminated[c]) for c in F22.columns],
            nodes=nodes,
            stage="regularize",
        )

    bordered = block_matrix(
        [
            [-G11, -W1, -G12],
            [W1.T, None, W2.T],
            [-G12.T, -W2, -G22],
        ],
        [n1, m, n2],
        [n1, m, n2],
    )
    bordered_factorization = factorize(bordered)
    if bordered_factorization.singular:
        warnings.append("bordered matrix is singular, the regularized system matrix has no inverse")
        logger.warning(warnings[-1])

    logger.info(f"Partitioned model: n1={n1}, n2={n2}, m={m}, regularized order {n1 + m}")
    return PartitionedModel(
        permutation=permutation,
        n1=n1, n2=n2, m=m, p=model.p, q=model.q,
        G11=G11, G12=G12, G22=G22, W1=W1, W2=W2, C1=C1, M=model.M,
        B1=model.B1[kept].tocsc(), B2=model.B1[eliminated].tocsc(),
        L1=model.L1[:, kept].tocsc(), L2=model.L1[:, eliminated].tocsc(),
        D=model.D,
        F22=F22,
        bordered=bordered_factorization,
        node_names=list(names),
        port_names=list(model.port_names),
        warnings=warnings,
    )


def build_rhs(pm: PartitionedModel) -> Tuple[DenseBlock, DenseBlock]:
    """Regularized input and (transposed) output matrices.

    Uses p solves with G22 for the inputs and q transposed solves for the
    outputs.
    """
    Y = pm.F22.solve(pm.B2)
    B_reg = np.vstack([
        as_block(pm.B1) - spmm(pm.G12, Y),
        spmm(pm.W2.T.tocsc(), Y),
    ])
    Z = pm.F22.solve(pm.L2.T, trans="T")
    L_reg = np.vstack([
        as_block(pm.L1.T) - spmm(pm.G12, Z),
        -spmm(pm.W2.T.tocsc(), Z),
    ])
    return np.asfortranarray(B_reg), np.asfortranarray(L_reg)


def feedthrough(pm: PartitionedModel) -> DenseBlock:
    """D + L2 G22^-1 B2: the direct path through the eliminated nodes."""
    return as_block(pm.D) + spmm(pm.L2, pm.F22.solve(pm.B2))


def _split(pm: PartitionedModel, K) -> Tuple[DenseBlock, DenseBlock]:
    K = as_block(K)
    if K.shape[0] != pm.order:
        raise DimensionMismatchError(
            f"block has {K.shape[0]} rows, regularized order is {pm.order}", stage="regularize"
        )
    return K[:pm.n1], K[pm.n1:]


def bordered_solve(pm: PartitionedModel, R1, R2) -> Tuple[DenseBlock, DenseBlock]:
    R1, R2 = as_block(R1), as_block(R2)
    if R1.shape[0] != pm.n1 or R2.shape[0] != pm.m or R1.shape[1] != R2.shape[1]:
        raise DimensionMismatchError(
            f"right-hand sides {R1.shape} and {R2.shape} do not conform to n1={pm.n1}, m={pm.m}",
            stage="regularize",
        )
    if pm.bordered.singular:
        raise SingularMatrixError(
            "bordered matrix is singular",
            pivot=pm.bordered.pivot,
            columns=pm.bordered.columns,
            stage="regularize",
        )
    rhs = np.vstack([R1, R2, np.zeros((pm.n2, R1.shape[1]))])
    solution = pm.bordered.solve(rhs)
    return solution[:pm.n1], solution[pm.n1:pm.n1 + pm.m]


def apply_A(pm: PartitionedModel, K) -> DenseBlock:
    K1, K2 = _split(pm, K)
    X = pm.F22.solve(-spmm(pm.G12.T.tocsc(), K1) - spmm(pm.W2, K2))
    top = -spmm(pm.G11, K1) - spmm(pm.W1, K2) - spmm(pm.G12, X)
    bottom = spmm(pm.W1.T.tocsc(), K1) + spmm(pm.W2.T.tocsc(), X)
    return np.asfortranarray(np.vstack([top, bottom]))


def build_dense_A(pm: PartitionedModel, cap: Optional[int] = None) -> DenseBlock:
    cap = settings.DENSE_A_CAP if cap is None else cap
    if pm.order > cap:
        raise DenseCapExceededError(pm.order, cap, "regularized system matrix")
    # left solves, one row of G22^-1 G12^T (resp. G22^-1 W2) per eliminated node
    Y1 = pm.F22.solve(pm.G12.T)
    Y2 = pm.F22.solve(pm.W2)
    G12 = pm.G12.toarray()
    W2T = pm.W2.T.toarray()
    top = np.hstack([-(pm.G11.toarray() - G12 @ Y1), -(pm.W1.toarray() - G12 @ Y2)])
    bottom = np.hstack([pm.W1.T.toarray() - W2T @ Y1, -(W2T @ Y2)])
    return np.asfortranarray(np.vstack([top, bottom]))


def recover_v2(pm: PartitionedModel, v1, i, u) -> DenseBlock:
    v1, i, u = as_block(v1), as_block(i), as_block(u)
    if v1.shape[0] != pm.n1 or i.shape[0] != pm.m or u.shape[0] != pm.p:
        raise DimensionMismatchError(
            f"v1 {v1.shape}, i {i.shape}, u {u.shape} do not conform to the partition",
            stage="regularize",
        )
    if not (v1.shape[1] == i.shape[1] == u.shape[1]):
        raise DimensionMismatchError("v1, i and u differ in column count", stage="regularize")
    return pm.F22.solve(spmm(pm.B2, u) - spmm(pm.G12.T.tocsc(), v1) - spmm(pm.W2, i))


def permuted_capacitance(model: DescriptorModel, pm: PartitionedModel) -> sp.csc_matrix:
    perm = pm.permutation
    return model.C[perm][:, perm].tocsc()

"""Krylov projection bases, one-sided projection and moment oracles.

A_E = A^-1 E drives the forward (s = 0) direction and its inverse E^-1 A the
backward (s = infinity) direction. Both are applied matrix-free through
sparse factorizations, for a regularized model through the bordered matrix.
"""
import math
from typing import Any, Callable, List, Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla
from pydantic import BaseModel, ConfigDict, Field

from eksmor.core.config import settings
from eksmor.core.exceptions import (
    CapacitanceError,
    DenseCapExceededError,
    DimensionMismatchError,
    EmptyBasisError,
    ReductionError,
    SingularMatrixError,
)
from eksmor.core.logger import logger
from eksmor.models.descriptor import DescriptorModel
from eksmor.models.partitioned import PartitionedModel
from eksmor.models.reduction import BlockEntry, ProjectionBasis, ReducedModel, SubspaceKind
from eksmor.services import regularize_service
from eksmor.services.sparse_core import (
    DenseBlock,
    as_block,
    column_norms,
    factorize,
    mgs,
    orth_wrt,
    spmm,
)

BlockMap = Callable[[DenseBlock], DenseBlock]

METHOD_NAMES = {SubspaceKind.STANDARD: "mm", SubspaceKind.EXTENDED: "eks"}


class OperatorPair:
    """Matrix-free A, A^-1, E and E^-1 products of one (regularized) model.

    `solve_E` is None when E is singular; the backward direction is then
    unavailable and `apply_AEinv` refuses, naming `zero_cap_nodes`.
    """

    def __init__(
        self,
        order: int,
        apply_A: BlockMap,
        solve_A: BlockMap,
        apply_E: BlockMap,
        solve_E: Optional[BlockMap] = None,
        zero_cap_nodes: Sequence[str] = (),
    ):
        self.order = order
        self.apply_A = apply_A
        self.solve_A = solve_A
        self.apply_E = apply_E
        self.solve_E = solve_E
        self.zero_cap_nodes = list(zero_cap_nodes)

    @property
    def supports_extended(self) -> bool:
        return self.solve_E is not None

    def require_extended(self):
        if not self.supports_extended:
            raise CapacitanceError(
                "E is singular, the extended subspace needs E^-1; regularize the model or add "
                "capacitance at",
                nodes=self.zero_cap_nodes,
            )

    def apply_AE(self, block) -> DenseBlock:
        return self.solve_A(self.apply_E(block))

    def apply_AEinv(self, block) -> DenseBlock:
        self.require_extended()
        return self.solve_E(self.apply_A(block))


class ReducibleSystem(BaseModel):
    """Operators plus the dense input/output maps of the model being reduced."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    operators: Any
    E: Any
    B: Any
    L: Any
    D: Any
    regularized: bool = False
    original_order: int
    port_names: List[str] = Field(default_factory=list)

    @property
    def order(self) -> int:
        return self.operators.order

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def q(self) -> int:
        return self.L.shape[0]

    def input_column(self, port: int) -> DenseBlock:
        if not 0 <= port < self.p:
            raise DimensionMismatchError(f"port {port} outside 0..{self.p - 1}")
        return self.B[:, [port]]


def _solve_E(E, labels: Callable[[int], str]):
    F = factorize(E)
    if not F.singular:
        return F.solve, []
    return None, [labels(c) for c in F.columns]


def make_operators(model: Union[DescriptorModel, PartitionedModel]) -> OperatorPair:
    if isinstance(model, PartitionedModel):
        pm = model
        n1 = pm.n1

        def solve_A(block):
            block = as_block(block)
            X1, X2 = regularize_service.bordered_solve(pm, block[:n1], block[n1:])
            return np.asfortranarray(np.vstack([X1, X2]))

        def label(column: int) -> str:
            if column >= n1:
                return f"branch{column - n1}"
            node = int(pm.permutation[column])
            return pm.node_names[node] if pm.node_names else str(node)

        E = pm.E
        solve_E, singular_columns = _solve_E(E, label)
        return OperatorPair(
            order=pm.order,
            apply_A=lambda block: regularize_service.apply_A(pm, block),
            solve_A=solve_A,
            apply_E=lambda block: spmm(E, block),
            solve_E=solve_E,
            zero_cap_nodes=singular_columns,
        )

    FA = factorize(model.A)
    if FA.singular:
        raise SingularMatrixError(
            "system matrix A is singular, moments at s = 0 do not exist",
            pivot=FA.pivot,
            columns=FA.columns,
            nodes=[model.node_label(c) for c in FA.columns],
        )
    A, E = model.A, model.E
    solve_E, singular_columns = _solve_E(E, model.node_label)
    if solve_E is None:
        zero_cap = regularize_service.capacitance_free_nodes(model)
        if len(zero_cap):
            singular_columns = [model.node_label(i) for i in zero_cap]
    return OperatorPair(
        order=model.order,
        apply_A=lambda block: spmm(A, block),
        solve_A=FA.solve,
        apply_E=lambda block: spmm(E, block),
        solve_E=solve_E,
        zero_cap_nodes=singular_columns,
    )


def as_system(model: Union[DescriptorModel, PartitionedModel, ReducibleSystem]) -> ReducibleSystem:
    if isinstance(model, ReducibleSystem):
        return model
    operators = make_operators(model)
    if isinstance(model, PartitionedModel):
        B_reg, L_reg = regularize_service.build_rhs(model)
        return ReducibleSystem(
            operators=operators,
            E=model.E,
            B=B_reg,
            L=np.asfortranarray(L_reg.T),
            D=regularize_service.feedthrough(model),
            regularized=True,
            original_order=model.original_order,
            port_names=list(model.port_names),
        )
    return ReducibleSystem(
        operators=operators,
        E=model.E,
        B=as_block(model.B),
        L=as_block(model.L),
        D=as_block(model.D),
        original_order=model.order,
        port_names=list(model.port_names),
    )


def _check_start(B_E, order: int) -> DenseBlock:
    B_E = as_block(B_E)
    if B_E.shape[0] != order:
        raise DimensionMismatchError(f"start block has {B_E.shape[0]} rows, operator order is {order}")
    return B_E


def standard_basis(
    ops: OperatorPair,
    B_E,
    k: int,
    tol: Optional[float] = None,
) -> ProjectionBasis:
    """Block Arnoldi over span{B_E, A_E B_E, ..., A_E^(k-1) B_E}."""
    if k < 1:
        raise ReductionError(f"k must be at least 1, got {k}")
    B_E = _check_start(B_E, ops.order)
    p = B_E.shape[1]

    X, kept = mgs(B_E, tol)
    if not kept:
        raise EmptyBasisError("starting block B_E is numerically zero")
    ledger = [BlockEntry(iteration=0, direction="forward", start=0, stop=len(kept))]
    warnings: List[str] = []
    if len(kept) < p:
        warnings.append(f"starting block deflated from {p} to {len(kept)} columns")
    breakdown = False
    effective_k = 1

    for j in range(1, k):
        newest = ledger[-1]
        candidate = ops.apply_AE(X[:, newest.start:newest.stop])
        norms = column_norms(candidate)
        candidate = orth_wrt(candidate, X, p, block_sizes=[e.width for e in ledger])
        Q, kept = mgs(candidate, tol, reference_norms=norms)
        if not kept:
            breakdown = True
            warnings.append(f"breakdown at iteration {j}: every new column deflated")
            logger.warning(f"Standard Arnoldi breakdown at iteration {j}, d={X.shape[1]}")
            break
        if len(kept) < newest.width:
            logger.info(f"Iteration {j}: deflated {newest.width - len(kept)} columns")
        ledger.append(
            BlockEntry(iteration=j, direction="forward", start=X.shape[1], stop=X.shape[1] + len(kept))
        )
        X = np.asfortranarray(np.hstack([X, Q]))
        effective_k = j + 1

    return ProjectionBasis(
        X=X, ledger=ledger, kind=SubspaceKind.STANDARD, k=k,
        effective_k=effective_k, p=p, breakdown=breakdown, warnings=warnings,
    )


def extended_basis(
    ops: OperatorPair,
    B_E,
    r: int,
    p: Optional[int] = None,
    tol: Optional[float] = None,
) -> ProjectionBasis:
    """Extended Krylov basis spanning A_E^i B_E for i = -k, ..., k-1, with k = r / p.

    Each iteration expands the newest forward block with A_E and the newest
    backward block with A_E^-1. The ledger tracks both so deflation only
    narrows the block that lost rank.
    """
    ops.require_extended()
    B_E = _check_start(B_E, ops.order)
    p = B_E.shape[1] if p is None else p
    if p != B_E.shape[1]:
        raise DimensionMismatchError(f"p = {p} but the start block has {B_E.shape[1]} columns")
    if r < 1:
        raise ReductionError(f"ROM order r must be at least 1, got {r}")
    warnings: List[str] = []
    k = math.ceil(r / p)
    if r % p:
        message = f"r = {r} is not divisible by p = {p}, k rounded up to {k}"
        warnings.append(message)
        logger.warning(message)
    r = k * p

    start = np.hstack([B_E, ops.apply_AEinv(B_E)])
    X, kept = mgs(start, tol)
    if not kept:
        raise EmptyBasisError("starting block [B_E, A_E^-1 B_E] is numerically zero")
    forward = sum(1 for c in kept if c < p)
    ledger = [
        BlockEntry(iteration=0, direction="forward", start=0, stop=forward),
        BlockEntry(iteration=0, direction="backward", start=forward, stop=len(kept)),
    ]
    breakdown = False
    effective_k = 1

    for j in range(1, k):
        newest_forward = next(e for e in reversed(ledger) if e.direction == "forward")
        newest_backward = next(e for e in reversed(ledger) if e.direction == "backward")
        parts = []
        if newest_forward.width:
            parts.append(ops.apply_AE(X[:, newest_forward.start:newest_forward.stop]))
        if newest_backward.width:
            parts.append(ops.apply_AEinv(X[:, newest_backward.start:newest_backward.stop]))
        forward_width = newest_forward.width

        candidate = np.hstack(parts) if parts else np.zeros((ops.order, 0))
        norms = column_norms(candidate)
        candidate = orth_wrt(candidate, X, p, block_sizes=[e.width for e in ledger])
        Q, kept = mgs(candidate, tol, reference_norms=norms)
        if not kept:
            breakdown = True
            warnings.append(f"breakdown at iteration {j}: every new column deflated")
            logger.warning(f"Extended Arnoldi breakdown at iteration {j}, d={X.shape[1]}")
            break

        d = X.shape[1]
        forward = sum(1 for c in kept if c < forward_width)
        ledger.append(BlockEntry(iteration=j, direction="forward", start=d, stop=d + forward))
        ledger.append(BlockEntry(iteration=j, direction="backward", start=d + forward, stop=d + len(kept)))
        X = np.asfortranarray(np.hstack([X, Q]))
        effective_k = j + 1

    if X.shape[1] > 2 * r:
        X = np.asfortranarray(X[:, :2 * r])
        ledger = [
            e.model_copy(update={"stop": min(e.stop, 2 * r), "start": min(e.start, 2 * r)})
            for e in ledger
        ]

    return ProjectionBasis(
        X=X, ledger=ledger, kind=SubspaceKind.EXTENDED, k=k,
        effective_k=effective_k, p=p, breakdown=breakdown, warnings=warnings,
    )


def project(
    system: Union[DescriptorModel, PartitionedModel, ReducibleSystem],
    basis: Union[ProjectionBasis, DenseBlock],
    port: Optional[int] = None,
    method: Optional[str] = None,
) -> ReducedModel:
    """One-sided projection E~ = X^T E X, A~ = X^T A X, B~ = X^T B, L~ = L X."""
    system = as_system(system)
    if isinstance(basis, ProjectionBasis):
        X, k = basis.X, basis.k
        method = method or METHOD_NAMES[basis.kind]
    else:
        X, k = as_block(basis), 0
        method = method or "projection"
    if X.shape[0] != system.order:
        raise DimensionMismatchError(f"basis has {X.shape[0]} rows, model order is {system.order}")

    B = system.B if port is None else system.input_column(port)
    D = system.D if port is None else system.D[:, [port]]
    return ReducedModel(
        E=X.T @ spmm(system.E, X),
        A=X.T @ system.operators.apply_A(X),
        B=X.T @ B,
        L=system.L @ X,
        D=D,
        method=method,
        k=k,
        port=port,
        original_order=system.original_order,
    )


def moments(
    model: Union[DescriptorModel, PartitionedModel, ReducibleSystem],
    i_max: int,
    cap: Optional[int] = None,
) -> List[DenseBlock]:
    """M_0 ... M_i_max with M_i = L (A^-1 E)^i A^-1 B, by repeated sparse solves.

    A direct feed-through D is folded into M_0 as M_0 - D, which leaves the
    moments of a regularized model equal to those of the original one.
    """
    cap = settings.DENSE_ORACLE_CAP if cap is None else cap
    order = model.order if not isinstance(model, PartitionedModel) else model.original_order
    if order > cap:
        raise DenseCapExceededError(order, cap, "moment oracle model")
    system = as_system(model)
    ops = system.operators

    V = ops.solve_A(system.B)
    result = [system.L @ V - system.D]
    for _ in range(i_max):
        V = ops.apply_AE(V)
        result.append(system.L @ V)
    return result


def rom_moments(rom: ReducedModel, i_max: int) -> List[DenseBlock]:
    if rom.r == 0:
        return [-rom.D] + [np.zeros_like(rom.D) for _ in range(i_max)]
    lu = sla.lu_factor(rom.A)
    if np.min(np.abs(np.diag(lu[0]))) == 0.0:
        raise SingularMatrixError("reduced A~ is singular", stage="analyze")
    V = sla.lu_solve(lu, rom.B)
    result = [rom.L @ V - rom.D]
    for _ in range(i_max):
        V = sla.lu_solve(lu, rom.E @ V)
        result.append(rom.L @ V)
    return result

from eksmor.models.reduction import ProjectionBasis
from eksmor.services import krylov_service
from eksmor.services.krylov_service import ReducibleSystem
from eksmor.services.sparse_core import as_block
from .base import ReductionStrategy


class ExtendedKrylovReduction(ReductionStrategy):
    """EKS-MM: k block moments at s = 0 plus k directions at infinity."""

    method = "eks"

    def build_basis(self, system: ReducibleSystem, inputs, k: int) -> ProjectionBasis:
        ops = system.operators
        ops.require_extended()
        p = as_block(inputs).shape[1]
        return krylov_service.extended_basis(ops, ops.solve_A(inputs), r=k * p, p=p)

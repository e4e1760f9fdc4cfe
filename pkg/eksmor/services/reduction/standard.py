from eksmor.models.reduction import ProjectionBasis
from eksmor.services import krylov_service
from eksmor.services.krylov_service import ReducibleSystem
from .base import ReductionStrategy


class StandardKrylovReduction(ReductionStrategy):
    """Moment matching at s = 0 (MM): k block moments per input."""

    method = "mm"

    def build_basis(self, system: ReducibleSystem, inputs, k: int) -> ProjectionBasis:
        ops = system.operators
        return krylov_service.standard_basis(ops, ops.solve_A(inputs), k)

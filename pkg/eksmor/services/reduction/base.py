from abc import ABC, abstractmethod

from eksmor.models.reduction import ProjectionBasis, ReducedModel
from eksmor.services import krylov_service
from eksmor.services.krylov_service import ReducibleSystem


class ReductionStrategy(ABC):
    method: str

    @abstractmethod
    def build_basis(self, system: ReducibleSystem, inputs, k: int) -> ProjectionBasis:
        pass

    def reduce(self, system: ReducibleSystem, port: int, k: int):
        """Basis over the single input column of `port`, then its SIMO ROM."""
        basis = self.build_basis(system, system.input_column(port), k)
        rom: ReducedModel = krylov_service.project(system, basis, port=port, method=self.method)
        return basis, rom

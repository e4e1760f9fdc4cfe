from .base import ReductionStrategy
from .extended import ExtendedKrylovReduction
from .standard import StandardKrylovReduction

STRATEGIES = {
    StandardKrylovReduction.method: StandardKrylovReduction,
    ExtendedKrylovReduction.method: ExtendedKrylovReduction,
}

__all__ = ["ReductionStrategy", "StandardKrylovReduction", "ExtendedKrylovReduction", "STRATEGIES"]

from enum import Enum
from typing import Any, List, Literal, Optional

import numpy as np
import scipy.linalg as sla
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from eksmor.services.sparse_core import max_orthogonality_error


class SubspaceKind(str, Enum):
    STANDARD = "standard"
    EXTENDED = "extended"


class BlockEntry(BaseModel):
    iteration: int
    direction: Literal["forward", "backward"]
    start: int
    stop: int

    @property
    def width(self) -> int:
        return self.stop - self.start


class ProjectionBasis(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    X: Any
    ledger: List[BlockEntry] = Field(default_factory=list)
    kind: SubspaceKind
    k: int
    effective_k: int
    p: int
    breakdown: bool = False
    warnings: List[str] = Field(default_factory=list)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def order(self) -> int:
        return self.X.shape[0]

    def orthogonality_error(self) -> float:
        return max_orthogonality_error(self.X)


class ReducedModel(BaseModel):
    """Dense reduced model  E~ x' = A~ x + B~ u,  y = L~ x + D u."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    E: Any
    A: Any
    B: Any
    L: Any
    D: Any
    method: str
    k: int
    port: Optional[int] = None
    original_order: int = 0

    @field_validator("E", "A", "B", "L", "D", mode="before")
    @classmethod
    def to_dense(cls, value):
        return np.atleast_2d(np.asarray(value, dtype=np.float64))

    @model_validator(mode="after")
    def check_shapes(self):
        r = self.A.shape[0]
        if self.A.shape != (r, r) or self.E.shape != (r, r):
            raise ValueError(f"A~ {self.A.shape} and E~ {self.E.shape} must be square and equal")
        if self.B.shape[0] != r or self.L.shape[1] != r:
            raise ValueError(f"B~ {self.B.shape} / L~ {self.L.shape} do not conform to order {r}")
        if self.D.shape != (self.L.shape[0], self.B.shape[1]):
            raise ValueError(f"D {self.D.shape} does not conform to L~ and B~")
        return self

    @property
    def r(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def q(self) -> int:
        return self.L.shape[0]

    def transfer(self, s: complex) -> np.ndarray:
        """L~ (s E~ - A~)^-1 B~ + D; raises LinAlgError if the pencil is singular at s."""
        pencil = s * self.E - self.A
        if self.r == 0:
            return self.D.astype(complex)
        lu, piv = sla.lu_factor(pencil, check_finite=True)
        if np.min(np.abs(np.diag(lu))) <= np.finfo(float).eps * max(np.abs(pencil).max(), 1e-300):
            raise np.linalg.LinAlgError(f"singular reduced pencil at s = {s}")
        return self.L @ sla.lu_solve((lu, piv), self.B.astype(complex)) + self.D


class PortResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    port: int
    rom: Optional[ReducedModel] = None
    basis: Optional[ProjectionBasis] = None
    orthogonality_error: Optional[float] = None
    effective_k: Optional[int] = None
    breakdown: bool = False
    warnings: List[str] = Field(default_factory=list)
    error: Optional[str] = None
    seconds: float = 0.0


class PortDecomposition(BaseModel):
    method: str
    k: int
    p: int
    q: int
    entries: List[PortResult] = Field(default_factory=list)

    @property
    def failed_ports(self) -> List[int]:
        return [e.port for e in self.entries if e.rom is None]

    @property
    def roms(self) -> List[ReducedModel]:
        return [e.rom for e in self.entries]

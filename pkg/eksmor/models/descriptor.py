from functools import cached_property
from typing import Any, List

import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from eksmor.services.sparse_core import as_sparse, block_matrix

MATRIX_FIELDS = ("G", "C", "M", "W", "B1", "L1", "D")


class DescriptorModel(BaseModel):
    """MNA descriptor model  E x' = A x + B u,  y = L x + D u.

    Stored as the sparse blocks G, C (n x n), M (m x m), W (n x m),
    B1 (n x p), L1 (q x n) and D (q x p). E = diag(C, M),
    A = -[[G, W], [-W^T, 0]], B = [B1; 0], L = [L1, 0].
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    G: Any
    C: Any
    M: Any
    W: Any
    B1: Any
    L1: Any
    D: Any
    node_names: List[str] = Field(default_factory=list)
    port_names: List[str] = Field(default_factory=list)

    @field_validator(*MATRIX_FIELDS, mode="before")
    @classmethod
    def to_sparse(cls, value):
        return as_sparse(value)

    @model_validator(mode="after")
    def check_shapes(self):
        n, m = self.G.shape[0], self.M.shape[0]
        p, q = self.B1.shape[1], self.L1.shape[0]
        expected = {
            "G": (n, n), "C": (n, n), "M": (m, m), "W": (n, m),
            "B1": (n, p), "L1": (q, n), "D": (q, p),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if self.node_names and len(self.node_names) != n:
            raise ValueError(f"{len(self.node_names)} node names for {n} nodes")
        return self

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def m(self) -> int:
        return self.M.shape[0]

    @property
    def p(self) -> int:
        return self.B1.shape[1]

    @property
    def q(self) -> int:
        return self.L1.shape[0]

    @property
    def order(self) -> int:
        return self.n + self.m

    @cached_property
    def E(self) -> sp.csc_matrix:
        return block_matrix([[self.C, None], [None, self.M]], [self.n, self.m], [self.n, self.m])

    @cached_property
    def A(self) -> sp.csc_matrix:
        return block_matrix(
            [[-self.G, -self.W], [self.W.T, None]], [self.n, self.m], [self.n, self.m]
        )

    @cached_property
    def B(self) -> sp.csc_matrix:
        return block_matrix([[self.B1], [None]], [self.n, self.m], [self.p])

    @cached_property
    def L(self) -> sp.csc_matrix:
        return block_matrix([[self.L1, None]], [self.q], [self.n, self.m])

    def node_label(self, index: int) -> str:
        if index < self.n:
            return self.node_names[index] if self.node_names else str(index)
        return f"branch{index - self.n}"

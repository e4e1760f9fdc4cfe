from functools import cached_property
from typing import Any, List

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from eksmor.services.sparse_core import Factorization, block_matrix


class PartitionedModel(BaseModel):
    """Singular MNA model with capacitance-free nodes enumerated last.

    `permutation` lists original node indices, the n1 capacitive nodes first
    and the n2 capacitance-free nodes after them. `F22` factors G22 and
    `bordered` factors the sparse bordered matrix used for solves with the
    regularized A.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    permutation: Any
    n1: int
    n2: int
    m: int
    p: int
    q: int
    G11: Any
    G12: Any
    G22: Any
    W1: Any
    W2: Any
    C1: Any
    M: Any
    B1: Any
    B2: Any
    L1: Any
    L2: Any
    D: Any
    F22: Factorization
    bordered: Factorization
    node_names: List[str] = Field(default_factory=list)
    port_names: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    @property
    def order(self) -> int:
        return self.n1 + self.m

    @property
    def original_order(self) -> int:
        return self.n1 + self.n2 + self.m

    @cached_property
    def E(self) -> sp.csc_matrix:
        return block_matrix([[self.C1, None], [None, self.M]], [self.n1, self.m], [self.n1, self.m])

    @property
    def eliminated(self) -> np.ndarray:
        return np.asarray(self.permutation[self.n1:])

    @property
    def eliminated_nodes(self) -> List[str]:
        if not self.node_names:
            return [str(i) for i in self.eliminated]
        return [self.node_names[i] for i in self.eliminated]

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from eksmor.schemas.manifests import SCHEMA_VERSION, RegularizationInfo


class MethodSummary(BaseModel):
    method: str
    k: Optional[int] = None
    rom_order: Optional[int] = None
    max_error: Optional[float] = None
    entrywise_max_error: Optional[List[List[float]]] = None
    runtime_total: Optional[float] = None
    runtime_port_mean: Optional[float] = None
    failed_ports: List[int] = Field(default_factory=list)
    reused: bool = False


class ComparisonSummary(BaseModel):
    """Comparison of MM and EKS-MM reductions of one circuit.

    A method that was requested but could not be reduced or evaluated keeps
    its entry with null values.
    """

    schema_version: int = SCHEMA_VERSION
    source: Optional[str] = None
    dimension: int
    ports: int
    outputs: int
    regularization: RegularizationInfo = Field(default_factory=RegularizationInfo)
    fmin: float
    fmax: float
    npoints: int
    methods: Dict[str, MethodSummary] = Field(default_factory=dict)
    error_reduction_percentage: Optional[float] = None
    flagged_points: Dict[int, str] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)


class MomentRow(BaseModel):
    index: int
    source: str
    port: int
    value: List[float]
    relative_deviation: Optional[float] = None

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

SCHEMA_VERSION = 1


class ModelManifest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    n: int
    m: int
    p: int
    q: int
    node_names: List[str] = Field(default_factory=list)
    port_names: List[str] = Field(default_factory=list)


class RegularizationInfo(BaseModel):
    applied: bool = False
    n1: Optional[int] = None
    n2: Optional[int] = None
    m: Optional[int] = None
    eliminated_nodes: List[str] = Field(default_factory=list)


class RunRecord(BaseModel):
    """The run settings a ROM depends on. Written back as a `--config` file it replays the run."""

    input: Optional[str] = None
    format: str = "spice"
    method: str
    k: Optional[int] = None
    order: Optional[int] = None
    ports_file: Optional[str] = None
    add_cap: Optional[float] = None
    cap_skip: int = 0
    seed: Optional[int] = None


class RomManifest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    method: str
    k: int
    effective_k: Optional[int] = None
    port: int
    port_name: Optional[str] = None
    r: int
    original_order: int
    orthogonality_error: Optional[float] = None
    breakdown: bool = False
    run: Optional[RunRecord] = None
    model_warnings: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)


class PortFailure(BaseModel):
    port: int
    error: str


class RomIndex(BaseModel):
    schema_version: int = SCHEMA_VERSION
    source: Optional[str] = None
    method: str
    k: int
    rom_order: int
    p: int
    q: int
    original_order: int
    regularization: RegularizationInfo = Field(default_factory=RegularizationInfo)
    ports: List[str] = Field(default_factory=list)
    failures: List[PortFailure] = Field(default_factory=list)
    run: Optional[RunRecord] = None
    model_warnings: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)


class RunTimings(BaseModel):
    """Wall-clock seconds per stage; kept out of the ROM manifests so those stay reproducible."""

    stages: Dict[str, float] = Field(default_factory=dict)
    port_seconds: Dict[str, List[float]] = Field(default_factory=dict)

    def port_mean(self, method: str) -> Optional[float]:
        seconds = self.port_seconds.get(method)
        return sum(seconds) / len(seconds) if seconds else None

    def port_total(self, method: str) -> Optional[float]:
        seconds = self.port_seconds.get(method)
        return sum(seconds) if seconds else None

import json
import math
import os
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, model_validator

from eksmor.core.config import settings
from eksmor.core.exceptions import ConfigError

DEFAULT_K = 2


def merge_sources(schema, flags: Dict[str, Any], config_path: Optional[str] = None):
    """Build `schema` from a JSON config file overridden by the non-None flags."""
    values: Dict[str, Any] = {}
    if config_path:
        try:
            with open(config_path, "r") as f:
                values.update(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file {config_path}: {e}")
    values.update({key: value for key, value in flags.items() if value is not None})
    try:
        return schema(**values)
    except ValidationError as e:
        raise ConfigError("; ".join(error["msg"] for error in e.errors()))


class ResolvedOrder(BaseModel):
    method: str
    k: int
    rom_order: int
    warnings: List[str] = Field(default_factory=list)


class RunConfig(BaseModel):
    """One batch run. Precedence: flags > JSON config file > Settings defaults.

    `k` is the number of block moments MM matches per port and `order` the
    per-port ROM order; each SIMO basis starts from a single column, so both
    fix the same ROM order. EKS reaches that order with half as many
    forward moments.
    """

    input: Optional[str] = None
    format: Literal["spice", "mm-dir"] = "spice"
    method: Literal["mm", "eks", "both"] = "both"
    k: Optional[int] = None
    order: Optional[int] = None
    fmin: float = settings.FMIN
    fmax: float = settings.FMAX
    npoints: int = settings.NPOINTS
    ports_file: Optional[str] = None
    add_cap: Optional[float] = None
    cap_skip: int = 0
    seed: Optional[int] = None
    workers: int = settings.MOR_WORKERS
    out: str = "out"
    dense_oracle_cap: int = settings.DENSE_ORACLE_CAP

    @model_validator(mode="after")
    def check_consistency(self):
        if self.k is not None and self.k < 1:
            raise ValueError("k must be at least 1")
        if self.order is not None and self.order < 1:
            raise ValueError("order must be at least 1")
        if self.k is not None and self.order is not None and self.order != self.k:
            raise ValueError(
                f"order {self.order} and k {self.k} disagree; a single-input basis has r = k"
            )
        if self.fmin <= 0 or self.fmax <= self.fmin:
            raise ValueError(f"invalid frequency range [{self.fmin}, {self.fmax}]")
        if self.npoints < 2:
            raise ValueError("npoints must be at least 2")
        if self.add_cap is not None and self.add_cap <= 0:
            raise ValueError("add_cap must be positive")
        if self.cap_skip < 0:
            raise ValueError("cap_skip must be nonnegative")
        if (self.add_cap is not None or self.cap_skip) and self.seed is None:
            raise ValueError("capacitance augmentation is random and needs a seed")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        return self

    @classmethod
    def from_sources(cls, flags: Dict[str, Any], config_path: Optional[str] = None) -> "RunConfig":
        return merge_sources(cls, flags, config_path)

    @property
    def methods(self) -> List[str]:
        return ["mm", "eks"] if self.method == "both" else [self.method]

    @property
    def target_order(self) -> int:
        if self.order is not None:
            return self.order
        return self.k if self.k is not None else DEFAULT_K

    def resolve(self, method: str) -> ResolvedOrder:
        target = self.target_order
        if method == "mm":
            return ResolvedOrder(method=method, k=target, rom_order=target)
        k = math.ceil(target / 2)
        warnings = []
        if target % 2:
            warnings.append(
                f"ROM order {target} is odd, EKS k rounded up to {k} (order {2 * k})"
            )
        return ResolvedOrder(method=method, k=k, rom_order=2 * k, warnings=warnings)

    def ensure_output_dir(self) -> str:
        try:
            os.makedirs(self.out, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"cannot create output directory {self.out}: {e}")
        if not os.access(self.out, os.W_OK):
            raise ConfigError(f"output directory {self.out} is not writable")
        return self.out


class SynthConfig(BaseModel):
    kind: Literal["ladder", "mesh", "rlc"] = "ladder"
    nodes: int = 100
    rows: int = 10
    cols: int = 10
    ports: int = 1
    pads: int = 4
    inductance: float = 1e-9
    cap_free: int = 0
    c_scale: float = 1.0
    vsource_pads: bool = False
    seed: int
    format: Literal["spice", "mm-dir"] = "spice"
    out: str

    @model_validator(mode="after")
    def check_sizes(self):
        if self.kind == "ladder" and self.nodes < 2:
            raise ValueError("a ladder needs at least two nodes")
        if self.kind != "ladder" and self.rows * self.cols < 2:
            raise ValueError("a mesh needs at least two nodes")
        if self.ports < 1:
            raise ValueError("at least one port is required")
        if self.kind == "rlc" and self.inductance <= 0:
            raise ValueError("an RLC mesh needs a positive inductance")
        return self

    @classmethod
    def from_sources(cls, flags: Dict[str, Any], config_path: Optional[str] = None) -> "SynthConfig":
        return merge_sources(cls, flags, config_path)

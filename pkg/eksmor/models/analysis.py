from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class FrequencyGrid(BaseModel):
    """Angular frequencies (rad/s); samples are s = j*omega."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    omega: Any

    @field_validator("omega", mode="before")
    @classmethod
    def check_omega(cls, value):
        omega = np.asarray(value, dtype=np.float64).ravel()
        if omega.size < 2:
            raise ValueError("a frequency grid needs at least two points")
        if not np.all(np.isfinite(omega)):
            raise ValueError("frequencies must be finite")
        if np.any(np.diff(omega) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        return omega

    @classmethod
    def log_spaced(cls, fmin: float, fmax: float, npoints: int) -> "FrequencyGrid":
        if fmin <= 0 or fmax <= fmin:
            raise ValueError(f"invalid frequency range [{fmin}, {fmax}]")
        return cls(omega=np.geomspace(fmin, fmax, npoints))

    @property
    def s(self) -> np.ndarray:
        return 1j * self.omega

    @property
    def count(self) -> int:
        return self.omega.size


class ResponseSet(BaseModel):
    """Transfer matrices per grid point, shaped (count, q, p)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: FrequencyGrid
    original: Any = None
    reduced: Dict[str, Any] = Field(default_factory=dict)
    flags: Dict[int, str] = Field(default_factory=dict)

    def flag(self, index: int, reason: str):
        if index not in self.flags:
            self.flags[index] = reason

    def valid_mask(self) -> np.ndarray:
        mask = np.ones(self.grid.count, dtype=bool)
        mask[list(self.flags)] = False
        return mask

    def merge(self, other: "ResponseSet") -> "ResponseSet":
        if other.original is not None:
            self.original = other.original
        self.reduced.update(other.reduced)
        for index, reason in other.flags.items():
            self.flag(index, reason)
        return self


class MethodError(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    method: str
    max_error: float
    entrywise_max: Any
    curve: Any


class ErrorReport(BaseModel):
    errors: Dict[str, MethodError] = Field(default_factory=dict)
    error_reduction_percentage: Optional[float] = None
    flags: Dict[int, str] = Field(default_factory=dict)

import math
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

GROUND_NAMES = ("0", "gnd")


def is_ground(node: str) -> bool:
    return node.lower() in GROUND_NAMES


class ElementKind(str, Enum):
    RESISTOR = "R"
    INDUCTOR = "L"
    CAPACITOR = "C"
    CURRENT_SOURCE = "I"
    VOLTAGE_SOURCE = "V"


class Element(BaseModel):
    kind: ElementKind
    name: str
    node_a: str
    node_b: str
    value: float

    @model_validator(mode="after")
    def check_value(self):
        if not math.isfinite(self.value):
            raise ValueError(f"{self.name}: value must be finite")
        if self.kind in (ElementKind.RESISTOR, ElementKind.INDUCTOR, ElementKind.CAPACITOR) \
                and self.value <= 0:
            raise ValueError(f"{self.name}: {self.kind.value} value must be positive")
        return self


class Circuit(BaseModel):
    title: Optional[str] = None
    elements: List[Element] = Field(default_factory=list)
    nodes: Dict[str, int] = Field(default_factory=dict)
    ports: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_references(self):
        for element in self.elements:
            for node in (element.node_a, element.node_b):
                if not is_ground(node) and node not in self.nodes:
                    raise ValueError(f"{element.name} references unknown node {node}")
        for port in self.ports:
            if port not in self.nodes:
                raise ValueError(f"port {port} is not a circuit node")
        return self

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def node_names(self) -> List[str]:
        return sorted(self.nodes, key=self.nodes.__getitem__)

    def of_kind(self, kind: ElementKind) -> List[Element]:
        return [e for e in self.elements if e.kind == kind]

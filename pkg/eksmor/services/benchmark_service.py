"""Seeded synthetic power-grid benchmarks: RC ladders and RC/RLC meshes."""
from typing import Dict, List, Optional

import numpy as np

from eksmor.core.exceptions import ReductionError
from eksmor.core.logger import logger
from eksmor.models.circuit import Circuit, Element, ElementKind


class CircuitBuilder:
    def __init__(self, title: str):
        self.title = title
        self.elements: List[Element] = []
        self.nodes: Dict[str, int] = {}
        self.counts: Dict[ElementKind, int] = {}

    def add(self, kind: ElementKind, node_a: str, node_b: str, value: float) -> str:
        for node in (node_a, node_b):
            if node != "0" and node not in self.nodes:
                self.nodes[node] = len(self.nodes)
        self.counts[kind] = self.counts.get(kind, 0) + 1
        name = f"{kind.value}{self.counts[kind]}"
        self.elements.append(Element(kind=kind, name=name, node_a=node_a, node_b=node_b, value=value))
        return name

    def build(self, ports: List[str]) -> Circuit:
        return Circuit(title=self.title, elements=self.elements, nodes=self.nodes, ports=ports)


def _spread(rng: np.random.Generator, scale: float, size: Optional[int] = None):
    return scale * (0.5 + rng.random(size))


def _pick(rng: np.random.Generator, population: int, count: int, exclude=()) -> List[int]:
    candidates = np.setdiff1d(np.arange(population), np.asarray(list(exclude), dtype=np.int64))
    if count > len(candidates):
        raise ReductionError(
            f"cannot pick {count} distinct nodes out of {len(candidates)}", stage="config"
        )
    return sorted(int(i) for i in rng.choice(candidates, size=count, replace=False))


def rc_ladder(
    nodes: int,
    ports: int = 1,
    seed: int = 0,
    cap_free: int = 0,
    r_scale: float = 1.0,
    c_scale: float = 1.0,
    ground_every: int = 10,
) -> Circuit:
    """RC chain with grounded capacitors and a grounding resistor every `ground_every` nodes.

    Ports are current sources spread evenly along the chain. `cap_free`
    random interior nodes get no capacitor.
    """
    if nodes < 2 or ports < 1 or ports > nodes:
        raise ReductionError(f"invalid ladder: {nodes} nodes, {ports} ports", stage="config")
    rng = np.random.default_rng(seed)
    builder = CircuitBuilder(f"rc_ladder n={nodes} p={ports} seed={seed}")
    names = [f"n{i}" for i in range(1, nodes + 1)]

    port_nodes = [names[int(i)] for i in np.linspace(0, nodes - 1, ports).round()]
    skipped = {names[i] for i in _pick(rng, nodes, cap_free, exclude=[0])} if cap_free else set()

    builder.add(ElementKind.RESISTOR, names[0], "0", _spread(rng, r_scale))
    for a, b in zip(names, names[1:]):
        builder.add(ElementKind.RESISTOR, a, b, _spread(rng, r_scale))
    for i in range(ground_every, nodes, ground_every):
        builder.add(ElementKind.RESISTOR, names[i], "0", _spread(rng, 10 * r_scale))
    for name in names:
        if name not in skipped:
            builder.add(ElementKind.CAPACITOR, name, "0", _spread(rng, c_scale))
    for name in dict.fromkeys(port_nodes):
        builder.add(ElementKind.CURRENT_SOURCE, name, "0", 1e-3)

    circuit = builder.build(list(dict.fromkeys(port_nodes)))
    logger.info(f"Generated RC ladder: {circuit.n} nodes, {len(circuit.ports)} ports")
    return circuit


def rc_mesh(
    rows: int,
    cols: int,
    ports: int = 1,
    seed: int = 0,
    pads: int = 4,
    inductance: float = 0.0,
    cap_free: int = 0,
    r_scale: float = 1.0,
    c_scale: float = 1.0,
    pad_resistance: float = 0.05,
    vsource_pads: bool = False,
) -> Circuit:
    """Power-grid style resistive mesh with grounded decoupling capacitance.

    `pads` random mesh nodes connect to the supply. With `inductance` > 0
    each pad reaches its supply through a package inductor and a
    capacitance-free package node, which makes the model singular. The pad
    supply is a small resistor to ground or, with `vsource_pads`, a voltage
    source.
    """
    count = rows * cols
    if rows < 1 or cols < 1 or count < 2:
        raise ReductionError(f"invalid mesh {rows}x{cols}", stage="config")
    if pads < 1:
        raise ReductionError("a mesh needs at least one supply pad", stage="config")
    rng = np.random.default_rng(seed)
    kind = "rlc" if inductance > 0 else "rc"
    builder = CircuitBuilder(f"{kind}_mesh {rows}x{cols} p={ports} seed={seed}")

    def name(r: int, c: int) -> str:
        return f"n{r}_{c}"

    names = [name(r, c) for r in range(rows) for c in range(cols)]
    pad_indices = _pick(rng, count, pads)
    port_indices = _pick(rng, count, ports, exclude=pad_indices)
    skipped = set(_pick(rng, count, cap_free, exclude=pad_indices)) if cap_free else set()

    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                builder.add(ElementKind.RESISTOR, name(r, c), name(r, c + 1), _spread(rng, r_scale))
            if r + 1 < rows:
                builder.add(ElementKind.RESISTOR, name(r, c), name(r + 1, c), _spread(rng, r_scale))

    for i, index in enumerate(pad_indices):
        supply = names[index]
        if inductance > 0:
            package = f"pkg{i}"
            builder.add(ElementKind.INDUCTOR, supply, package, _spread(rng, inductance))
            supply = package
        if vsource_pads:
            builder.add(ElementKind.VOLTAGE_SOURCE, supply, "0", 1.0)
        else:
            builder.add(ElementKind.RESISTOR, supply, "0", _spread(rng, pad_resistance * r_scale))

    for index, node in enumerate(names):
        if index not in skipped:
            builder.add(ElementKind.CAPACITOR, node, "0", _spread(rng, c_scale))
    for index in port_indices:
        builder.add(ElementKind.CURRENT_SOURCE, names[index], "0", 1e-3)

    circuit = builder.build([names[i] for i in port_indices])
    logger.info(
        f"Generated {kind} mesh: {circuit.n} nodes, {len(pad_indices)} pads, "
        f"{len(circuit.ports)} ports, {len(skipped)} capacitance-free mesh nodes"
    )
    return circuit

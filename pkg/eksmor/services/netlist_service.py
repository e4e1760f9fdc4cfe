"""IBM power-grid style SPICE netlists to MNA descriptor models.

Supported cards: R, L, C, I and V elements (`I`/`V` accept an optional `DC`
keyword), `*` comments, `+` continuation lines and dot directives, of which
`.ports` selects port nodes, `.end` stops reading and the rest are ignored.
"""
import io
import re
from typing import Iterable, List, Optional, Sequence, TextIO, Union

import numpy as np
from pydantic import ValidationError

from eksmor.core.config import settings
from eksmor.core.exceptions import ElementValueError, NetlistParseError, ReductionError
from eksmor.core.logger import logger
from eksmor.models.circuit import Circuit, Element, ElementKind, is_ground
from eksmor.models.descriptor import DescriptorModel
from eksmor.services.sparse_core import SparseMatrix, assemble

SCALE_SUFFIXES = {
    "t": 1e12, "g": 1e9, "k": 1e3, "m": 1e-3,
    "u": 1e-6, "n": 1e-9, "p": 1e-12, "f": 1e-15,
}
_NUMBER = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([a-zA-Z]*)$")
_IGNORED_DIRECTIVES = {".op", ".option", ".options", ".print", ".probe", ".title", ".end"}


def parse_value(token: str) -> float:
    match = _NUMBER.match(token.strip())
    if not match:
        raise ValueError(f"cannot read value {token!r}")
    number, suffix = float(match.group(1)), match.group(2).lower()
    if suffix.startswith("meg"):
        return number * 1e6
    if suffix and suffix[0] in SCALE_SUFFIXES:
        return number * SCALE_SUFFIXES[suffix[0]]
    return number


def _logical_lines(stream: Iterable[str]):
    pending, pending_number = None, 0
    for number, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        if line.startswith("+"):
            if pending is None:
                raise NetlistParseError("continuation line without a card", number)
            pending += " " + line[1:].strip()
            continue
        if pending is not None:
            yield pending_number, pending
        pending, pending_number = line, number
    if pending is not None:
        yield pending_number, pending


def _source_value(tokens: List[str]) -> float:
    rest = tokens[3:]
    if rest and rest[0].upper() == "DC":
        rest = rest[1:]
    if not rest:
        return 0.0
    try:
        return parse_value(rest[0])
    except ValueError:
        # transient waveforms (PWL, PULSE) carry no DC value
        return 0.0


def parse_netlist(
    stream: Union[TextIO, Iterable[str]],
    ports: Optional[Sequence[str]] = None,
) -> Circuit:
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    elements: List[Element] = []
    nodes: dict = {}
    source_nodes: List[str] = []
    declared_ports: Optional[List[str]] = None
    title = None
    warnings: List[str] = []

    for number, line in _logical_lines(stream):
        tokens = line.split()
        head = tokens[0]
        if head.startswith("."):
            directive = head.lower()
            if directive == ".ports":
                declared_ports = tokens[1:]
            elif directive == ".end":
                break
            elif directive == ".title":
                title = " ".join(tokens[1:])
            elif directive not in _IGNORED_DIRECTIVES:
                warnings.append(f"line {number}: ignoring unsupported directive {head}")
                logger.warning(warnings[-1])
            continue

        kind_letter = head[0].upper()
        try:
            kind = ElementKind(kind_letter)
        except ValueError:
            raise NetlistParseError(f"unknown card kind {head!r}", number)
        if len(tokens) < 4 and kind in (ElementKind.RESISTOR, ElementKind.INDUCTOR, ElementKind.CAPACITOR):
            raise NetlistParseError(f"malformed {kind.value} card: {line!r}", number)
        if len(tokens) < 3:
            raise NetlistParseError(f"malformed card: {line!r}", number)

        node_a, node_b = tokens[1], tokens[2]
        if kind in (ElementKind.CURRENT_SOURCE, ElementKind.VOLTAGE_SOURCE):
            value = _source_value(tokens)
        else:
            try:
                value = parse_value(tokens[3])
            except ValueError as e:
                raise NetlistParseError(str(e), number)
            if value <= 0:
                raise ElementValueError(f"{head} has nonpositive value {tokens[3]}", number)

        for node in (node_a, node_b):
            if not is_ground(node) and node not in nodes:
                nodes[node] = len(nodes)
        if kind == ElementKind.CURRENT_SOURCE:
            source_nodes.extend(n for n in (node_a, node_b) if not is_ground(n))

        try:
            elements.append(Element(kind=kind, name=head, node_a=node_a, node_b=node_b, value=value))
        except ValidationError as e:
            raise ElementValueError(e.errors()[0]["msg"], number)

    if ports is None:
        ports = declared_ports
    if ports is None:
        ports = list(dict.fromkeys(source_nodes))
    unknown = [port for port in ports if port not in nodes]
    if unknown:
        raise NetlistParseError(f"ports are not circuit nodes: {', '.join(unknown[:10])}")

    circuit = Circuit(
        title=title, elements=elements, nodes=nodes, ports=list(ports), warnings=warnings
    )
    logger.info(
        f"Parsed netlist: {len(elements)} elements, {circuit.n} nodes, {len(circuit.ports)} ports"
    )
    return circuit


def load_netlist(path: str, ports: Optional[Sequence[str]] = None) -> Circuit:
    with open(path, "r") as f:
        return parse_netlist(f, ports=ports)


def read_port_file(path: str) -> List[str]:
    with open(path, "r") as f:
        return [token for line in f if not line.startswith("*") for token in line.split()]


def write_netlist(circuit: Circuit) -> str:
    lines = [f"* {circuit.title or 'eksmor netlist'}"]
    for e in circuit.elements:
        value = repr(float(e.value))
        if e.kind in (ElementKind.CURRENT_SOURCE, ElementKind.VOLTAGE_SOURCE):
            value = f"DC {value}"
        lines.append(f"{e.name} {e.node_a} {e.node_b} {value}")
    lines.append(".ports " + " ".join(circuit.ports))
    lines.append(".end")
    return "\n".join(lines) + "\n"


def assemble_mna(circuit: Circuit, vsource_series_r: Optional[float] = None) -> DescriptorModel:
    if circuit.n == 0:
        raise ReductionError("circuit has no non-ground nodes", stage="assemble")
    series_r = settings.VSOURCE_SERIES_R if vsource_series_r is None else vsource_series_r
    n = circuit.n
    index = circuit.nodes

    g_rows, g_cols, g_vals = [], [], []
    c_rows, c_cols, c_vals = [], [], []

    def stamp(rows, cols, vals, a, b, value):
        ia = None if is_ground(a) else index[a]
        ib = None if is_ground(b) else index[b]
        if ia is not None:
            rows.append(ia); cols.append(ia); vals.append(value)
        if ib is not None:
            rows.append(ib); cols.append(ib); vals.append(value)
        if ia is not None and ib is not None:
            rows.extend((ia, ib)); cols.extend((ib, ia)); vals.extend((-value, -value))

    inductors = []
    for e in circuit.elements:
        if e.kind == ElementKind.RESISTOR:
            stamp(g_rows, g_cols, g_vals, e.node_a, e.node_b, 1.0 / e.value)
        elif e.kind == ElementKind.CAPACITOR:
            stamp(c_rows, c_cols, c_vals, e.node_a, e.node_b, e.value)
        elif e.kind == ElementKind.VOLTAGE_SOURCE:
            # Norton equivalent: the series resistance becomes a shunt conductance
            stamp(g_rows, g_cols, g_vals, e.node_a, e.node_b, 1.0 / series_r)
        elif e.kind == ElementKind.INDUCTOR:
            if e.node_a == e.node_b or (is_ground(e.node_a) and is_ground(e.node_b)):
                raise ReductionError(
                    f"inductor {e.name} has no node connection, its branch row would be empty",
                    stage="assemble",
                )
            inductors.append(e)

    m = len(inductors)
    w_rows, w_cols, w_vals = [], [], []
    for k, e in enumerate(inductors):
        if not is_ground(e.node_a):
            w_rows.append(index[e.node_a]); w_cols.append(k); w_vals.append(1.0)
        if not is_ground(e.node_b):
            w_rows.append(index[e.node_b]); w_cols.append(k); w_vals.append(-1.0)

    p = len(circuit.ports)
    port_rows = [index[port] for port in circuit.ports]
    B1 = assemble(port_rows, list(range(p)), [1.0] * p, (n, p))

    model = DescriptorModel(
        G=assemble(g_rows, g_cols, g_vals, (n, n)),
        C=assemble(c_rows, c_cols, c_vals, (n, n)),
        M=assemble(range(m), range(m), [e.value for e in inductors], (m, m)),
        W=assemble(w_rows, w_cols, w_vals, (n, m)),
        B1=B1,
        L1=B1.T,
        D=assemble([], [], [], (p, p)),
        node_names=circuit.node_names,
        port_names=list(circuit.ports),
    )
    logger.info(f"Assembled MNA model: n={model.n}, m={model.m}, p={model.p}, N={model.order}")
    return model


def split_ports(model: DescriptorModel) -> List[SparseMatrix]:
    if model.p < 1:
        raise ReductionError("model has no input ports", stage="assemble")
    B = model.B
    return [B[:, [i]] for i in range(model.p)]


def augment_capacitance(
    circuit: Circuit,
    value: float,
    seed: int,
    skip_nodes: int = 0,
) -> Circuit:
    """Add a seeded random grounded capacitance (0.5x to 1.5x `value`) per node.

    `skip_nodes` randomly chosen nodes are left without a capacitor, which
    turns a DC benchmark into a singular descriptor model.
    """
    rng = np.random.default_rng(seed)
    names = circuit.node_names
    skipped = set()
    if skip_nodes:
        if skip_nodes >= len(names):
            raise ReductionError("cannot leave every node capacitance-free", stage="assemble")
        skipped = {names[i] for i in rng.choice(len(names), size=skip_nodes, replace=False)}
    factors = 0.5 + rng.random(len(names))

    added = [
        Element(kind=ElementKind.CAPACITOR, name=f"Caug_{i}", node_a=node, node_b="0",
                value=value * factors[i])
        for i, node in enumerate(names)
        if node not in skipped
    ]
    logger.info(f"Added {len(added)} grounded capacitors, {len(skipped)} nodes left capacitance-free")
    return circuit.model_copy(update={"elements": circuit.elements + added})

"""Tensor networks that encode classical computation.

Two wire families share one DAG container:

* bit legs (extent 2, basis semantics): binary logic circuits built from
  XOR/AND/OR gates and the copy tensor. Feeding basis vectors in and
  contracting gate by gate keeps every intermediate a basis vector, so
  evaluation is linear in the gate count.
* amplitude legs (extent 2, ``(1, x)`` semantics): arithmetic circuits
  where addition and multiplication are (2,2,2) tensors acting on encoded
  reals, plus variable legs carrying discretized grid indices with their own
  copy tensor.

Wires have a single producer. Bit wires also have a single consumer, with
fan-out realized by explicit copy nodes; amplitude wires may feed several
consumers, standing for the formally duplicated subgraphs that memoized
evaluation contracts only once.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import GraphError, InvariantError, RepresentationError

__all__ = [
    "GateKind",
    "gate_tensor",
    "BitVec",
    "Node",
    "CircuitGraph",
    "CircuitBuilder",
    "build_half_adder",
    "build_full_adder",
    "build_adder",
    "build_multiplier",
    "build_square",
    "eval_binary",
    "float_encode",
    "float_decode",
    "build_amp_function",
    "FnnSpec",
    "compile_fnn",
    "eval_amp_circuit",
    "EvalStats",
]


class GateKind(Enum):
    XOR = "xor"
    AND = "and"
    OR = "or"
    DELTA = "delta"
    PLUS = "plus"
    TIMES = "times"
    CONST_BIT = "const_bit"
    CONST_FLOAT = "const_float"
    FUNC = "func"
    VAR_COPY = "var_copy"


def _logic_tensor(entries) -> np.ndarray:
    t = np.zeros((2, 2, 2))
    for idx in entries:
        t[idx] = 1.0
    return t


_XOR = _logic_tensor([(0, 0, 0), (1, 0, 1), (0, 1, 1), (1, 1, 0)])
_AND = _logic_tensor([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 1)])
_OR = _logic_tensor([(0, 0, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1)])
_DELTA = _logic_tensor([(0, 0, 0), (1, 1, 1)])
_PLUS = np.zeros((2, 2, 2))
for _i in range(2):
    for _j in range(2):
        if _i + _j < 2:
            _PLUS[_i, _j, _i + _j] = 1.0
_TIMES = _logic_tensor([(0, 0, 0), (1, 1, 1)])


def gate_tensor(kind: GateKind, payload=None) -> np.ndarray:
    """The defining tensor of a gate.

    Logic gates and the arithmetic (+)/(x) tensors are (2,2,2) with the
    output on the last index; constants are length-2 vectors (a basis vector
    for bits, ``(1, x)`` for reals).
    """
    table = {
        GateKind.XOR: _XOR,
        GateKind.AND: _AND,
        GateKind.OR: _OR,
        GateKind.DELTA: _DELTA,
        GateKind.PLUS: _PLUS,
        GateKind.TIMES: _TIMES,
    }
    if kind in table:
        return table[kind].copy()
    if kind == GateKind.CONST_BIT:
        v = np.zeros(2)
        v[int(payload)] = 1.0
        return v
    if kind == GateKind.CONST_FLOAT:
        return np.array([1.0, float(payload)])
    raise ValueError(f"{kind} has no fixed tensor")


@dataclass(frozen=True)
class BitVec:
    """Little-endian bit string: bit i weighs 2^i."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")

    @classmethod
    def from_int(cls, value: int, n_bits: int) -> "BitVec":
        if value < 0 or value >= (1 << n_bits):
            raise ValueError(f"{value} does not fit in {n_bits} bits")
        return cls(tuple((value >> i) & 1 for i in range(n_bits)))

    def to_int(self) -> int:
        return sum(b << i for i, b in enumerate(self.bits))

    def __len__(self) -> int:
        return len(self.bits)


@dataclass
class Node:
    kind: GateKind
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    payload: object = None


_ARITY = {
    GateKind.XOR: (2, 1),
    GateKind.AND: (2, 1),
    GateKind.OR: (2, 1),
    GateKind.DELTA: (1, 2),
    GateKind.PLUS: (2, 1),
    GateKind.TIMES: (2, 1),
    GateKind.CONST_BIT: (0, 1),
    GateKind.CONST_FLOAT: (0, 1),
    GateKind.FUNC: (1, 1),
    GateKind.VAR_COPY: (1, 2),
}

_WIRE_KINDS = {
    GateKind.XOR: ("bit", "bit"),
    GateKind.AND: ("bit", "bit"),
    GateKind.OR: ("bit", "bit"),
    GateKind.DELTA: ("bit", "bit"),
    GateKind.PLUS: ("amp", "amp"),
    GateKind.TIMES: ("amp", "amp"),
    GateKind.CONST_BIT: (None, "bit"),
    GateKind.CONST_FLOAT: (None, "amp"),
    GateKind.FUNC: ("var", "amp"),
    GateKind.VAR_COPY: ("var", "var"),
}


@dataclass
class CircuitGraph:
    """Directed acyclic gate graph with typed wires.

    ``input_groups``/``output_groups`` are ordered lists of wire-id lists,
    one group per logical operand (a bit string, a real, a variable).
    """

    nodes: list[Node]
    wire_types: list[str]
    input_groups: list[list[int]]
    output_groups: list[list[int]]
    var_grids: dict[int, int] = field(default_factory=dict)

    @property
    def n_wires(self) -> int:
        return len(self.wire_types)

    def validate(self) -> None:
        produced = set()
        flat_inputs = [w for g in self.input_groups for w in g]
        produced.update(flat_inputs)
        consumers: dict[int, int] = {}
        for node in self.nodes:
            n_in, n_out = _ARITY[node.kind]
            if len(node.inputs) != n_in or len(node.outputs) != n_out:
                raise GraphError(f"{node.kind} arity mismatch")
            for w in node.inputs:
                if w not in produced:
                    raise GraphError(f"wire {w} consumed before production (cycle or unbound)")
                consumers[w] = consumers.get(w, 0) + 1
            for w in node.outputs:
                if w in produced:
                    raise GraphError(f"wire {w} produced twice")
                produced.add(w)
        for g in self.output_groups:
            for w in g:
                if w not in produced:
                    raise GraphError(f"output wire {w} never produced")
        for w, count in consumers.items():
            if self.wire_types[w] == "bit" and count > 1:
                raise GraphError(
                    f"bit wire {w} has {count} consumers; copy tensors realize fan-out"
                )

    def to_json(self) -> str:
        def encode_payload(node):
            if node.kind == GateKind.FUNC:
                return np.asarray(node.payload).tolist()
            return node.payload

        return json.dumps(
            {
                "version": 1,
                "wire_types": self.wire_types,
                "nodes": [
                    {
                        "kind": n.kind.value,
                        "inputs": list(n.inputs),
                        "outputs": list(n.outputs),
                        "payload": encode_payload(n),
                    }
                    for n in self.nodes
                ],
                "input_groups": self.input_groups,
                "output_groups": self.output_groups,
                "var_grids": {str(k): v for k, v in self.var_grids.items()},
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CircuitGraph":
        data = json.loads(text)
        if data.get("version") != 1:
            raise ValueError(f"unsupported circuit version {data.get('version')}")
        nodes = []
        for n in data["nodes"]:
            kind = GateKind(n["kind"])
            payload = n["payload"]
            if kind == GateKind.FUNC and payload is not None:
                payload = np.asarray(payload, dtype=float)
            nodes.append(Node(kind, tuple(n["inputs"]), tuple(n["outputs"]), payload))
        graph = cls(
            nodes=nodes,
            wire_types=list(data["wire_types"]),
            input_groups=[list(g) for g in data["input_groups"]],
            output_groups=[list(g) for g in data["output_groups"]],
            var_grids={int(k): v for k, v in data.get("var_grids", {}).items()},
        )
        graph.validate()
        return graph


class CircuitBuilder:
    """Appends nodes in topological order; wires are created before use."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.wire_types: list[str] = []
        self.input_groups: list[list[int]] = []
        self.var_grids: dict[int, int] = {}

    def _wire(self, kind: str) -> int:
        self.wire_types.append(kind)
        return len(self.wire_types) - 1

    def input_bits(self, n: int) -> list[int]:
        wires = [self._wire("bit") for _ in range(n)]
        self.input_groups.append(list(wires))
        return wires

    def input_amp(self) -> int:
        w = self._wire("amp")
        self.input_groups.append([w])
        return w

    def input_var(self, grid_len: int) -> int:
        w = self._wire("var")
        self.var_grids[w] = grid_len
        self.input_groups.append([w])
        return w

    def add(self, kind: GateKind, inputs: Sequence[int], payload=None) -> list[int]:
        n_in, n_out = _ARITY[kind]
        if len(inputs) != n_in:
            raise GraphError(f"{kind} takes {n_in} inputs, got {len(inputs)}")
        in_kind, out_kind = _WIRE_KINDS[kind]
        for w in inputs:
            if self.wire_types[w] != in_kind:
                raise GraphError(f"{kind} expects {in_kind} wires, wire {w} is {self.wire_types[w]}")
        outs = [self._wire(out_kind) for _ in range(n_out)]
        if kind == GateKind.VAR_COPY:
            g = self.var_grids[inputs[0]]
            for w in outs:
                self.var_grids[w] = g
        self.nodes.append(Node(kind, tuple(inputs), tuple(outs), payload))
        return outs

    # Convenience spellings for the common gates.
    def xor(self, a, b):
        return self.add(GateKind.XOR, [a, b])[0]

    def and_(self, a, b):
        return self.add(GateKind.AND, [a, b])[0]

    def or_(self, a, b):
        return self.add(GateKind.OR, [a, b])[0]

    def delta(self, a):
        return tuple(self.add(GateKind.DELTA, [a]))

    def plus(self, a, b):
        return self.add(GateKind.PLUS, [a, b])[0]

    def times(self, a, b):
        return self.add(GateKind.TIMES, [a, b])[0]

    def const_bit(self, b):
        return self.add(GateKind.CONST_BIT, [], payload=int(b))[0]

    def const_float(self, x):
        return self.add(GateKind.CONST_FLOAT, [], payload=float(x))[0]

    def func(self, table, var_wire):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2 or table.shape[1] != 2:
            raise GraphError("function table must have shape (grid, 2)")
        if table.shape[0] != self.var_grids[var_wire]:
            raise GraphError(
                f"variable grid {self.var_grids[var_wire]} does not match table {table.shape[0]}"
            )
        return self.add(GateKind.FUNC, [var_wire], payload=table)[0]

    def var_copy(self, v):
        return tuple(self.add(GateKind.VAR_COPY, [v]))

    def copies(self, wire: int, k: int) -> list[int]:
        """k usable copies of a bit or variable wire via a copy-tensor chain."""
        if k < 1:
            raise GraphError("need at least one copy")
        if k == 1:
            return [wire]
        maker = self.delta if self.wire_types[wire] == "bit" else self.var_copy
        outs = []
        current = wire
        for _ in range(k - 1):
            a, b = maker(current)
            outs.append(a)
            current = b
        outs.append(current)
        return outs

    def finish(self, output_groups: list[list[int]]) -> CircuitGraph:
        graph = CircuitGraph(
            nodes=self.nodes,
            wire_types=self.wire_types,
            input_groups=self.input_groups,
            output_groups=[list(g) for g in output_groups],
            var_grids=dict(self.var_grids),
        )
        graph.validate()
        return graph


# ---------------------------------------------------------------------------
# Binary arithmetic builders


def _half_adder(b: CircuitBuilder, x: int, y: int) -> tuple[int, int]:
    x1, x2 = b.delta(x)
    y1, y2 = b.delta(y)
    return b.xor(x1, y1), b.and_(x2, y2)


def _full_adder(b: CircuitBuilder, cin: int, x: int, y: int) -> tuple[int, int]:
    s1, c1 = _half_adder(b, x, y)
    s, c2 = _half_adder(b, cin, s1)
    return s, b.or_(c1, c2)


def build_half_adder() -> CircuitGraph:
    """Two bits in, (sum, carry) out."""
    b = CircuitBuilder()
    (x,) = b.input_bits(1)
    (y,) = b.input_bits(1)
    s, c = _half_adder(b, x, y)
    return b.finish([[s], [c]])


def build_full_adder() -> CircuitGraph:
    """(carry-in, x, y) in, (sum, carry) out."""
    b = CircuitBuilder()
    (cin,) = b.input_bits(1)
    (x,) = b.input_bits(1)
    (y,) = b.input_bits(1)
    s, c = _full_adder(b, cin, x, y)
    return b.finish([[s], [c]])


def _ripple_add(b: CircuitBuilder, xs: list[int], ys: list[int]) -> list[int]:
    """Sum of two equal-width bit strings, width+1 output bits."""
    if len(xs) != len(ys):
        raise GraphError("ripple adder needs equal widths")
    out = []
    s, carry = _half_adder(b, xs[0], ys[0])
    out.append(s)
    for i in range(1, len(xs)):
        s, carry = _full_adder(b, carry, xs[i], ys[i])
        out.append(s)
    out.append(carry)
    return out


def build_adder(n_bits: int) -> CircuitGraph:
    """Ripple adder: one half adder then n-1 full adders; n+1 output bits."""
    if n_bits < 1:
        raise ValueError("need at least one bit")
    b = CircuitBuilder()
    xs = b.input_bits(n_bits)
    ys = b.input_bits(n_bits)
    return b.finish([_ripple_add(b, xs, ys)])


def _shifted_accumulate(b: CircuitBuilder, rows: list[list[int]]) -> list[int]:
    """Sum rows[j] << j by sequential equal-width ripple additions."""
    acc = list(rows[0])
    for j in range(1, len(rows)):
        row = rows[j]
        # Bits below the shift pass through; pad both operands to a common
        # width and add the overlap.
        low = acc[:j]
        hi_acc = acc[j:]
        width = max(len(hi_acc), len(row))
        hi_acc = hi_acc + [b.const_bit(0) for _ in range(width - len(hi_acc))]
        row = list(row) + [b.const_bit(0) for _ in range(width - len(row))]
        acc = low + _ripple_add(b, hi_acc, row)
    return acc


def build_multiplier(m_bits: int, n_bits: int) -> CircuitGraph:
    """Long multiplication: AND-array partial products, copy-tensor fan-out,
    summed by shifted ripple adders. Output has m+n bits."""
    if m_bits < 1 or n_bits < 1:
        raise ValueError("need at least one bit per operand")
    b = CircuitBuilder()
    xs = b.input_bits(m_bits)
    ys = b.input_bits(n_bits)
    xcopies = [b.copies(x, n_bits) for x in xs]  # one copy of each x bit per y bit
    ycopies = [b.copies(y, m_bits) for y in ys]
    rows = []
    for j in range(n_bits):
        rows.append([b.and_(xcopies[i][j], ycopies[j][i]) for i in range(m_bits)])
    out = _shifted_accumulate(b, rows)
    return b.finish([out[: m_bits + n_bits]])


def build_square(n_bits: int) -> CircuitGraph:
    """z = x^2 from a single copy of the input bit string; all reuse is
    through copy tensors. Output has 2n bits."""
    if n_bits < 1:
        raise ValueError("need at least one bit")
    b = CircuitBuilder()
    xs = b.input_bits(n_bits)
    # Each bit is used n times as a row entry and once as the row selector.
    allcopies = [b.copies(x, n_bits + 1) for x in xs]
    rows = []
    for j in range(n_bits):
        selector = allcopies[j][n_bits]
        sel_copies = b.copies(selector, n_bits)
        rows.append([b.and_(allcopies[i][j], sel_copies[i]) for i in range(n_bits)])
    out = _shifted_accumulate(b, rows)
    return b.finish([out[: 2 * n_bits]])


# ---------------------------------------------------------------------------
# Evaluation


@dataclass
class EvalStats:
    contractions: int = 0


def eval_binary(graph: CircuitGraph, inputs: Sequence[BitVec]) -> list[BitVec]:
    """Contract a logic circuit on basis-vector inputs, input to output.

    Every intermediate wire must stay a basis vector (the product-state
    property); anything else raises :class:`InvariantError`. Work is linear
    in the gate count.
    """
    graph.validate()
    if len(inputs) != len(graph.input_groups):
        raise GraphError(f"expected {len(graph.input_groups)} input operands")
    values: dict[int, np.ndarray] = {}
    for group, vec in zip(graph.input_groups, inputs):
        if len(group) != len(vec):
            raise GraphError(f"operand width {len(vec)} does not match group {len(group)}")
        for w, bit in zip(group, vec.bits):
            values[w] = gate_tensor(GateKind.CONST_BIT, bit)
    for node in graph.nodes:
        if node.kind in (GateKind.CONST_BIT,):
            values[node.outputs[0]] = gate_tensor(node.kind, node.payload)
            continue
        if node.kind not in (GateKind.XOR, GateKind.AND, GateKind.OR, GateKind.DELTA):
            raise GraphError(f"{node.kind} is not a binary-circuit gate")
        t = gate_tensor(node.kind)
        for w in node.inputs:
            t = np.tensordot(values[w], t, axes=([0], [0]))
        flat = t.reshape(-1)
        hot = np.nonzero(flat)[0]
        if hot.size != 1 or not np.isclose(flat[hot[0]], 1.0):
            raise InvariantError("non-basis intermediate in binary evaluation")
        idx = np.unravel_index(hot[0], t.shape)
        for w, b in zip(node.outputs, idx):
            v = np.zeros(2)
            v[b] = 1.0
            values[w] = v
    out = []
    for group in graph.output_groups:
        bits = []
        for w in group:
            v = values[w]
            if not (np.isclose(v[0], 1.0) ^ np.isclose(v[1], 1.0)):
                raise InvariantError("non-basis output wire")
            bits.append(int(np.isclose(v[1], 1.0)))
        out.append(BitVec(tuple(bits)))
    return out


def float_encode(x: float) -> np.ndarray:
    """Real number as the length-2 vector (1, x)."""
    return np.array([1.0, float(x)])


def float_decode(v) -> float:
    """Inverse of :func:`float_encode`; the leading component must be 1."""
    v = np.asarray(v, dtype=float)
    if v.shape != (2,):
        raise RepresentationError(f"encoded reals have shape (2,), got {v.shape}")
    if abs(v[0] - 1.0) > 1e-12:
        raise RepresentationError(f"leading component {v[0]} is not 1")
    return float(v[1])


def eval_amp_circuit(
    graph: CircuitGraph, inputs: Sequence, memo: bool = True
) -> tuple[list[float], EvalStats]:
    """Evaluate an amplitude-arithmetic circuit on bound inputs.

    ``inputs`` supplies one value per input group: a float for an amp input,
    an int grid index for a variable input. With ``memo`` every node is
    contracted once and its ``(1, value)`` vector reused by all consumers;
    without it, shared subgraphs are re-contracted per path (the formal
    expanded tree). Values agree exactly either way.
    """
    graph.validate()
    if len(inputs) != len(graph.input_groups):
        raise GraphError(f"expected {len(graph.input_groups)} inputs")
    bound: dict[int, object] = {}
    for group, value in zip(graph.input_groups, inputs):
        if len(group) != 1:
            raise GraphError("amp circuits bind one wire per input group")
        w = group[0]
        if graph.wire_types[w] == "amp":
            bound[w] = float_encode(float(value))
        elif graph.wire_types[w] == "var":
            idx = int(value)
            if not 0 <= idx < graph.var_grids[w]:
                raise GraphError(f"grid index {idx} out of range")
            bound[w] = idx
        else:
            raise GraphError("binary inputs do not belong in amp evaluation")

    producer = {}
    for node in graph.nodes:
        for w in node.outputs:
            producer[w] = node
    stats = EvalStats()
    cache: dict[int, object] = {}

    def wire_value(w: int):
        if w in bound:
            return bound[w]
        node = producer.get(w)
        if node is None:
            raise GraphError(f"wire {w} unbound")
        if memo and id(node) in cache:
            vals = cache[id(node)]
        else:
            vals = node_value(node)
            if memo:
                cache[id(node)] = vals
        return vals[node.outputs.index(w)]

    def node_value(node: Node):
        stats.contractions += 1
        if node.kind == GateKind.CONST_FLOAT:
            return [gate_tensor(node.kind, node.payload)]
        if node.kind == GateKind.FUNC:
            idx = wire_value(node.inputs[0])
            return [np.asarray(node.payload)[idx].copy()]
        if node.kind == GateKind.VAR_COPY:
            idx = wire_value(node.inputs[0])
            return [idx, idx]
        if node.kind in (GateKind.PLUS, GateKind.TIMES):
            x = wire_value(node.inputs[0])
            y = wire_value(node.inputs[1])
            t = gate_tensor(node.kind)
            out = np.einsum("i,j,ijk->k", x, y, t)
            return [out]
        raise GraphError(f"{node.kind} is not an amplitude-circuit gate")

    results = []
    for group in graph.output_groups:
        if len(group) != 1:
            raise GraphError("amp circuits produce one wire per output group")
        results.append(float_decode(wire_value(group[0])))
    return results, stats


# ---------------------------------------------------------------------------
# Function composition over variable legs


def build_amp_function(expr, grids: dict[str, int]) -> CircuitGraph:
    """Graph for an expression tree over discretized single-variable
    functions.

    ``expr`` nodes: ``("func", table, varname)``, ``("plus", a, b)``,
    ``("times", a, b)``, ``("const", x)``. Same-variable composition routes
    the variable through copy tensors; each function application is an
    actual tensor in the graph, so ``f*f`` really contains two copies of the
    function tensor constrained to one grid index.
    """
    b = CircuitBuilder()
    var_wires = {name: b.input_var(g) for name, g in grids.items()}

    counts: dict[str, int] = {name: 0 for name in grids}

    def count_uses(e):
        if e[0] == "func":
            counts[e[2]] += 1
        elif e[0] in ("plus", "times"):
            count_uses(e[1])
            count_uses(e[2])
        elif e[0] != "const":
            raise GraphError(f"unknown expression node {e[0]!r}")

    count_uses(expr)
    pools = {
        name: iter(b.copies(var_wires[name], max(1, counts[name]))) for name in grids
    }

    def emit(e) -> int:
        if e[0] == "func":
            _, table, name = e
            table = np.asarray(table, dtype=float)
            if name not in grids:
                raise GraphError(f"unknown variable {name!r}")
            if table.shape[0] != grids[name]:
                raise GraphError(
                    f"table grid {table.shape[0]} does not match variable {name!r} grid {grids[name]}"
                )
            return b.func(table, next(pools[name]))
        if e[0] == "const":
            return b.const_float(e[1])
        a = emit(e[1])
        c = emit(e[2])
        return b.plus(a, c) if e[0] == "plus" else b.times(a, c)

    out = emit(expr)
    return b.finish([[out]])


def function_table(f, grid: np.ndarray) -> np.ndarray:
    """Discretized function tensor: row p is (1, f(x_p))."""
    grid = np.asarray(grid, dtype=float)
    return np.stack([np.ones_like(grid), np.array([f(x) for x in grid])], axis=1)


# ---------------------------------------------------------------------------
# Feed-forward networks


@dataclass
class FnnSpec:
    """Layer widths, affine parameters, and polynomial activations.

    ``activations[k]`` lists coefficients ascending in degree for layer k;
    degree must be at least 1.
    """

    widths: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[list[float]]

    def __post_init__(self):
        if len(self.widths) < 2:
            raise ValueError("need input and output layers")
        n_layers = len(self.widths) - 1
        if not (len(self.weights) == len(self.biases) == len(self.activations) == n_layers):
            raise ValueError("one weight matrix, bias, and activation per layer")
        for k in range(n_layers):
            w = np.asarray(self.weights[k])
            if w.shape != (self.widths[k + 1], self.widths[k]):
                raise ValueError(f"layer {k} weights {w.shape} != {(self.widths[k+1], self.widths[k])}")
            if np.asarray(self.biases[k]).shape != (self.widths[k + 1],):
                raise ValueError(f"layer {k} bias shape mismatch")
            if len(self.activations[k]) < 2:
                raise GraphError("activation polynomials need degree >= 1")

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Direct dense evaluation, the comparison oracle."""
        y = np.asarray(x, dtype=float)
        for w, b, coeffs in zip(self.weights, self.biases, self.activations):
            u = np.asarray(w) @ y + np.asarray(b)
            y = np.polyval(list(reversed(coeffs)), u)
        return y

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": 1,
                "widths": self.widths,
                "weights": [np.asarray(w).reshape(-1).tolist() for w in self.weights],
                "biases": [np.asarray(b).tolist() for b in self.biases],
                "activations": [list(map(float, a)) for a in self.activations],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "FnnSpec":
        d = json.loads(text)
        if d.get("version") != 1:
            raise ValueError(f"unsupported fnn version {d.get('version')}")
        widths = d["widths"]
        weights = [
            np.asarray(w, dtype=float).reshape(widths[k + 1], widths[k])
            for k, w in enumerate(d["weights"])
        ]
        biases = [np.asarray(b, dtype=float) for b in d["biases"]]
        return cls(widths, weights, biases, d["activations"])


def compile_fnn(spec: FnnSpec) -> CircuitGraph:
    """Arithmetic-circuit graph of the network.

    Each neuron becomes a chain of (x)/(+) nodes for the affine part and a
    Horner-form polynomial for the activation; layer outputs are shared by
    reference across the next layer's neurons, resolved by memoization at
    evaluation time rather than by duplicating subgraphs.
    """
    b = CircuitBuilder()
    xs = [b.input_amp() for _ in range(spec.widths[0])]
    layer = xs
    for w, bias, coeffs in zip(spec.weights, spec.biases, spec.activations):
        w = np.asarray(w)
        nxt = []
        for i in range(w.shape[0]):
            acc = b.const_float(float(bias[i]))
            for jx in range(w.shape[1]):
                term = b.times(b.const_float(float(w[i, jx])), layer[jx])
                acc = b.plus(acc, term)
            # Horner: (((c_d u + c_{d-1}) u + ...) u + c_0); u is shared.
            poly = b.const_float(float(coeffs[-1]))
            for c in reversed(coeffs[:-1]):
                poly = b.plus(b.times(poly, acc), b.const_float(float(c)))
            nxt.append(poly)
        layer = nxt
    return b.finish([[w] for w in layer])

"""Gate-level netlists for the block-level VOS multiplier family.

A multiplier is split into four sub-multipliers over the high/low operand
parts (``LL = A_L*B_L``, ``HL = A_H*B_L``, ``LH = A_L*B_H``, ``HH = A_H*B_H``)
and merged with two n-bit ripple adders, one half adder and one 2(n-k)-bit
ripple adder::

    ADDER1:   s1 = HL + LH                      (n bits + carry c1)
    ADDER2:   s2 = s1 + LL[2k-1:k]              (n bits + carry c2)
    HA_FINAL: (hs, hc) = half_add(c1, c2)
    ADDER3:   P[2n-1:2k] = HH + {hc, hs, s2[n-1:k]}

with ``P[k-1:0] = LL[k-1:0]`` and ``P[2k-1:k] = s2[k-1:0]``.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable

import numpy as np

CONST0 = "const0"
CONST1 = "const1"
CONSTANTS = (CONST0, CONST1)


class GateKind(str, enum.Enum):
    AND2 = "AND2"
    NAND2 = "NAND2"
    NOR2 = "NOR2"
    OR2 = "OR2"
    XOR2 = "XOR2"
    INV = "INV"
    BUF = "BUF"
    LEVEL_SHIFTER = "LEVEL_SHIFTER"

    @property
    def arity(self) -> int:
        return 1 if self in _UNARY else 2


_UNARY = {GateKind.INV, GateKind.BUF, GateKind.LEVEL_SHIFTER}


class BlockTag(str, enum.Enum):
    LL = "LL"
    HL = "HL"
    LH = "LH"
    HH = "HH"
    ADDER1 = "ADDER1"
    ADDER2 = "ADDER2"
    ADDER3 = "ADDER3"
    HA_FINAL = "HA_FINAL"
    GLUE = "GLUE"


class Structure(enum.IntEnum):
    BLVOS0 = 0
    BLVOS1 = 1
    BLVOS2 = 2
    BLVOS3 = 3
    BLVOS4 = 4

    @classmethod
    def parse(cls, text: str | int | Structure) -> Structure:
        if isinstance(text, Structure):
            return text
        if isinstance(text, int):
            return cls(text)
        key = text.strip().upper().replace("-", "").replace("_", "")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown structure {text!r}") from None


class Region(str, enum.Enum):
    APPROX = "APPROX"
    ACCURATE = "ACCURATE"


# Blocks whose supply is overscaled, per structure.
OVERSCALED_BLOCKS: dict[Structure, frozenset[BlockTag]] = {
    Structure.BLVOS0: frozenset(),
    Structure.BLVOS1: frozenset({BlockTag.LL}),
    Structure.BLVOS2: frozenset({BlockTag.LL, BlockTag.HL}),
    Structure.BLVOS3: frozenset({BlockTag.LL, BlockTag.HL, BlockTag.LH, BlockTag.ADDER1}),
    Structure.BLVOS4: frozenset(BlockTag),
}

GATEABLE_BLOCKS = frozenset({BlockTag.LL, BlockTag.HL, BlockTag.LH})

DEFAULT_GATE_DELAYS: dict[GateKind, float] = {
    GateKind.INV: 1.0,
    GateKind.BUF: 1.0,
    GateKind.AND2: 1.0,
    GateKind.OR2: 1.0,
    GateKind.NAND2: 1.0,
    GateKind.NOR2: 1.0,
    GateKind.XOR2: 2.0,
    # Replaced by the voltage-dependent shifter table when timing is assigned.
    GateKind.LEVEL_SHIFTER: 1.0,
}

DEFAULT_TRUNCATION = 4


class SpecError(ValueError):
    """Raised for a multiplier description that violates its invariants."""


@dataclass(frozen=True)
class Gate:
    id: str
    kind: GateKind
    inputs: tuple[str, ...]
    output: str
    block_tag: BlockTag
    nominal_delay: float


@dataclass(frozen=True)
class MultiplierSpec:
    n: int
    k: int
    structure: Structure = Structure.BLVOS0
    truncation: int = 0
    gated_blocks: frozenset[BlockTag] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "structure", Structure.parse(self.structure))
        object.__setattr__(self, "gated_blocks", frozenset(BlockTag(b) for b in self.gated_blocks))
        check_spec(self)

    def describe(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "structure": self.structure.name,
            "truncation": self.truncation,
            "gated_blocks": sorted(b.value for b in self.gated_blocks),
        }


def check_spec(spec: MultiplierSpec) -> None:
    if spec.n < 2:
        raise SpecError(f"operand width n={spec.n} must be at least 2")
    if not 0 < spec.k < spec.n:
        raise SpecError(f"0 < k < n violated (n={spec.n}, k={spec.k})")
    if not 0 <= spec.truncation < 2 * spec.n:
        raise SpecError(f"truncation {spec.truncation} outside [0, {2 * spec.n})")
    bad = spec.gated_blocks - GATEABLE_BLOCKS
    if bad:
        raise SpecError(f"only LL, HL and LH can be gated, got {sorted(b.value for b in bad)}")


@dataclass(frozen=True)
class Netlist:
    gates: tuple[Gate, ...]
    primary_inputs: tuple[str, ...]
    primary_outputs: tuple[str, ...]
    n: int
    k: int

    @cached_property
    def driver(self) -> dict[str, Gate]:
        return {g.output: g for g in self.gates}

    @cached_property
    def fanout(self) -> dict[str, list[Gate]]:
        out: dict[str, list[Gate]] = {}
        for g in self.gates:
            for net in g.inputs:
                out.setdefault(net, []).append(g)
        return out

    @cached_property
    def gate_index(self) -> dict[str, int]:
        return {g.id: i for i, g in enumerate(self.gates)}

    def topological_order(self) -> list[Gate]:
        """Gates sorted so every driver precedes its readers (Kahn's algorithm)."""
        known = set(self.primary_inputs) | set(CONSTANTS)
        pending = {g.id: sum(1 for x in g.inputs if x not in known) for g in self.gates}
        ready = [g for g in self.gates if pending[g.id] == 0]
        order: list[Gate] = []
        while ready:
            g = ready.pop(0)
            order.append(g)
            for reader in self.fanout.get(g.output, ()):
                pending[reader.id] -= reader.inputs.count(g.output)
                if pending[reader.id] == 0:
                    ready.append(reader)
        if len(order) != len(self.gates):
            raise SpecError("netlist contains a combinational cycle")
        return order


# ----------------------------------------------------------------------------
# construction


class _Builder:
    """Emits gates with constant folding so that gated or truncated logic vanishes."""

    def __init__(self, delays: dict[GateKind, float]):
        self.delays = delays
        self.gates: list[Gate] = []
        self.tag = BlockTag.GLUE

    def _emit(self, kind: GateKind, *inputs: str) -> str:
        idx = len(self.gates)
        out = f"n{idx}"
        self.gates.append(Gate(f"g{idx}", kind, tuple(inputs), out, self.tag, self.delays[kind]))
        return out

    def and2(self, x: str, y: str) -> str:
        if CONST0 in (x, y):
            return CONST0
        if x == CONST1:
            return y
        if y == CONST1:
            return x
        return self._emit(GateKind.AND2, x, y)

    def or2(self, x: str, y: str) -> str:
        if CONST1 in (x, y):
            return CONST1
        if x == CONST0:
            return y
        if y == CONST0:
            return x
        return self._emit(GateKind.OR2, x, y)

    def xor2(self, x: str, y: str) -> str:
        if x == CONST0:
            return y
        if y == CONST0:
            return x
        if x == CONST1 and y == CONST1:
            return CONST0
        if CONST1 in (x, y):
            return self._emit(GateKind.INV, y if x == CONST1 else x)
        return self._emit(GateKind.XOR2, x, y)

    def half_add(self, x: str, y: str) -> tuple[str, str]:
        return self.xor2(x, y), self.and2(x, y)

    def full_add(self, x: str, y: str, cin: str) -> tuple[str, str]:
        # Constant operands are pushed to the carry-in slot so folding yields a half adder.
        ops = sorted((x, y, cin), key=lambda s: s in CONSTANTS)
        x, y, cin = ops
        if cin == CONST0:
            return self.half_add(x, y)
        p = self.xor2(x, y)
        s = self.xor2(p, cin)
        c = self.or2(self.and2(x, y), self.and2(p, cin))
        return s, c

    def ripple_add(self, xs: list[str], ys: list[str], width: int) -> tuple[list[str], str]:
        xs = _pad(xs, width)
        ys = _pad(ys, width)
        carry = CONST0
        out = []
        for x, y in zip(xs, ys):
            s, carry = self.full_add(x, y, carry)
            out.append(s)
        return out, carry

    def array_multiply(self, xs: list[str], ys: list[str], offset: int, truncation: int) -> list[str]:
        """Unsigned carry-save array multiplier; returns len(xs)+len(ys) product bits.

        Partial products whose global column weight ``offset + i + j`` falls below
        ``truncation`` are dropped.
        """
        width = len(xs) + len(ys)

        def pp(i: int, j: int) -> str:
            if offset + i + j < truncation:
                return CONST0
            return self.and2(xs[j], ys[i])

        sums = [CONST0] * (width + 1)
        carries = [CONST0] * (width + 1)
        for j in range(len(xs)):
            sums[j] = pp(0, j)
        for i in range(1, len(ys)):
            row = [CONST0] * (width + 1)
            for j in range(len(xs)):
                row[i + j] = pp(i, j)
            new_s = [CONST0] * (width + 1)
            new_c = [CONST0] * (width + 1)
            for w in range(width):
                s, c = self.full_add(sums[w], carries[w], row[w])
                new_s[w] = s
                new_c[w + 1] = c
            sums, carries = new_s, new_c
        out, _ = self.ripple_add(sums[:width], carries[:width], width)
        return out


def _pad(bits: list[str], width: int) -> list[str]:
    return (list(bits) + [CONST0] * width)[:width]


def decompose_operand(x: int, n: int, k: int) -> tuple[int, int]:
    """Split an n-bit operand into its (n-k)-bit high part and k-bit low part."""
    if not 0 < k < n:
        raise SpecError(f"0 < k < n violated (n={n}, k={k})")
    if not 0 <= x < (1 << n):
        raise ValueError(f"operand {x} does not fit in {n} bits")
    return x >> k, x & ((1 << k) - 1)


@lru_cache(maxsize=64)
def _build_cached(spec: MultiplierSpec, delay_items: tuple) -> Netlist:
    delays = dict(delay_items)
    n, k, t = spec.n, spec.k, spec.truncation
    a = [f"a{i}" for i in range(n)]
    b = [f"b{i}" for i in range(n)]
    bld = _Builder(delays)

    def block(tag: BlockTag, xs, ys, offset: int) -> list[str]:
        if tag in spec.gated_blocks:
            return [CONST0] * (len(xs) + len(ys))
        bld.tag = tag
        return bld.array_multiply(xs, ys, offset, t)

    ll = block(BlockTag.LL, a[:k], b[:k], 0)
    hl = block(BlockTag.HL, a[k:], b[:k], k)
    lh = block(BlockTag.LH, a[:k], b[k:], k)
    hh = block(BlockTag.HH, a[k:], b[k:], 2 * k)

    bld.tag = BlockTag.ADDER1
    s1, c1 = bld.ripple_add(hl, lh, n)
    bld.tag = BlockTag.ADDER2
    s2, c2 = bld.ripple_add(s1, ll[k:], n)
    bld.tag = BlockTag.HA_FINAL
    hs, hc = bld.half_add(c1, c2)
    bld.tag = BlockTag.ADDER3
    upper, _ = bld.ripple_add(hh, s2[k:] + [hs, hc], 2 * (n - k))

    outputs = ll[:k] + s2[:k] + upper
    # Truncated columns are hard-wired to zero.
    outputs = [CONST0 if i < t else net for i, net in enumerate(outputs)]
    return Netlist(tuple(bld.gates), tuple(a + b), tuple(outputs), n, k)


def build_multiplier(spec: MultiplierSpec, delays: dict[GateKind, float] | None = None) -> Netlist:
    """Gate-level netlist of the block-decomposed multiplier described by ``spec``."""
    check_spec(spec)
    table = dict(DEFAULT_GATE_DELAYS)
    if delays:
        table.update({GateKind(k): float(v) for k, v in delays.items()})
    return _build_cached(spec, tuple(sorted(table.items())))


# ----------------------------------------------------------------------------
# validation and region queries


def validate(net: Netlist) -> list[str]:
    """Structural checks; returns diagnostics (empty list means well-formed)."""
    diags: list[str] = []
    drivers = Counter(net.primary_inputs)
    drivers.update(CONSTANTS)
    for g in net.gates:
        drivers[g.output] += 1
    for g in net.gates:
        if not isinstance(g.kind, GateKind):
            diags.append(f"gate {g.id}: unknown kind {g.kind!r}")
            continue
        if len(g.inputs) != g.kind.arity:
            diags.append(f"gate {g.id}: {g.kind.value} expects {g.kind.arity} inputs, has {len(g.inputs)}")
        if not isinstance(g.block_tag, BlockTag):
            diags.append(f"gate {g.id}: missing block tag")
        if not g.nominal_delay > 0:
            diags.append(f"gate {g.id}: non-positive delay {g.nominal_delay}")
        if drivers[g.output] > 1:
            diags.append(f"net {g.output}: {drivers[g.output]} drivers (first offender gate {g.id})")
        for x in g.inputs:
            if drivers[x] == 0:
                diags.append(f"gate {g.id}: input net {x} has no driver")
    for net_id in net.primary_outputs:
        if drivers[net_id] == 0:
            diags.append(f"primary output {net_id} has no driver")
    if len(net.primary_outputs) != 2 * net.n:
        diags.append(f"expected {2 * net.n} primary outputs, found {len(net.primary_outputs)}")
    if not 0 < net.k < net.n:
        diags.append(f"0 < k < n violated (n={net.n}, k={net.k})")
    if not diags:
        try:
            net.topological_order()
        except SpecError as exc:
            diags.append(str(exc))
    return diags


def region_gate_sets(net: Netlist, structure: Structure | str) -> dict[Region, frozenset[str]]:
    structure = Structure.parse(structure)
    ticked = OVERSCALED_BLOCKS[structure]
    approx = frozenset(g.id for g in net.gates if g.block_tag in ticked)
    accurate = frozenset(g.id for g in net.gates) - approx
    return {Region.APPROX: approx, Region.ACCURATE: accurate}


def output_region(structure: Structure) -> Region:
    """Domain of the output registers; they share the supply of the final adder."""
    return Region.APPROX if BlockTag.ADDER3 in OVERSCALED_BLOCKS[structure] else Region.ACCURATE


def crossing_nets(net: Netlist, structure: Structure | str) -> list[str]:
    """Nets driven from the APPROX region and read by the ACCURATE region or an output register."""
    structure = Structure.parse(structure)
    approx = region_gate_sets(net, structure)[Region.APPROX]
    po = set(net.primary_outputs) if output_region(structure) is Region.ACCURATE else set()
    out = []
    for g in net.gates:
        if g.id not in approx:
            continue
        readers = net.fanout.get(g.output, ())
        if g.output in po or any(r.id not in approx for r in readers):
            out.append(g.output)
    return out


def level_shifter_count(structure: Structure | str, n: int, k: int) -> int:
    structure = Structure.parse(structure)
    if not 0 < k < n:
        raise SpecError(f"0 < k < n violated (n={n}, k={k})")
    return {
        Structure.BLVOS0: 0,
        Structure.BLVOS1: 2 * k,
        Structure.BLVOS2: 2 * k + n,
        Structure.BLVOS3: 2 * k + n + 1,
        Structure.BLVOS4: 0,
    }[structure]


def insert_level_shifters(net: Netlist, approx: frozenset[str], nets: Iterable[str], delay: float,
                          shift_outputs: bool = True) -> Netlist:
    """Route each crossing net through a LEVEL_SHIFTER before it reaches accurate readers.

    Readers inside ``approx`` keep the original net; ``shift_outputs`` also moves
    primary outputs onto the shifted copy.
    """
    shifted = {x: f"{x}_ls" for x in nets}
    if not shifted:
        return net
    gates: list[Gate] = []
    for g in net.gates:
        if g.id not in approx and any(x in shifted for x in g.inputs):
            g = Gate(g.id, g.kind, tuple(shifted.get(x, x) for x in g.inputs), g.output,
                     g.block_tag, g.nominal_delay)
        gates.append(g)
    for g in net.gates:
        if g.output in shifted:
            gates.append(Gate(f"ls_{g.id}", GateKind.LEVEL_SHIFTER, (g.output,), shifted[g.output],
                              BlockTag.GLUE, delay))
    outputs = net.primary_outputs
    if shift_outputs:
        outputs = tuple(shifted.get(x, x) for x in outputs)
    rewired = Netlist(tuple(gates), net.primary_inputs, outputs, net.n, net.k)
    return Netlist(tuple(rewired.topological_order()), net.primary_inputs, outputs, net.n, net.k)


# ----------------------------------------------------------------------------
# evaluation and dumps


def _apply(kind: GateKind, x, y=None):
    if kind is GateKind.AND2:
        return x & y
    if kind is GateKind.NAND2:
        return ~(x & y) & 1
    if kind is GateKind.OR2:
        return x | y
    if kind is GateKind.NOR2:
        return ~(x | y) & 1
    if kind is GateKind.XOR2:
        return x ^ y
    if kind is GateKind.INV:
        return ~x & 1
    return x


def evaluate(net: Netlist, a, b):
    """Zero-delay evaluation; ``a`` and ``b`` may be ints or integer arrays."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    values = {CONST0: np.zeros_like(a), CONST1: np.ones_like(a)}
    for i in range(net.n):
        values[net.primary_inputs[i]] = (a >> i) & 1
        values[net.primary_inputs[net.n + i]] = (b >> i) & 1
    for g in net.topological_order():
        values[g.output] = _apply(g.kind, *(values[x] for x in g.inputs))
    out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
    for i, x in enumerate(net.primary_outputs):
        out = out | (values[x] << i)
    return int(out) if out.ndim == 0 else out


def dump_netlist(net: Netlist) -> str:
    lines = [f"# n={net.n} k={net.k} gates={len(net.gates)}",
             "# inputs " + " ".join(net.primary_inputs),
             "# outputs " + " ".join(net.primary_outputs)]
    for g in net.gates:
        lines.append(f"{g.id} {g.kind.value} {g.block_tag.value} {','.join(g.inputs)} {g.output}")
    return "\n".join(lines) + "\n"

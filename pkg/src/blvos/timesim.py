"""Two-vector timing simulation of voltage-overscaled multipliers.

Each evaluation starts from the steady state of the previous operand pair,
switches the primary inputs at t=0 and propagates transitions with pure
transport delays.  Output bits whose last transition lands after the clock
edge keep their pre-switch value.  The clock period is always the nominal
critical path of the multiplier, so slowing a region down shows up as
sampled errors.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numba
import numpy as np

from . import _kernels
from .circuit import (CONST0, CONST1, GateKind, MultiplierSpec, Netlist, Region, Structure,
                      build_multiplier, insert_level_shifters)
from .models import DEFAULT_MODELS, ModelTables
from .volt import assign_domains, delay_scale, shifter_delay

MAX_TABLE_BITS = 12

_KIND_CODE = {
    GateKind.AND2: _kernels.K_AND2, GateKind.NAND2: _kernels.K_NAND2, GateKind.OR2: _kernels.K_OR2,
    GateKind.NOR2: _kernels.K_NOR2, GateKind.XOR2: _kernels.K_XOR2, GateKind.INV: _kernels.K_INV,
    GateKind.BUF: _kernels.K_BUF, GateKind.LEVEL_SHIFTER: _kernels.K_LS,
}


class Mode(str, enum.Enum):
    RESET = "RESET"
    PAIRED = "PAIRED"


@dataclass(frozen=True)
class Config:
    """One operating point: multiplier structure, supply level and model tables."""

    spec: MultiplierSpec
    v_approx: float | None = None
    accurate_mode: bool = False
    models: ModelTables = field(default=DEFAULT_MODELS)

    def __post_init__(self):
        if self.v_approx is None and not self.accurate_mode:
            object.__setattr__(self, "accurate_mode", True)

    @property
    def accurate(self) -> bool:
        """True when every region runs from the nominal rail."""
        return self.accurate_mode or self.spec.structure is Structure.BLVOS0

    @property
    def supply(self) -> float:
        return self.models.voltage.v_nominal if self.accurate else float(self.v_approx)

    def describe(self) -> dict:
        return {**self.spec.describe(), "v_approx": self.v_approx, "accurate_mode": self.accurate_mode}

    @property
    def hash(self) -> str:
        payload = json.dumps({"config": self.describe(), "models": self.models.key}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def baseline(self) -> Config:
        """Exact multiplier with the same split, used as the energy reference."""
        return Config(MultiplierSpec(self.spec.n, self.spec.k), None, True, self.models)


@dataclass(frozen=True, eq=False)
class TimedNetlist:
    net: Netlist
    gate_delay: np.ndarray
    gate_voltage: np.ndarray
    energy_weight: np.ndarray
    t_clk: float

    def __post_init__(self):
        if np.any(self.gate_delay <= 0):
            raise ValueError("all gate delays must be positive")

    @cached_property
    def compiled(self) -> tuple:
        net = self.net
        index = {CONST0: 0, CONST1: 1}
        for i, x in enumerate(net.primary_inputs):
            index[x] = 2 + i
        for g in net.gates:
            index[g.output] = len(index)
        kind = np.array([_KIND_CODE[g.kind] for g in net.gates], np.int64)
        in0 = np.array([index[g.inputs[0]] for g in net.gates], np.int64)
        in1 = np.array([index[g.inputs[1]] if len(g.inputs) > 1 else -1 for g in net.gates], np.int64)
        out = np.array([index[g.output] for g in net.gates], np.int64)
        po = np.array([index[x] for x in net.primary_outputs], np.int64)
        return kind, in0, in1, out, po, len(index)

    def with_delays(self, gate_delay: np.ndarray) -> TimedNetlist:
        return TimedNetlist(self.net, np.asarray(gate_delay, float), self.gate_voltage,
                            self.energy_weight, self.t_clk)


@dataclass(frozen=True)
class SimOutcome:
    sampled: int
    settled: int
    violating_bits: frozenset[int]
    toggles: dict[str, int]
    last_transition: tuple[float | None, ...]
    energy: float


@dataclass(frozen=True)
class BatchResult:
    sampled: np.ndarray
    settled: np.ndarray
    violating: np.ndarray
    energy: np.ndarray


def critical_path(net: Netlist, delays=None) -> float:
    """Longest input-to-output path, by a topological arrival-time sweep."""
    if delays is None:
        delays = [g.nominal_delay for g in net.gates]
    arrival = {x: 0.0 for x in net.primary_inputs}
    arrival[CONST0] = arrival[CONST1] = float("-inf")
    pos = net.gate_index
    for g in net.topological_order():
        arrival[g.output] = max(arrival[x] for x in g.inputs) + float(delays[pos[g.id]])
    return max([arrival[x] for x in net.primary_outputs] + [0.0])


def _timed(config: Config, delta_vth: dict[Region, float] | None = None) -> TimedNetlist:
    models = config.models
    spec = config.spec
    base = build_multiplier(spec, models.gate_delays)
    dom = assign_domains(base, spec.structure, config.v_approx, config.accurate_mode, models.voltage)
    ls_delay = shifter_delay(float(config.v_approx), models.shifter_delays) if dom.shifter_nets else 0.0
    net = insert_level_shifters(base, dom.approx_gates, sorted(dom.shifter_nets, key=_net_order), ls_delay)
    delta_vth = delta_vth or {}
    scale = {}
    for region, v in dom.region_voltage.items():
        scale[region] = delay_scale(models.voltage, v, delta_vth.get(region, 0.0))
    delays = np.empty(len(net.gates))
    volts = np.empty(len(net.gates))
    weights = np.empty(len(net.gates))
    caps = models.energy.cap_per_kind
    for i, g in enumerate(net.gates):
        if g.kind is GateKind.LEVEL_SHIFTER:
            delays[i] = g.nominal_delay
            volts[i] = models.voltage.v_nominal
            weights[i] = models.energy.shifter_energy_per_event
            continue
        region = Region.APPROX if g.id in dom.approx_gates else Region.ACCURATE
        v = dom.region_voltage[region]
        delays[i] = g.nominal_delay * scale[region]
        volts[i] = v
        weights[i] = caps[g.kind] * v * v
    return TimedNetlist(net, delays, volts, weights, critical_path(base))


def _net_order(name: str):
    return (len(name), name)


@lru_cache(maxsize=256)
def timed_netlist(config: Config, aged_delta: tuple[tuple[Region, float], ...] = ()) -> TimedNetlist:
    """Timing-annotated netlist for ``config``; ``aged_delta`` shifts each region's threshold."""
    return _timed(config, dict(aged_delta))


def simulate_batch(tn: TimedNetlist, prev_a, prev_b, cur_a, cur_b) -> BatchResult:
    kind, in0, in1, out, po, n_nets = tn.compiled
    arrays = [np.ascontiguousarray(x, dtype=np.int64) for x in (prev_a, prev_b, cur_a, cur_b)]
    cap = max(1024, 32 * n_nets)
    sampled, settled, violating, energy, status = _kernels.run_batch(
        kind, in0, in1, out, tn.gate_delay, tn.energy_weight, po, tn.net.n, n_nets, tn.t_clk,
        *arrays, cap)
    while status.any():
        # Waveform buffer overflowed for a few glitch-heavy pairs; redo them with more room.
        cap *= 4
        idx = np.flatnonzero(status)
        s2, st2, v2, e2, status2 = _kernels.run_batch(
            kind, in0, in1, out, tn.gate_delay, tn.energy_weight, po, tn.net.n, n_nets, tn.t_clk,
            *(x[idx] for x in arrays), cap)
        sampled[idx], settled[idx], violating[idx], energy[idx] = s2, st2, v2, e2
        status = np.zeros_like(status)
        status[idx] = status2
    return BatchResult(sampled, settled, violating, energy)


def simulate_pair(tn: TimedNetlist, prev: tuple[int, int], cur: tuple[int, int]) -> SimOutcome:
    limit = 1 << tn.net.n
    if not all(0 <= x < limit for x in (*prev, *cur)):
        raise ValueError(f"operands must be below 2**{tn.net.n}")
    kind, in0, in1, out, po, n_nets = tn.compiled
    cap = max(1024, 32 * n_nets)
    while True:
        ok, s, st, v, e, toggles, last = _kernels.run_one(
            kind, in0, in1, out, tn.gate_delay, tn.energy_weight, po, tn.net.n, n_nets, tn.t_clk,
            prev[0], prev[1], cur[0], cur[1], cap)
        if ok:
            break
        cap *= 4
    bits = frozenset(i for i in range(len(po)) if (v >> i) & 1)
    counts = {g.id: int(c) for g, c in zip(tn.net.gates, toggles)}
    last_t = tuple(None if x < 0 else float(x) for x in last)
    return SimOutcome(int(s), int(st), bits, counts, last_t, float(e))


def previous_vectors(a: np.ndarray, b: np.ndarray, mode: Mode | str) -> tuple[np.ndarray, np.ndarray]:
    """Operands applied before each evaluation; a PAIRED stream starts from the reset state."""
    mode = Mode(mode)
    if mode is Mode.RESET:
        return np.zeros_like(a), np.zeros_like(b)
    pa = np.zeros_like(a)
    pb = np.zeros_like(b)
    pa[1:] = a[:-1]
    pb[1:] = b[:-1]
    return pa, pb


def run_trace(tn: TimedNetlist, a, b, mode: Mode | str) -> BatchResult:
    a = np.asarray(a, np.int64)
    b = np.asarray(b, np.int64)
    pa, pb = previous_vectors(a, b, mode)
    return simulate_batch(tn, pa, pb, a, b)


@dataclass(frozen=True, eq=False)
class ResetTable:
    """Sampled products for every operand pair, each evaluated from the all-zero state."""

    n: int
    products: np.ndarray
    energy: np.ndarray
    config_hash: str

    def __call__(self, a, b):
        return self.products[a, b]


class PairedStream:
    """Streaming evaluator: every call switches from the previous call's operands."""

    def __init__(self, tn: TimedNetlist):
        self.tn = tn
        self.prev = (0, 0)
        self.energy = 0.0

    def __call__(self, a: int, b: int) -> int:
        out = simulate_pair(self.tn, self.prev, (int(a), int(b)))
        self.prev = (int(a), int(b))
        self.energy += out.energy
        return out.sampled

    def run(self, a, b) -> np.ndarray:
        a = np.asarray(a, np.int64)
        b = np.asarray(b, np.int64)
        pa, pb = previous_vectors(a, b, Mode.PAIRED)
        pa[0], pb[0] = self.prev
        res = simulate_batch(self.tn, pa, pb, a, b)
        if len(a):
            self.prev = (int(a[-1]), int(b[-1]))
        self.energy += float(res.energy.sum())
        return res.sampled


def tabulate(tn: TimedNetlist, mode: Mode | str = Mode.RESET, config_hash: str = ""):
    mode = Mode(mode)
    if mode is Mode.PAIRED:
        return PairedStream(tn)
    n = tn.net.n
    if n > MAX_TABLE_BITS:
        raise ValueError(f"RESET tables are limited to n <= {MAX_TABLE_BITS} (got n={n})")
    side = 1 << n
    a = np.repeat(np.arange(side, dtype=np.int64), side)
    b = np.tile(np.arange(side, dtype=np.int64), side)
    res = run_trace(tn, a, b, Mode.RESET)
    return ResetTable(n, res.sampled.reshape(side, side).astype(np.uint32),
                      res.energy.reshape(side, side), config_hash)


@lru_cache(maxsize=32)
def reset_table(config: Config) -> ResetTable:
    return tabulate(timed_netlist(config), Mode.RESET, config.hash)


def multiply_approx(config: Config, a: int, b: int, mode: Mode | str = Mode.RESET,
                    prev: tuple[int, int] = (0, 0)) -> int:
    mode = Mode(mode)
    tn = timed_netlist(config)
    start = (0, 0) if mode is Mode.RESET else prev
    return simulate_pair(tn, start, (a, b)).sampled


def set_threads(threads: int | None) -> int:
    """Cap the simulation worker count; results do not depend on it."""
    available = numba.config.NUMBA_NUM_THREADS
    count = available if not threads else max(1, min(int(threads), available))
    numba.set_num_threads(count)
    return count


def save_table(table: ResetTable, path: str | Path, config: dict | None = None) -> None:
    """Write the flat little-endian uint32 table plus a JSON sidecar."""
    path = Path(path)
    path.write_bytes(table.products.astype("<u4").tobytes(order="C"))
    meta = {"n": table.n, "mode": Mode.RESET.value, "entries": int(table.products.size),
            "layout": "row-major over (a, b)", "dtype": "uint32 little-endian",
            "config_hash": table.config_hash, "config": config or {}}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_table(path: str | Path, expect_hash: str | None = None) -> ResetTable:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    if expect_hash is not None and meta["config_hash"] != expect_hash:
        raise ValueError(f"table {path} was built for config {meta['config_hash']}, not {expect_hash}")
    side = 1 << meta["n"]
    raw = np.frombuffer(path.read_bytes(), dtype="<u4")
    if raw.size != side * side:
        raise ValueError(f"table {path} holds {raw.size} entries, expected {side * side}")
    products = raw.reshape(side, side).astype(np.uint32)
    return ResetTable(meta["n"], products, np.full((side, side), np.nan), meta["config_hash"])

"""Supply-voltage domains, alpha-power-law delay scaling and the toggle energy model."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .circuit import (GateKind, Netlist, Region, Structure, crossing_nets, output_region,
                      region_gate_sets)

V_NOMINAL = 0.8
APPROX_LEVELS = (0.75, 0.65, 0.55, 0.45, 0.4)


class Device(str, enum.Enum):
    NMOS = "NMOS"
    PMOS = "PMOS"


class ThresholdMarginError(ValueError):
    """Overscaling pushes the supply too close to the (aged) threshold voltage."""


@dataclass(frozen=True)
class VoltageModel:
    v_nominal: float = V_NOMINAL
    approx_levels: tuple[float, ...] = APPROX_LEVELS
    # (V_DD, vth_nmos, vth_pmos); PMOS stored as the signed value.
    vth_anchors: tuple[tuple[float, float, float], ...] = ((0.4, 0.205, -0.181), (0.8, 0.175, -0.190))
    alpha: float = 1.3
    margin_floor: float = 0.05

    def __post_init__(self):
        levels = tuple(float(v) for v in self.approx_levels)
        object.__setattr__(self, "approx_levels", levels)
        anchors = tuple(sorted(tuple(float(x) for x in a) for a in self.vth_anchors))
        object.__setattr__(self, "vth_anchors", anchors)
        if any(b >= a for a, b in zip(levels, levels[1:])):
            raise ValueError("approximate levels must be strictly decreasing")
        if any(v >= self.v_nominal for v in levels):
            raise ValueError("approximate levels must lie below the nominal supply")
        if len(anchors) < 2:
            raise ValueError("at least two threshold-voltage anchors are required")
        for v, vn, _ in anchors:
            if v - vn <= 0:
                raise ValueError(f"anchor at {v} V has no gate overdrive")


@dataclass(frozen=True)
class EnergyModel:
    cap_per_kind: dict[GateKind, float] = field(default_factory=lambda: {
        GateKind.INV: 0.6,
        GateKind.BUF: 0.8,
        GateKind.NAND2: 1.0,
        GateKind.NOR2: 1.0,
        GateKind.AND2: 1.2,
        GateKind.OR2: 1.2,
        GateKind.XOR2: 2.0,
        GateKind.LEVEL_SHIFTER: 0.8,
    })
    # One BUF-equivalent event at the nominal supply.
    shifter_energy_per_event: float = 0.8 * V_NOMINAL ** 2

    def __post_init__(self):
        caps = {GateKind(k): float(v) for k, v in self.cap_per_kind.items()}
        object.__setattr__(self, "cap_per_kind", caps)
        if any(c <= 0 for c in caps.values()):
            raise ValueError("capacitances must be positive")


DEFAULT_SHIFTER_DELAYS = {0.75: 0.5, 0.65: 0.5, 0.55: 0.5, 0.45: 2.0, 0.4: 4.0}


@dataclass(frozen=True)
class DomainAssignment:
    region_voltage: dict[Region, float]
    shifter_nets: frozenset[str]
    approx_gates: frozenset[str]
    structure: Structure
    accurate_mode: bool

    def voltage_of(self, gate_id: str) -> float:
        region = Region.APPROX if gate_id in self.approx_gates else Region.ACCURATE
        return self.region_voltage[region]


def vth_at(model: VoltageModel, v: float, device: Device | str) -> float:
    """Threshold-voltage magnitude at supply ``v``, linearly interpolated between anchors."""
    device = Device(device)
    anchors = model.vth_anchors
    lo, hi = anchors[0][0], anchors[-1][0]
    if not lo - 1e-12 <= v <= hi + 1e-12:
        raise ValueError(f"supply {v} V outside the threshold anchor range [{lo}, {hi}]")
    col = 1 if device is Device.NMOS else 2
    return float(np.interp(v, [a[0] for a in anchors], [abs(a[col]) for a in anchors]))


def vth_eff(model: VoltageModel, v: float) -> float:
    return 0.5 * (vth_at(model, v, Device.NMOS) + vth_at(model, v, Device.PMOS))


def _raw_delay(model: VoltageModel, v: float, delta_vth: float) -> float:
    overdrive = v - vth_eff(model, v) - delta_vth
    if overdrive <= model.margin_floor:
        raise ThresholdMarginError(
            f"overscaling below threshold margin: V={v} V leaves {overdrive:.4f} V of overdrive "
            f"(floor {model.margin_floor} V)")
    return v / overdrive ** model.alpha


def delay_scale(model: VoltageModel, v: float, delta_vth: float = 0.0) -> float:
    """Gate delay at supply ``v`` (threshold shifted by ``delta_vth``) relative to fresh nominal."""
    if v == model.v_nominal and delta_vth == 0.0:
        return 1.0
    return _raw_delay(model, v, delta_vth) / _raw_delay(model, model.v_nominal, 0.0)


def shifter_delay(v_from: float, table: dict[float, float] | None = None) -> float:
    table = DEFAULT_SHIFTER_DELAYS if table is None else table
    for level, d in table.items():
        if abs(float(level) - v_from) < 1e-9:
            return float(d)
    raise ValueError(f"no level-shifter delay for {v_from} V")


def toggle_energy(kind: GateKind | str, v: float, model: EnergyModel | None = None) -> float:
    model = model or EnergyModel()
    kind = GateKind(kind)
    if kind not in model.cap_per_kind:
        raise ValueError(f"no capacitance for gate kind {kind.value}")
    if v < 0:
        raise ValueError("supply must be non-negative")
    return model.cap_per_kind[kind] * v * v


def assign_domains(net: Netlist, structure: Structure | str, v_approx: float | None, accurate_mode: bool = False,
                   model: VoltageModel | None = None) -> DomainAssignment:
    """Supply per region plus the nets that need level shifters.

    In accurate mode the switch box drives every region from the nominal rail, so
    no conversion is required and ``shifter_nets`` is empty.
    """
    model = model or VoltageModel()
    structure = Structure.parse(structure)
    if v_approx is None:
        if not accurate_mode:
            raise ValueError("an approximate supply level is required outside accurate mode")
    elif not any(abs(v_approx - lv) < 1e-9 for lv in model.approx_levels):
        raise ValueError(f"{v_approx} V is not one of the approximate levels {model.approx_levels}")
    regions = region_gate_sets(net, structure)
    approx = regions[Region.APPROX]
    if accurate_mode or not approx:
        voltages = {Region.APPROX: model.v_nominal, Region.ACCURATE: model.v_nominal}
        shifters: frozenset[str] = frozenset()
    else:
        voltages = {Region.APPROX: v_approx, Region.ACCURATE: model.v_nominal}
        shifters = frozenset(crossing_nets(net, structure))
    return DomainAssignment(voltages, shifters, approx, structure, accurate_mode)


def outputs_are_shifted(structure: Structure) -> bool:
    return output_region(structure) is Region.ACCURATE

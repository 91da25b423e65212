"""Model tables (delays, energies, thresholds, shifters, aging, kernels) and JSON overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .aging import AgingParams, calibrate
from .circuit import DEFAULT_GATE_DELAYS, GateKind
from .volt import DEFAULT_SHIFTER_DELAYS, Device, EnergyModel, VoltageModel

DEFAULT_KERNELS = {
    "sharpen": {"kernel": [[0, -1, 0], [-1, 5, -1], [0, -1, 0]], "divisor": 1},
    "smooth": {"kernel": [[1, 1, 1], [1, 1, 1], [1, 1, 1]], "divisor": 9},
}

KNOWN_SECTIONS = {"delay_table", "energy_table", "vth_anchors", "voltage", "shifter_table", "aging", "kernels"}


@dataclass(frozen=True, eq=False)
class ModelTables:
    voltage: VoltageModel = field(default_factory=VoltageModel)
    energy: EnergyModel = field(default_factory=EnergyModel)
    gate_delays: dict[GateKind, float] = field(default_factory=lambda: dict(DEFAULT_GATE_DELAYS))
    shifter_delays: dict[float, float] = field(default_factory=lambda: dict(DEFAULT_SHIFTER_DELAYS))
    aging: AgingParams | None = None
    kernels: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_KERNELS)))
    source: str = "default"

    def __post_init__(self):
        aging = self.aging or AgingParams()
        if set(aging.a_coef) != {Device.NMOS, Device.PMOS}:
            aging = calibrate(aging, self.voltage)
        object.__setattr__(self, "aging", aging)

    def as_dict(self) -> dict:
        v = self.voltage
        return {
            "source": self.source,
            "voltage": {"v_nominal": v.v_nominal, "approx_levels": list(v.approx_levels),
                        "vth_anchors": [list(a) for a in v.vth_anchors], "alpha": v.alpha,
                        "margin_floor": v.margin_floor},
            "delay_table": {k.value: d for k, d in sorted(self.gate_delays.items())},
            "energy_table": {"cap_per_kind": {k.value: c for k, c in sorted(self.energy.cap_per_kind.items())},
                             "shifter_energy_per_event": self.energy.shifter_energy_per_event},
            "shifter_table": {f"{lv:g}": d for lv, d in sorted(self.shifter_delays.items(), reverse=True)},
            "aging": self.aging.as_dict(),
            "kernels": self.kernels,
        }

    @cached_property
    def key(self) -> str:
        payload = dict(self.as_dict())
        payload.pop("source")
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def __eq__(self, other):
        return isinstance(other, ModelTables) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


DEFAULT_MODELS = ModelTables()


def load_models(path: str | Path | None) -> ModelTables:
    """Default tables with the sections of a JSON override file applied on top."""
    if path is None:
        return DEFAULT_MODELS
    data = json.loads(Path(path).read_text())
    unknown = set(data) - KNOWN_SECTIONS
    if unknown:
        raise ValueError(f"unknown override sections: {sorted(unknown)}")
    return models_from_dict(data, source=str(path))


def models_from_dict(data: dict, source: str = "override") -> ModelTables:
    vkw = dict(data.get("voltage", {}))
    if "vth_anchors" in data:
        vkw["vth_anchors"] = data["vth_anchors"]
    if "approx_levels" in vkw:
        vkw["approx_levels"] = tuple(vkw["approx_levels"])
    if "vth_anchors" in vkw:
        vkw["vth_anchors"] = tuple(tuple(a) for a in vkw["vth_anchors"])
    voltage = VoltageModel(**vkw)

    delays = dict(DEFAULT_GATE_DELAYS)
    delays.update({GateKind(k): float(v) for k, v in data.get("delay_table", {}).items()})
    if any(d <= 0 for d in delays.values()):
        raise ValueError("gate delays must be positive")

    energy_kw = dict(data.get("energy_table", {}))
    if "cap_per_kind" in energy_kw:
        caps = dict(EnergyModel().cap_per_kind)
        caps.update({GateKind(k): float(v) for k, v in energy_kw["cap_per_kind"].items()})
        energy_kw["cap_per_kind"] = caps
    energy = EnergyModel(**energy_kw)

    shifters = dict(DEFAULT_SHIFTER_DELAYS)
    shifters.update({float(k): float(v) for k, v in data.get("shifter_table", {}).items()})

    aging_kw = dict(data.get("aging", {}))
    aging = AgingParams(**aging_kw)

    kernels = json.loads(json.dumps(DEFAULT_KERNELS))
    kernels.update(data.get("kernels", {}))
    return ModelTables(voltage, energy, delays, shifters, aging, kernels, source)

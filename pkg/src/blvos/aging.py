"""BTI threshold-voltage drift.

The drift follows the usual power law

    dVth = A * exp(-kappa / theta) * t**exp_t * E_ox**exp_field * f**exp_duty,
    E_ox = (V_DD - Vth(V_DD)) / T_INV

with one prefactor ``A`` per device type, fitted so that ten years of stress at
the nominal supply reproduce the published NMOS/PMOS shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .volt import Device, VoltageModel, vth_at

SECONDS_PER_YEAR = 365.25 * 24 * 3600
TEN_YEARS = 10 * SECONDS_PER_YEAR

# Ten-year shifts at the nominal supply (volts).
CALIBRATION_ANCHORS = {Device.NMOS: 0.151, Device.PMOS: 0.190}


@dataclass(frozen=True)
class AgingParams:
    a_coef: dict[Device, float] = field(default_factory=dict)
    kappa: float = 1500.0
    theta: float = 300.0
    t_stress: float = TEN_YEARS
    duty_f: float = 0.5
    exp_t: float = 1 / 6
    # Steep enough that the drift vanishes near 0.4 V.
    exp_field: float = 4.5
    exp_duty: float = 0.25
    t_inv: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "a_coef", {Device(k): float(v) for k, v in self.a_coef.items()})
        if self.t_stress < 0:
            raise ValueError("stress time must be non-negative")
        if self.theta <= 0:
            raise ValueError("temperature must be positive")
        if not 0 < self.duty_f <= 1:
            raise ValueError("duty factor must lie in (0, 1]")

    def as_dict(self) -> dict:
        return {
            "a_coef": {d.value: v for d, v in sorted(self.a_coef.items())},
            "kappa": self.kappa, "theta": self.theta, "t_stress": self.t_stress,
            "duty_f": self.duty_f, "exp_t": self.exp_t, "exp_field": self.exp_field,
            "exp_duty": self.exp_duty, "t_inv": self.t_inv,
        }


def _shape(p: AgingParams, vmodel: VoltageModel, v: float, device: Device, t: float) -> float:
    e_ox = (v - vth_at(vmodel, v, device)) / p.t_inv
    return (math.exp(-p.kappa / p.theta) * t ** p.exp_t * e_ox ** p.exp_field
            * p.duty_f ** p.exp_duty)


def calibrate(p: AgingParams, vmodel: VoltageModel, anchors=None) -> AgingParams:
    """Fit the per-device prefactors to the ten-year nominal-supply anchors."""
    anchors = anchors or CALIBRATION_ANCHORS
    coef = {Device(d): target / _shape(p, vmodel, vmodel.v_nominal, Device(d), TEN_YEARS)
            for d, target in anchors.items()}
    return replace(p, a_coef=coef)


def delta_vth_bti(p: AgingParams, vmodel: VoltageModel, v: float, device: Device | str,
                  t: float | None = None) -> float:
    device = Device(device)
    t = p.t_stress if t is None else t
    if t < 0:
        raise ValueError("stress time must be non-negative")
    if device not in p.a_coef:
        p = calibrate(p, vmodel)
    return p.a_coef[device] * _shape(p, vmodel, v, device, t)


def mean_delta_vth(p: AgingParams, vmodel: VoltageModel, v: float, t: float | None = None) -> float:
    return 0.5 * (delta_vth_bti(p, vmodel, v, Device.NMOS, t) + delta_vth_bti(p, vmodel, v, Device.PMOS, t))

"""Aging (BTI) and process-variation studies on top of the timing simulator."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .aging import SECONDS_PER_YEAR, delta_vth_bti, mean_delta_vth
from .circuit import Region
from .metrics import ErrorReport, SamplePlan, report_from_samples
from .timesim import Config, critical_path, run_trace, timed_netlist
from .volt import Device, delay_scale

PV_FLOOR = 0.05


def _region_supplies(config: Config) -> dict[Region, float]:
    vnom = config.models.voltage.v_nominal
    return {Region.APPROX: config.supply, Region.ACCURATE: vnom}


def _aged_delta(config: Config, years: float) -> tuple[tuple[Region, float], ...]:
    p = config.models.aging
    t = years * SECONDS_PER_YEAR
    return tuple((r, mean_delta_vth(p, config.models.voltage, v, t))
                 for r, v in sorted(_region_supplies(config).items()))


@dataclass(frozen=True)
class AgingReport:
    years: float
    region_supply: dict[str, float]
    delta_vth: dict[str, dict[str, float]]
    region_delay_factor: dict[str, float]
    fresh_critical_path: float
    aged_critical_path: float
    t_clk: float

    @property
    def increment(self) -> float:
        return self.aged_critical_path / self.fresh_critical_path - 1.0

    def as_dict(self) -> dict:
        return {
            "years": self.years,
            "region_supply": self.region_supply,
            "delta_vth": self.delta_vth,
            "region_delay_factor": self.region_delay_factor,
            "fresh_critical_path": self.fresh_critical_path,
            "aged_critical_path": self.aged_critical_path,
            "t_clk": self.t_clk,
            "delay_increment": self.increment,
        }


def aged_delay_increment(config: Config, years: float) -> AgingReport:
    """Critical-path growth after ``years`` of BTI stress at each region's own supply."""
    if years < 0:
        raise ValueError("years must be non-negative")
    vmodel = config.models.voltage
    p = config.models.aging
    t = years * SECONDS_PER_YEAR
    supplies = _region_supplies(config)
    aged_delta = _aged_delta(config, years)
    delta = dict(aged_delta)
    fresh = timed_netlist(config)
    aged = timed_netlist(config, aged_delta)
    factors = {r.value: delay_scale(vmodel, v, delta[r]) / delay_scale(vmodel, v) for r, v in supplies.items()}
    shifts = {r.value: {d.value: delta_vth_bti(p, vmodel, v, d, t) for d in Device}
              for r, v in supplies.items()}
    return AgingReport(
        years=years,
        region_supply={r.value: v for r, v in supplies.items()},
        delta_vth=shifts,
        region_delay_factor=factors,
        fresh_critical_path=critical_path(fresh.net, fresh.gate_delay),
        aged_critical_path=critical_path(aged.net, aged.gate_delay),
        t_clk=fresh.t_clk,
    )


@dataclass(frozen=True)
class AgedCharacterization:
    fresh: ErrorReport
    aged: ErrorReport
    aging: AgingReport

    @property
    def mred_delta(self) -> float:
        return self.aged.mred - self.fresh.mred

    def as_dict(self) -> dict:
        return {"fresh": self.fresh.as_dict(), "aged": self.aged.as_dict(),
                "mred_delta": self.mred_delta, "aging": self.aging.as_dict()}


def aged_characterize(config: Config, years: float, plan: SamplePlan) -> AgedCharacterization:
    """Error metrics before and after aging; the clock stays at its design-time period."""
    aging = aged_delay_increment(config, years)
    a, b = plan.operands()
    exact = a * b
    fresh = run_trace(timed_netlist(config), a, b, plan.mode)
    aged = run_trace(timed_netlist(config, _aged_delta(config, years)), a, b, plan.mode)
    n = config.spec.n
    return AgedCharacterization(report_from_samples(exact, fresh.sampled, n, plan.seed),
                                report_from_samples(exact, aged.sampled, n, plan.seed), aging)


@dataclass(frozen=True)
class PVPlan:
    sigma_rel: float = 0.0333
    trials: int = 5000
    seed: int = 1

    def __post_init__(self):
        if self.sigma_rel < 0:
            raise ValueError("sigma must be non-negative")
        if self.trials <= 0:
            raise ValueError("at least one trial is required")


PV_METRICS = ("med", "mred", "nmed")


@dataclass(frozen=True)
class PVReport:
    nominal: ErrorReport
    trials: tuple[ErrorReport, ...]
    sigma_rel: float
    seed: int

    def stats(self, metric: str) -> dict:
        values = np.array([getattr(r, metric) for r in self.trials])
        # centre on the first trial so identical trials give exactly zero spread
        shifted = values - values[0]
        mean = float(values[0] + shifted.mean())
        std = float(shifted.std())
        return {
            "nominal": getattr(self.nominal, metric),
            "mean": mean,
            "std": std,
            "mean_over_std": mean / std if std > 0 else None,
        }

    def as_dict(self) -> dict:
        return {
            "sigma_rel": self.sigma_rel,
            "trials": len(self.trials),
            "seed": self.seed,
            "model": "per-gate relative delay dispersion, factor max(0.05, 1 + N(0, sigma))",
            "metrics": {m: self.stats(m) for m in PV_METRICS},
        }

    def trial_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["trial", *PV_METRICS, "er"])
        for i, r in enumerate(self.trials):
            writer.writerow([i, *(repr(getattr(r, m)) for m in PV_METRICS), repr(r.er)])
        return buf.getvalue()


def pv_factors(pv: PVPlan, trial: int, size: int) -> np.ndarray:
    rng = np.random.default_rng([pv.seed, trial])
    return np.maximum(PV_FLOOR, 1.0 + rng.normal(0.0, pv.sigma_rel, size))


def pv_trials(config: Config, pv: PVPlan, plan: SamplePlan) -> PVReport:
    """Monte Carlo over per-gate delay variation with common operand samples."""
    tn = timed_netlist(config)
    a, b = plan.operands()
    exact = a * b
    n = config.spec.n
    nominal = report_from_samples(exact, run_trace(tn, a, b, plan.mode).sampled, n, plan.seed)
    reports = []
    for trial in range(pv.trials):
        varied = tn.with_delays(tn.gate_delay * pv_factors(pv, trial, len(tn.gate_delay)))
        res = run_trace(varied, a, b, plan.mode)
        reports.append(report_from_samples(exact, res.sampled, n, plan.seed))
    return PVReport(nominal, tuple(reports), pv.sigma_rel, pv.seed)


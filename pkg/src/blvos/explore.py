"""Design-space sweep over (structure, k, voltage), Pareto extraction and constrained selection."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

from .circuit import GateKind, MultiplierSpec, SpecError, Structure
from .metrics import ErrorReport, SamplePlan, report_from_samples
from .models import DEFAULT_MODELS, ModelTables
from .timesim import Config, run_trace, timed_netlist

DEFAULT_K_SETS = {8: (2, 4, 6), 16: (4, 8, 12)}
DEFAULT_STRUCTURES = (Structure.BLVOS1, Structure.BLVOS2, Structure.BLVOS3, Structure.BLVOS4)


@dataclass(frozen=True)
class Candidate:
    spec: MultiplierSpec
    v_approx: float | None

    def config(self, models: ModelTables = DEFAULT_MODELS) -> Config:
        if self.spec.structure is Structure.BLVOS0:
            return Config(self.spec, None, True, models)
        return Config(self.spec, self.v_approx, False, models)


def enumerate_space(n: int, k_set, structures, voltages, truncation: int = 0,
                    gated_blocks=frozenset()) -> list[Candidate]:
    """Cartesian product of the axes; BLVOS0 appears once per k, at the nominal rail."""
    k_set = list(k_set)
    structures = [Structure.parse(s) for s in structures]
    voltages = [float(v) for v in voltages]
    if not k_set or not structures or (not voltages and any(s is not Structure.BLVOS0 for s in structures)):
        raise ValueError("every sweep axis needs at least one value")
    for k in k_set:
        if not 0 < k < n:
            raise SpecError(f"0 < k < n violated (n={n}, k={k})")
    out = []
    for k in k_set:
        for s in structures:
            spec = MultiplierSpec(n, k, s, truncation, frozenset(gated_blocks))
            if s is Structure.BLVOS0:
                out.append(Candidate(spec, None))
            else:
                out.extend(Candidate(spec, v) for v in voltages)
    return out


@dataclass(frozen=True)
class DesignPoint:
    spec: MultiplierSpec
    v_approx: float | None
    metrics: ErrorReport
    energy_rel: float
    shifters: int
    config_hash: str = ""

    @property
    def accurate(self) -> bool:
        return self.v_approx is None

    def row(self) -> dict:
        s = self.spec
        return {
            "n": s.n, "k": s.k, "structure": s.structure.name,
            "v_approx": "nominal" if self.v_approx is None else self.v_approx,
            "truncation": s.truncation, "gated_blocks": "+".join(sorted(b.value for b in s.gated_blocks)),
            "shifters": self.shifters, "energy_rel": self.energy_rel,
            **{k: v for k, v in self.metrics.as_dict().items() if k != "seed"},
            "config_hash": self.config_hash,
        }


CSV_COLUMNS = ("n", "k", "structure", "v_approx", "truncation", "gated_blocks", "shifters", "energy_rel",
               "er", "med", "mred", "nmed", "mean_err", "var_err", "samples", "excluded_zero_exact",
               "config_hash")


class Evaluator:
    """Evaluates candidates on one shared operand trace, caching the exact baselines."""

    def __init__(self, plan: SamplePlan, models: ModelTables = DEFAULT_MODELS):
        self.plan = plan
        self.models = models
        self.a, self.b = plan.operands()
        self.exact = self.a * self.b
        self._baseline: dict[tuple[int, int], float] = {}

    def baseline_energy(self, n: int, k: int) -> float:
        key = (n, k)
        if key not in self._baseline:
            cfg = Config(MultiplierSpec(n, k), None, True, self.models)
            res = run_trace(timed_netlist(cfg), self.a, self.b, self.plan.mode)
            self._baseline[key] = math.fsum(res.energy.tolist())
        return self._baseline[key]

    def __call__(self, cand: Candidate) -> DesignPoint:
        if cand.spec.n != self.plan.n:
            raise ValueError(f"candidate has n={cand.spec.n}, plan has n={self.plan.n}")
        cfg = cand.config(self.models)
        tn = timed_netlist(cfg)
        res = run_trace(tn, self.a, self.b, self.plan.mode)
        report = report_from_samples(self.exact, res.sampled, cand.spec.n, self.plan.seed)
        energy = math.fsum(res.energy.tolist())
        base = self.baseline_energy(cand.spec.n, cand.spec.k)
        shifters = sum(1 for g in tn.net.gates if g.kind is GateKind.LEVEL_SHIFTER)
        v = None if cfg.accurate_mode else cand.v_approx
        return DesignPoint(cand.spec, v, report, energy / base, shifters, cfg.hash)


def evaluate_point(cand: Candidate, plan: SamplePlan, models: ModelTables = DEFAULT_MODELS) -> DesignPoint:
    return Evaluator(plan, models)(cand)


def _order(p: DesignPoint) -> tuple:
    return (p.energy_rel, p.metrics.mred, int(p.spec.structure))


def _dominates(p: DesignPoint, q: DesignPoint) -> bool:
    pe, pm = p.energy_rel, p.metrics.mred
    qe, qm = q.energy_rel, q.metrics.mred
    return pe <= qe and pm <= qm and (pe < qe or pm < qm)


def pareto_front(points) -> list[DesignPoint]:
    """Points not dominated under (energy_rel, MRED), both minimized; ties are kept."""
    points = list(points)
    if not points:
        raise ValueError("pareto_front needs at least one point")
    return [p for p in sorted(points, key=_order) if not any(_dominates(q, p) for q in points)]


class Objective(str, enum.Enum):
    MIN_ENERGY = "MIN_ENERGY"
    MIN_MRED = "MIN_MRED"


@dataclass(frozen=True)
class Constraint:
    max_mred: float | None = None
    max_nmed: float | None = None
    max_med: float | None = None
    energy_budget_rel: float | None = None
    objective: Objective = Objective.MIN_ENERGY

    def __post_init__(self):
        object.__setattr__(self, "objective", Objective(self.objective))

    def admits(self, p: DesignPoint) -> bool:
        m = p.metrics
        checks = ((self.max_mred, m.mred), (self.max_nmed, m.nmed), (self.max_med, m.med),
                  (self.energy_budget_rel, p.energy_rel))
        return all(bound is None or value <= bound for bound, value in checks)

    def as_dict(self) -> dict:
        return {"max_mred": self.max_mred, "max_nmed": self.max_nmed, "max_med": self.max_med,
                "energy_budget_rel": self.energy_budget_rel, "objective": self.objective.value}


def select(points, c: Constraint) -> DesignPoint | None:
    """Objective optimum among the points meeting every bound, or None when none does."""
    feasible = [p for p in points if c.admits(p)]
    if not feasible:
        return None
    if c.objective is Objective.MIN_ENERGY:
        return min(feasible, key=_order)
    return min(feasible, key=lambda p: (p.metrics.mred, p.energy_rel, int(p.spec.structure)))


@dataclass
class SweepResult:
    points: list[DesignPoint]
    baselines: list[DesignPoint]
    plan: SamplePlan
    constraint: Constraint | None = None
    selection: DesignPoint | None = field(default=None)

    @property
    def front(self) -> list[DesignPoint]:
        return pareto_front(self.points)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for p in self.points:
            writer.writerow(p.row())
        return buf.getvalue()

    def as_dict(self) -> dict:
        out = {
            "plan": self.plan.describe(),
            "points": len(self.points),
            "baselines": [p.row() for p in self.baselines],
            "pareto_front": [p.row() for p in self.front],
        }
        if self.constraint is not None:
            out["constraint"] = self.constraint.as_dict()
            out["selection"] = self.selection.row() if self.selection is not None else "infeasible"
        return out


def sweep(candidates, plan: SamplePlan, constraint: Constraint | None = None,
          models: ModelTables = DEFAULT_MODELS) -> SweepResult:
    """Evaluate every candidate on one shared trace; selection also considers the exact baselines."""
    evaluator = Evaluator(plan, models)
    points = [evaluator(c) for c in candidates]
    seen = []
    for c in candidates:
        key = (c.spec.n, c.spec.k)
        if key not in seen:
            seen.append(key)
    baselines = [evaluator(Candidate(MultiplierSpec(n, k), None)) for n, k in seen]
    result = SweepResult(points, baselines, plan, constraint)
    if constraint is not None:
        pool = points + [b for b in baselines if all(b.spec != p.spec for p in points)]
        result.selection = select(pool, constraint)
    return result


def energy_matrix(points) -> dict[tuple[int, float], dict[Structure, float]]:
    """energy_rel arranged by (k, voltage) then structure, for ordering checks."""
    grid: dict[tuple[int, float], dict[Structure, float]] = {}
    for p in points:
        if p.v_approx is not None:
            grid.setdefault((p.spec.k, p.v_approx), {})[p.spec.structure] = p.energy_rel
    return grid


__all__ = ["Candidate", "Constraint", "DesignPoint", "Evaluator", "Objective", "SweepResult",
           "enumerate_space", "evaluate_point", "pareto_front", "select", "sweep", "energy_matrix",
           "DEFAULT_K_SETS", "DEFAULT_STRUCTURES", "CSV_COLUMNS"]

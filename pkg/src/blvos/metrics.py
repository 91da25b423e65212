"""Error metrics of an approximate multiplier over a sample plan."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .timesim import Config, Mode, run_trace, timed_netlist

DEFAULT_SEED = 1


def default_count(n: int) -> int:
    return 10_000 if n <= 8 else 1_000_000


@dataclass(frozen=True)
class SamplePlan:
    n: int
    count: int = 10_000
    seed: int = DEFAULT_SEED
    mode: Mode = Mode.PAIRED

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.count <= 0:
            raise ValueError("sample count must be positive")

    @property
    def exhaustive(self) -> bool:
        return (1 << (2 * self.n)) <= self.count

    def operands(self) -> tuple[np.ndarray, np.ndarray]:
        """Operand pairs in evaluation order; every pair once (row-major) when that fits."""
        side = 1 << self.n
        if self.exhaustive:
            grid = np.arange(side, dtype=np.int64)
            return np.repeat(grid, side), np.tile(grid, side)
        rng = np.random.default_rng(self.seed)
        a = rng.integers(0, side, self.count, dtype=np.int64)
        b = rng.integers(0, side, self.count, dtype=np.int64)
        return a, b

    def describe(self) -> dict:
        return {"count": self.count, "seed": self.seed, "mode": self.mode.value,
                "exhaustive": self.exhaustive, "distribution": f"uniform over [0, 2^{self.n})^2"}


@dataclass(frozen=True)
class ErrorReport:
    er: float
    med: float
    mred: float
    nmed: float
    mean_err: float
    var_err: float
    samples: int
    seed: int
    excluded_zero_exact: int

    def as_dict(self) -> dict:
        return asdict(self)

    def csv_row(self, extra: dict | None = None) -> str:
        row = {**(extra or {}), **self.as_dict()}
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
        writer.writeheader()
        writer.writerow(row)
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class Trace:
    a: np.ndarray
    b: np.ndarray
    exact: np.ndarray
    approx: np.ndarray
    energy: np.ndarray
    violating: np.ndarray

    def log_csv(self) -> str:
        buf = io.StringIO()
        buf.write("a,b,exact,approx\n")
        for row in zip(self.a.tolist(), self.b.tolist(), self.exact.tolist(), self.approx.tolist()):
            buf.write("%d,%d,%d,%d\n" % row)
        return buf.getvalue()


def error_distance(exact: int, approx: int) -> int:
    return abs(int(exact) - int(approx))


def run_plan(config: Config, plan: SamplePlan, tn=None) -> Trace:
    if plan.n != config.spec.n:
        raise ValueError(f"plan is for n={plan.n}, config has n={config.spec.n}")
    tn = tn or timed_netlist(config)
    a, b = plan.operands()
    res = run_trace(tn, a, b, plan.mode)
    return Trace(a, b, a * b, res.sampled, res.energy, res.violating)


def report_from_samples(exact, approx, n: int, seed: int) -> ErrorReport:
    exact = np.asarray(exact, np.int64)
    approx = np.asarray(approx, np.int64)
    count = int(exact.size)
    if count == 0:
        raise ValueError("no samples")
    signed = approx - exact
    ed = np.abs(signed)
    nonzero = exact > 0
    med = math.fsum(ed.tolist()) / count
    ratios = ed[nonzero].astype(np.float64) / exact[nonzero].astype(np.float64)
    mred = math.fsum(ratios.tolist()) / max(1, ratios.size)
    mean_err = math.fsum(signed.tolist()) / count
    var_err = math.fsum(((signed - mean_err) ** 2).tolist()) / count
    return ErrorReport(
        er=int(np.count_nonzero(ed)) / count,
        med=med,
        mred=mred,
        nmed=med / float((2 ** n - 1) ** 2),
        mean_err=mean_err,
        var_err=var_err,
        samples=count,
        seed=seed,
        excluded_zero_exact=int(count - np.count_nonzero(nonzero)),
    )


def characterize(config: Config, plan: SamplePlan, tn=None) -> ErrorReport:
    trace = run_plan(config, plan, tn)
    return report_from_samples(trace.exact, trace.approx, config.spec.n, plan.seed)


def sensitivity(errors, voltages) -> list[float]:
    """Change of an error metric per volt of further overscaling between adjacent levels.

    ``errors[i]`` is the metric at ``voltages[i]``; levels run from the highest
    approximate supply downwards.
    """
    errors = [float(e) for e in errors]
    voltages = [float(v) for v in voltages]
    if len(errors) != len(voltages):
        raise ValueError("one metric value per voltage level is required")
    if len(errors) < 2:
        raise ValueError("sensitivity needs at least two voltage levels")
    if any(b >= a for a, b in zip(voltages, voltages[1:])):
        raise ValueError("voltage levels must be strictly decreasing")
    return [(errors[i + 1] - errors[i]) / (voltages[i] - voltages[i + 1]) for i in range(len(errors) - 1)]

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blvos.circuit import BlockTag, MultiplierSpec, Structure
from blvos.metrics import (SamplePlan, characterize, default_count, error_distance, report_from_samples, run_plan,
                           sensitivity)
from blvos.timesim import Config, Mode

from conftest import brute_metrics


def _gated_ll(n, k):
    return Config(MultiplierSpec(n, k, gated_blocks=frozenset({BlockTag.LL})), None)


def test_error_distance_examples():
    assert error_distance(35055, 34912) == 143
    assert error_distance(7, 7) == 0
    assert error_distance(0, 9) == 9


def test_two_bit_gated_ll():
    rep = characterize(_gated_ll(2, 1), SamplePlan(2, 16))
    assert rep.er == pytest.approx(0.25, abs=1e-12)
    assert rep.med == pytest.approx(0.25, abs=1e-12)
    assert rep.nmed == pytest.approx(0.25 / 9, abs=1e-12)
    assert rep.mred == pytest.approx((1 + 1 / 3 + 1 / 3 + 1 / 9) / 9, abs=1e-12)
    assert rep.excluded_zero_exact == 7 and rep.samples == 16


@pytest.mark.parametrize("mode", list(Mode))
def test_four_bit_matches_brute_force(mode):
    cfg = _gated_ll(4, 2)
    plan = SamplePlan(4, 256, mode=mode)
    assert plan.exhaustive
    trace = run_plan(cfg, plan)
    rep = report_from_samples(trace.exact, trace.approx, 4, plan.seed)
    oracle = brute_metrics(list(zip(trace.exact.tolist(), trace.approx.tolist())), 4)
    for key, value in oracle.items():
        assert getattr(rep, key) == float(value), key


def test_exhaustive_order_is_row_major():
    a, b = SamplePlan(2, 100).operands()
    assert a.tolist()[:5] == [0, 0, 0, 0, 1] and b.tolist()[:5] == [0, 1, 2, 3, 0]


def test_accurate_is_error_free():
    rep = characterize(Config(MultiplierSpec(8, 4)), SamplePlan(8, 3000, seed=4))
    assert rep.er == rep.med == rep.mred == rep.nmed == 0.0


def test_seed_determinism():
    cfg = Config(MultiplierSpec(8, 4, Structure.BLVOS4), 0.45)
    r1 = characterize(cfg, SamplePlan(8, 5000, seed=9))
    r2 = characterize(cfg, SamplePlan(8, 5000, seed=9))
    r3 = characterize(cfg, SamplePlan(8, 5000, seed=10))
    assert r1 == r2 and r1 != r3


def test_worst_and_best_structure_at_low_voltage():
    plan = SamplePlan(8, 10000, seed=1)
    m1 = characterize(Config(MultiplierSpec(8, 4, Structure.BLVOS1), 0.4), plan).mred
    m4 = characterize(Config(MultiplierSpec(8, 4, Structure.BLVOS4), 0.4), plan).mred
    assert m4 > m1


def test_default_counts():
    assert default_count(8) == 10_000 and default_count(16) == 1_000_000


def test_plan_validation():
    with pytest.raises(ValueError):
        SamplePlan(8, 0)


def test_plan_n_mismatch():
    with pytest.raises(ValueError):
        run_plan(Config(MultiplierSpec(8, 4)), SamplePlan(4, 10))


def test_csv_row_projection():
    rep = report_from_samples([6, 0, 4], [6, 1, 3], 2, 1)
    header, row = rep.csv_row({"tag": "x"}).splitlines()
    assert header.startswith("tag,er,med,mred")
    assert row.split(",")[0] == "x"


def test_trace_log_csv():
    trace = run_plan(Config(MultiplierSpec(2, 1)), SamplePlan(2, 16))
    lines = trace.log_csv().splitlines()
    assert lines[0] == "a,b,exact,approx" and len(lines) == 17
    assert lines[-1] == "3,3,9,9"


def test_sensitivity_examples():
    assert sensitivity([0.002, 0.013], [0.65, 0.55])[0] == pytest.approx(0.11)
    assert sensitivity([0.0, 0.004], [0.75, 0.65])[0] == pytest.approx(0.04)
    assert sensitivity([0.3] * 5, [0.75, 0.65, 0.55, 0.45, 0.4]) == [0.0] * 4


@pytest.mark.parametrize("errs,volts", [([0.1], [0.7]), ([0.1, 0.2], [0.7]), ([0.1, 0.2], [0.6, 0.7])])
def test_sensitivity_rejects(errs, volts):
    with pytest.raises(ValueError):
        sensitivity(errs, volts)


@given(st.lists(st.tuples(st.integers(0, 65025), st.integers(0, 65535)), min_size=1, max_size=200))
def test_report_properties(pairs):
    exact = [e for e, _ in pairs]
    approx = [a for _, a in pairs]
    rep = report_from_samples(exact, approx, 8, 0)
    assert 0.0 <= rep.er <= 1.0 and rep.med >= 0 and rep.var_err >= 0
    assert rep.nmed == rep.med / 255 ** 2
    signed = np.array(approx) - np.array(exact)
    assert rep.mean_err ** 2 <= float(np.mean(signed.astype(float) ** 2)) * (1 + 1e-12) + 1e-9
    assert rep.excluded_zero_exact == sum(1 for e in exact if e == 0)

import json

import pytest

from blvos.aging import AgingParams
from blvos.circuit import GateKind, MultiplierSpec, Structure
from blvos.models import DEFAULT_MODELS, load_models, models_from_dict
from blvos.timesim import Config, timed_netlist
from blvos.volt import Device


def test_defaults_are_calibrated():
    assert set(DEFAULT_MODELS.aging.a_coef) == {Device.NMOS, Device.PMOS}
    assert DEFAULT_MODELS.kernels["sharpen"]["kernel"][1] == [-1, 5, -1]


def test_no_file_gives_defaults():
    assert load_models(None) is DEFAULT_MODELS


def test_override_file(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"delay_table": {"XOR2": 3.0}, "shifter_table": {"0.4": 6.0},
                                "vth_anchors": [[0.4, 0.21, -0.18], [0.8, 0.17, -0.19]],
                                "aging": {"exp_field": 4.0}}))
    m = load_models(path)
    assert m.gate_delays[GateKind.XOR2] == 3.0 and m.gate_delays[GateKind.AND2] == 1.0
    assert m.shifter_delays[0.4] == 6.0 and m.shifter_delays[0.75] == 0.5
    assert m.voltage.vth_anchors[0] == (0.4, 0.21, -0.18)
    assert m.aging.exp_field == 4.0
    assert m.source == str(path)
    assert m != DEFAULT_MODELS and m.key != DEFAULT_MODELS.key


def test_override_changes_timing():
    slow = models_from_dict({"delay_table": {"XOR2": 3.0}})
    base = timed_netlist(Config(MultiplierSpec(8, 4)))
    other = timed_netlist(Config(MultiplierSpec(8, 4), models=slow))
    assert other.t_clk > base.t_clk


def test_unknown_section_rejected(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"delays": {}}))
    with pytest.raises(ValueError, match="unknown"):
        load_models(path)


def test_bad_values_rejected():
    with pytest.raises(ValueError):
        models_from_dict({"delay_table": {"AND2": 0}})
    with pytest.raises(ValueError):
        models_from_dict({"energy_table": {"cap_per_kind": {"AND2": -1}}})


def test_key_ignores_source():
    a = models_from_dict({}, source="x")
    b = models_from_dict({}, source="y")
    assert a == b and hash(a) == hash(b) and a.key == DEFAULT_MODELS.key


def test_as_dict_is_json():
    d = DEFAULT_MODELS.as_dict()
    assert json.loads(json.dumps(d)) == d
    assert d["shifter_table"]["0.4"] == 4.0


def test_explicit_aging_coefficients_kept():
    p = AgingParams(a_coef={"NMOS": 1.0, "PMOS": 2.0})
    assert models_from_dict({"aging": {"a_coef": {"NMOS": 1.0, "PMOS": 2.0}}}).aging.a_coef == p.a_coef


def test_config_hash_tracks_models():
    spec = MultiplierSpec(8, 4, Structure.BLVOS2)
    assert Config(spec, 0.4).hash != Config(spec, 0.4, models=models_from_dict({"shifter_table": {"0.4": 8}})).hash

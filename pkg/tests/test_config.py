import json

import pytest

from ftopt.adversary import OppositeExtreme
from ftopt.config import (check_thresholds, load_document, load_scenario, mixed_functions,
                          random_init, scenario_from_dict)
from ftopt.errors import ConfigError
from ftopt.functions import Huber, verify_admissible
from ftopt.metrics import THRESHOLDS

BASE = {"n": 4, "f": 1, "protocol": "alg2", "max_iters": 10, "generate": {}}


def test_generators_are_seeded():
    assert mixed_functions(6, 3) == mixed_functions(6, 3)
    assert mixed_functions(6, 3) != mixed_functions(6, 4)
    assert random_init(5, 1) == random_init(5, 1)
    assert all(-5 <= x <= 5 for x in random_init(50, 2))


def test_generated_functions_admissible_and_centered():
    fns = mixed_functions(20, 7)
    kinds = {type(fn).__name__ for fn in fns}
    assert kinds == {"Huber", "SmoothAbs"}
    for fn in fns:
        assert -3 <= fn.center <= 3
        assert verify_admissible(fn, -100, 100, 2001).ok
        if isinstance(fn, Huber):
            assert fn.cap / fn.curvature >= 6  # quadratic zone spans the center range


def test_bundled_scenarios_load():
    from pathlib import Path
    root = Path(__file__).resolve().parent.parent / "scenarios"
    loaded = {p.stem: load_scenario(p)[0] for p in root.glob("*.toml")}
    assert loaded["byz_alg3"].adversary == OppositeExtreme(10.0)
    assert loaded["async_alg4"].delay_model.k == 2
    assert [e.iteration for e in loaded["crash_alg1"].crash_schedule.events] == [5, 50]


def test_toml_and_json_agree(tmp_path):
    (tmp_path / "a.json").write_text(json.dumps(BASE))
    (tmp_path / "a.toml").write_text(
        'n = 4\nf = 1\nprotocol = "alg2"\nmax_iters = 10\n[generate]\n')
    assert load_scenario(tmp_path / "a.json")[0] == load_scenario(tmp_path / "a.toml")[0]


def test_syntax_errors_carry_position(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("n = 4\nf = = 1\n")
    with pytest.raises(ConfigError, match="line 2"):
        load_document(p)
    p = tmp_path / "bad.json"
    p.write_text('{"n": 4,\n "f": }')
    with pytest.raises(ConfigError, match="line 2"):
        load_document(p)
    with pytest.raises(ConfigError):
        load_document(tmp_path / "missing.toml")


@pytest.mark.parametrize("patch,field", [
    ({"n": "4"}, "n"),
    ({"n": True}, "n"),
    ({"bogus": 1}, "<top>"),
    ({"seed": 1.5}, "seed"),
    ({"faulty": [1, "x"]}, "faulty"),
    ({"schedule": {"kind": "power", "scale": 1}}, "schedule.exponent"),
    ({"schedule": {"kind": "power", "exponent": 0.4}}, "schedule"),
    ({"schedule": {"kind": "cosine"}}, "schedule.kind"),
    ({"functions": [{"kind": "huber", "center": 0, "curvature": 1}]}, "functions[0].cap"),
    ({"init": [0, 1, "2", 3]}, "init"),
    ({"generate": {"init_range": [3, 1]}}, "generate.init_range"),
    ({"faulty": [3], "crashes": [{"agent": 3}]}, "crashes[0].iteration"),
    ({"faulty": [3], "crashes": [{"agent": 3, "iteration": 2, "phase": "later"}]}, "crashes[0]"),
    ({"record_messages": 1}, "record_messages"),
    ({"delay": {"kind": "fixed", "speed": 2}}, "delay"),
    ({"adversary": {"kind": "constant"}}, "adversary"),
])
def test_field_errors(patch, field):
    doc = {**BASE, **patch}
    with pytest.raises(ConfigError) as err:
        scenario_from_dict(doc)
    assert err.value.field == field


def test_missing_functions_and_init():
    doc = {k: v for k, v in BASE.items() if k != "generate"}
    with pytest.raises(ConfigError) as err:
        scenario_from_dict(doc)
    assert err.value.field == "functions"


def test_crash_generator(tmp_path):
    doc = {**BASE, "faulty": [3], "crash_generator": {"kind": "random", "prob": 1.0, "horizon": 5}}
    cfg = scenario_from_dict(doc)
    assert [(e.agent, e.iteration) for e in cfg.crash_schedule.events] == [(3, 1)]
    with pytest.raises(ConfigError):
        scenario_from_dict({**doc, "crashes": [{"agent": 3, "iteration": 2}]})


def test_threshold_overrides():
    assert check_thresholds({}, THRESHOLDS) == THRESHOLDS
    out = check_thresholds({"checks": {"final_gap": 0.5}}, THRESHOLDS)
    assert out["final_gap"] == 0.5
    for bad in ({"nope": 1}, {"final_gap": -1}, {"final_gap": "x"}):
        with pytest.raises(ConfigError):
            check_thresholds({"checks": bad}, THRESHOLDS)

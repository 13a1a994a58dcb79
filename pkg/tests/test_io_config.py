import json
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from hc3lab.config import ConfigError, default_config_text, load_config
from hc3lab.io import dumps, fmt_float, to_jsonable, write_csv, write_json

TESTS = Path(__file__).parent


def test_defaults_roundtrip(tmp_path):
    cfg = load_config()
    p = tmp_path / "c.ini"
    p.write_text(default_config_text())
    assert load_config(p).values == cfg.values
    assert cfg["material.m"] == 2.0 and cfg["alpha.policy"] == "at_alpha0"


def test_overrides_and_types(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[material]\nm = 10\n[scan]\nkappa_values = 5, 6\n")
    cfg = load_config(p, ["material.a=0.5", "grid.extrapolate=no"])
    assert cfg["material.m"] == 10.0 and cfg["material.a"] == 0.5
    assert cfg["scan.kappa_values"] == (5.0, 6.0)
    assert cfg["grid.extrapolate"] is False


@pytest.mark.parametrize("text", ["[material]\nq = 1\n", "[nosuch]\nx = 1\n", "[material]\nm = abc\n",
                                  "[alpha]\npolicy = sometimes\n"])
def test_invalid_config(tmp_path, text):
    p = tmp_path / "c.ini"
    p.write_text(text)
    with pytest.raises(ConfigError):
        load_config(p)


def test_invalid_override():
    with pytest.raises(ConfigError):
        load_config(None, ["materialm=1"])
    with pytest.raises(ConfigError):
        load_config(None, ["material.x=1"])


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_json_encoding(tmp_path):
    obj = {"x": np.float64(0.1), "n": np.int64(3), "b": np.bool_(True), "arr": np.arange(3.0),
           "nan": float("nan"), "none": None}
    text = dumps(obj)
    back = json.loads(text)
    assert back["x"] == 0.1 and back["n"] == 3 and back["b"] is True and back["nan"] is None
    assert back["arr"] == [0.0, 1.0, 2.0]
    assert float(fmt_float(1 / 3)) == 1 / 3
    assert to_jsonable((1, 2)) == [1, 2]
    p = write_json(tmp_path / "sub" / "o.json", obj)
    assert p.read_text() == text


def test_csv_format(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["a", "b", "c"], [[0.5, True, None], [np.int64(2), "x", 1e-300]])
    assert p.read_text() == "a,b,c\n0.5,true,\n2,x,1e-300\n"


def test_packaged_golden_matches_tests():
    packaged = resources.files("hc3lab").joinpath("data/golden.json").read_text(encoding="utf-8")
    assert json.loads(packaged) == json.loads((TESTS / "golden.json").read_text(encoding="utf-8"))

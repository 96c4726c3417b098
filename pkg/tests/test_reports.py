import json

import numpy as np

from alphamod.reports import VERSION, config_hash, dumps, make_report, to_jsonable, write_report


def test_to_jsonable():
    obj = {"a": np.int64(3), "b": np.array([1.5, np.nan]), "c": (np.bool_(True), np.inf),
           "d": complex(1, -2), 4: -np.inf}
    assert to_jsonable(obj) == {"a": 3, "b": [1.5, "nan"], "c": [True, "inf"], "d": [1.0, -2.0],
                                "4": "-inf"}


def test_dumps_sorted_and_stable():
    a = dumps({"b": 1, "a": [1, 2]})
    assert a == dumps({"a": [1, 2], "b": 1}) and a.endswith("\n")
    assert list(json.loads(a)) == ["a", "b"]


def test_config_hash():
    h = config_hash({"x": 1, "y": [1.0, 2.0]})
    assert len(h) == 16 and h == config_hash({"y": [1.0, 2.0], "x": 1})
    assert h != config_hash({"x": 2, "y": [1.0, 2.0]})


def test_make_and_write(tmp_path):
    rep = make_report("demo", {"k": np.float64(0.5)}, {"value": np.arange(3)}, seed=7)
    assert rep["version"] == VERSION and rep["seed"] == 7 and rep["value"] == [0, 1, 2]
    p = write_report(tmp_path / "sub" / "r.json", rep)
    assert json.loads(p.read_text()) == rep

import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from umbilic_lab.emit import Emitter, dumps, sha256_bytes


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_round_trip(x):
    assert json.loads(dumps({"x": x}))["x"] == x


def test_non_finite_become_null_and_integral_floats_stay_floats():
    out = json.loads(dumps({"a": math.nan, "b": [1.0, math.inf, 2], "c": np.float64(3.0), "d": np.int64(4)}))
    assert out == {"a": None, "b": [1.0, None, 2], "c": 3.0, "d": 4}
    assert '"c": 3.0' in dumps({"c": 3.0})
    assert "0.10000000000000001" in dumps([0.1])


def test_key_order_and_bytes_are_deterministic():
    obj = {"z": 1, "a": [{"k": np.arange(3.0)}, "s", None, True, np.bool_(False)]}
    assert dumps(obj) == dumps(obj)
    text = dumps(obj)
    assert text.index('"z"') < text.index('"a"')
    assert json.loads(text)["a"][4] is False


def test_emitter_records_files(tmp_path):
    em = Emitter(tmp_path / "out")
    em.write_text("sub/a.csv", "t\n0\n")
    em.write_json("r.json", {"v": 1})
    assert [f["path"] for f in em.files] == ["sub/a.csv", "r.json"]
    assert em.files[0]["sha256"] == sha256_bytes(b"t\n0\n")
    assert (tmp_path / "out" / "sub" / "a.csv").read_text() == "t\n0\n"

import json
import os

import pytest

from umbilic_lab.config import BUILTIN_SCENARIOS, SCHEMA, from_dict, load_scenario, parse_text, schema_errors
from umbilic_lab.errors import ConfigInvalid

import jsonschema


def test_schema_is_valid_draft_2020_12():
    jsonschema.Draft202012Validator.check_schema(SCHEMA)


@pytest.mark.parametrize("name", sorted(BUILTIN_SCENARIOS))
def test_builtin_scenarios_validate(name):
    cfg = load_scenario(name)
    assert cfg.name == name
    assert cfg.entries


def test_malformed_json_reports_line_and_column():
    text = '{\n  "entries": ["sphere2"]\n  "suites": []\n}\n'
    with pytest.raises(ConfigInvalid) as info:
        parse_text(text, "bad.json")
    assert (info.value.line, info.value.column) == (3, 3)
    assert str(info.value).startswith("line 3, column 3: bad.json: malformed JSON")


def test_malformed_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text('{"entries": [sphere2]}')
    with pytest.raises(ConfigInvalid, match=r"line 1, column 14"):
        load_scenario(str(p))


@pytest.mark.parametrize("data,where", [
    ({}, "'entries' is a required property"),
    ({"entries": ["sphere2"], "bogus": 1}, "bogus"),
    ({"entries": ["sphere2"], "curves": {"step": -1}}, "$.curves.step"),
    ({"entries": ["sphere2"], "curves": {"seeds": 0}}, "$.curves.seeds"),
    ({"entries": ["sphere2"], "suites": ["FourthTH"]}, "$.suites[0]"),
    ({"entries": ["sphere2"], "seed": -3}, "$.seed"),
    ({"entries": ["sphere2"], "sections": {"offsets": [1.0]}}, "$.sections.offsets[0]"),
    ({"entries": ["sphere2"], "output": {"trajectories": "some"}}, "$.output.trajectories"),
])
def test_schema_errors_name_the_path(data, where):
    assert any(where in e for e in schema_errors(data))
    with pytest.raises(ConfigInvalid, match="schema violation"):
        from_dict(data)


@pytest.mark.parametrize("data,msg", [
    ({"entries": ["nope"]}, "unknown catalog entry"),
    ({"entries": ["sphere2", "sphere2"]}, "more than once"),
    ({"entries": ["sphere2"], "thresholds": {"planar": 1e-3, "reject": 1e-4}}, "planar < reject"),
    ({"entries": ["sphere2"], "curves": {"c_values": [0.0]}}, "non-zero"),
    ({"entries": ["sphere2"], "curves": {"span": [0.5, 1.0]}}, "must contain 0"),
    ({"entries": ["sphere2"], "curves": {"span": [-0.1, 0.1], "step": 0.5}}, "does not fit"),
    ({"entries": ["sphere2"], "convergence": [{"entry": "sphere2", "kind": "pseudo-geodesic",
                                                "steps": [0.4, 0.2, 0.1]}]}, "needs a non-zero 'c'"),
    ({"entries": ["sphere2"], "convergence": [{"entry": "sphere2", "kind": "geodesic",
                                                "steps": [0.4, 0.2, 0.15]}]}, "geometric ladder"),
    ({"entries": ["sphere2"], "convergence": [{"entry": "ghost", "kind": "geodesic",
                                                "steps": [0.4, 0.2, 0.1]}]}, "unknown entry"),
])
def test_semantic_errors(data, msg):
    with pytest.raises(ConfigInvalid, match=msg):
        from_dict(data)


def test_unknown_scenario_name():
    with pytest.raises(ConfigInvalid, match="neither a built-in"):
        load_scenario("no-such-scenario")


def test_overrides_and_ladder_rescaling():
    cfg = load_scenario("convergence-default", step=5e-4, span=(-0.5, 0.5), seed=7, out="/tmp/x")
    assert cfg.settings.step == 5e-4 and cfg.settings.span == (-0.5, 0.5)
    assert cfg.seed == 7 and cfg.output_dir == "/tmp/x"
    first = cfg.convergence[0]["steps"]
    assert first[-1] == pytest.approx(5e-4)
    assert first[0] / first[1] == pytest.approx(2.0)


def test_inline_entry_euclidean_and_levelset():
    data = {
        "entries": [
            {"name": "bump", "variables": ["u", "v"], "components": ["u", "v", "0.1*exp(-(u^2+v^2))"],
             "domain": {"lower": [-2, -2], "upper": [2, 2]}, "sample_box": {"lower": [-1, -1], "upper": [1, 1]}},
            {"name": "cap", "variables": ["u", "v"],
             "components": ["sin(u)*cos(v)", "sin(u)*sin(v)", "cos(u)"],
             "domain": {"lower": [0.2, -3], "upper": [2.9, 3]},
             "ambient": {"kind": "levelset", "expression": "x^2 + y^2 + z^2 - 1", "variables": ["x", "y", "z"]},
             "flags": {"totally_umbilic": True}},
        ],
        "suites": ["COR"],
    }
    cfg = from_dict(data)
    assert [e.name for e in cfg.entries] == ["bump", "cap"]
    assert set(cfg.inline) == {"bump", "cap"}
    assert cfg.entries[1].flags["totally_umbilic"] is True
    # a cap of the unit sphere has codimension 0 inside the unit sphere
    assert cfg.entries[1].flags["hypersurface"] is False
    assert cfg.entries[0].immersion.codim == 1
    assert cfg.suites == ("COR",)


@pytest.mark.parametrize("patch,msg", [
    ({"domain": {"lower": [0, 0], "upper": [0, 1]}}, "lower < upper"),
    ({"domain": {"lower": [0], "upper": [1]}}, "2 values"),
    ({"sample_box": {"lower": [-5, -1], "upper": [1, 1]}}, "leaves the domain"),
    ({"ambient": {"kind": "levelset"}}, "needs an 'expression'"),
    ({"components": ["u", "v", "w*2"]}, "bump.*unknown name"),
])
def test_inline_entry_errors(patch, msg):
    spec = {"name": "bump", "variables": ["u", "v"], "components": ["u", "v", "u*v"],
            "domain": {"lower": [-2, -2], "upper": [2, 2]}}
    spec.update(patch)
    with pytest.raises(ConfigInvalid, match=msg):
        from_dict({"entries": [spec]})


def test_inline_name_clash():
    spec = {"name": "sphere2", "variables": ["u"], "components": ["u", "u^2"],
            "domain": {"lower": [-1], "upper": [1]}}
    with pytest.raises(ConfigInvalid, match="already taken"):
        from_dict({"entries": [spec]})


def test_digest_is_stable():
    a, b = load_scenario("full"), load_scenario("full")
    assert a.digest() == b.digest()
    assert json.loads(a.canonical_json())["name"] == "full"


def test_shipped_scenario_files_validate():
    root = os.path.join(os.path.dirname(__file__), os.pardir, "scenarios")
    files = sorted(f for f in os.listdir(root) if f.endswith(".json"))
    assert files
    for f in files:
        cfg = load_scenario(os.path.join(root, f))
        assert cfg.entries and cfg.suites

"""Scenario configuration: JSON schema, built-in scenarios and semantic checks."""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import jsonschema

from .catalog import CATALOG, custom_entry
from .errors import ConfigInvalid
from .geometry import euclidean, immersion_from_expressions, levelset_from_expression, sphere_ambient
from .integrators import DEFAULT_SPAN, DEFAULT_STEP, GEODESIC, PSEUDO_GEODESIC
from .suite import DEFAULT_OFFSETS, DEFAULT_THRESHOLDS, THEOREMS, SuiteSettings, check_ladder

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_SPAN = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_BOX = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lower", "upper"],
    "properties": {"lower": _VEC, "upper": _VEC},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "umbilic-lab scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["entries"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "entries": {
            "type": "array",
            "items": {"oneOf": [{"type": "string"}, {"$ref": "#/$defs/inline"}]},
        },
        "suites": {"type": "array", "items": {"enum": list(THEOREMS)}, "uniqueItems": True},
        "curves": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seeds": {"type": "integer", "minimum": 1},
                "c_values": {"type": "array", "items": _NUM, "minItems": 1},
                "span": _SPAN,
                "step": _POS,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": {"type": "integer", "minimum": 1},
                "directions": {"type": "integer", "minimum": 2},
            },
        },
        "sections": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "offsets": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
                },
            },
        },
        "thresholds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _POS for k in DEFAULT_THRESHOLDS},
        },
        "convergence": {"type": "array", "items": {"$ref": "#/$defs/study"}},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string", "minLength": 1},
                "trajectories": {"enum": ["all", "representative", "none"]},
                "stride": {"type": "integer", "minimum": 1},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "threads": {"type": "integer", "minimum": 1},
    },
    "$defs": {
        "inline": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name", "variables", "components", "domain"],
            "properties": {
                "name": {"type": "string", "minLength": 1},
                "description": {"type": "string"},
                "variables": {"type": "array", "items": {"type": "string"}, "minItems": 1, "uniqueItems": True},
                "components": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "domain": _BOX,
                "sample_box": _BOX,
                "ambient": {"$ref": "#/$defs/ambient"},
                "derivatives": {"enum": ["symbolic", "finite-difference"]},
                "flags": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        k: {"type": ["boolean", "null"]}
                        for k in ("totally_umbilic", "extrinsic_sphere", "constant_isotropic", "hypersurface")
                    },
                },
            },
        },
        "ambient": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["euclidean", "sphere", "levelset"]},
                "radius": _POS,
                "expression": {"type": "string", "minLength": 1},
                "variables": {"type": "array", "items": {"type": "string"}, "minItems": 1, "uniqueItems": True},
            },
        },
        "study": {
            "type": "object",
            "additionalProperties": False,
            "required": ["entry", "kind", "steps"],
            "properties": {
                "entry": {"type": "string"},
                "kind": {"enum": [GEODESIC, PSEUDO_GEODESIC]},
                "c": _NUM,
                "steps": {"type": "array", "items": _POS, "minItems": 3},
                "span": _SPAN,
                "seeds": {"type": "integer", "minimum": 1},
            },
        },
    },
}

_STEPS_FINE = [4e-3, 2e-3, 1e-3]

BUILTIN_SCENARIOS = {
    "sphere-mainth": {
        "name": "sphere-mainth",
        "description": "round spheres: planar pseudo-geodesics and geodesics have planar extrinsic shapes",
        "entries": ["sphere2", "sphere3", "sphere2-in-R4"],
        "suites": ["MainTH-fwd", "COR"],
        "curves": {"seeds": 24},
    },
    "ellipsoid-secondth": {
        "name": "ellipsoid-secondth",
        "description": "non-umbilic ellipsoid: non-planar witnesses for the converse directions",
        "entries": ["ellipsoid-1-1-2"],
        "suites": ["MainTH-conv", "SecondTH"],
        "curves": {"seeds": 12},
    },
    "torus-secondth": {
        "name": "torus-secondth",
        "description": "torus of revolution: non-planar witnesses for the converse directions",
        "entries": ["torus-2-1"],
        "suites": ["MainTH-conv", "SecondTH"],
        "curves": {"seeds": 12},
    },
    "cylinder-cor": {
        "name": "cylinder-cor",
        "description": "cylinder: helical geodesics and a non-zero umbilicity defect",
        "entries": ["cylinder"],
        "suites": ["COR", "SecondTH"],
        "curves": {"seeds": 12},
    },
    "sphere-planar-pg": {
        "name": "sphere-planar-pg",
        "description": "plane sections of round spheres are pseudo-geodesics",
        "entries": ["sphere2", "sphere3"],
        "suites": ["PlanarImpliesPG"],
    },
    "veronese-thirdth": {
        "name": "veronese-thirdth",
        "description": "Veronese surface in S4: constant isotropy and circular geodesic shapes",
        "entries": ["veronese-in-S4"],
        "suites": ["ThirdTH"],
        "curves": {"seeds": 12},
        "grid": {"points": 25},
    },
    "full": {
        "name": "full",
        "description": "every catalog entry against every suite, reduced sample sizes",
        "entries": sorted(CATALOG),
        "suites": list(THEOREMS),
        "curves": {"seeds": 4, "span": [-1.5, 1.5]},
        "grid": {"points": 16},
        "sections": {"offsets": [-0.6, 0.0, 0.6]},
    },
    "convergence-default": {
        "name": "convergence-default",
        "description": "RK4 order on three curved entries and the rounding floor on the plane",
        "entries": ["sphere2", "sphere3", "ellipsoid-1-1-2", "plane"],
        "suites": [],
        "convergence": [
            {"entry": "sphere2", "kind": PSEUDO_GEODESIC, "c": 1.0, "steps": _STEPS_FINE},
            {"entry": "sphere3", "kind": PSEUDO_GEODESIC, "c": 2.0, "steps": _STEPS_FINE},
            {"entry": "ellipsoid-1-1-2", "kind": GEODESIC, "steps": [4e-2, 2e-2, 1e-2]},
            {"entry": "plane", "kind": GEODESIC, "steps": _STEPS_FINE},
        ],
    },
}


@dataclass
class ScenarioConfig:
    name: str
    raw: dict
    entries: list
    suites: tuple
    settings: SuiteSettings
    convergence: list
    output_dir: str
    trajectories: str
    seed: int
    threads: int | None
    source: str = "<builtin>"
    inline: dict = field(default_factory=dict)

    def entry(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        if name in CATALOG:
            return CATALOG[name]
        raise ConfigInvalid(f"unknown entry {name!r}")

    def canonical_json(self):
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _json_path(path):
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def parse_text(text, source="<string>"):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{source}: malformed JSON: {exc.msg}", exc.lineno, exc.colno) from None
    return data


def schema_errors(data):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    return [f"{_json_path(e.absolute_path)}: {e.message}" for e in errors]


def _ambient(spec, n_components):
    kind = spec.get("kind", "euclidean")
    if kind == "euclidean":
        return euclidean(n_components)
    if kind == "sphere":
        return sphere_ambient(n_components, float(spec.get("radius", 1.0)))
    if "expression" not in spec:
        raise ConfigInvalid("a levelset ambient needs an 'expression'")
    variables = spec.get("variables") or [f"x{i + 1}" for i in range(n_components)]
    if len(variables) != n_components:
        raise ConfigInvalid(f"levelset has {len(variables)} variables for {n_components} components")
    return levelset_from_expression(spec["expression"], variables)


def _box(spec, m, what):
    lo, hi = spec["lower"], spec["upper"]
    if len(lo) != m or len(hi) != m:
        raise ConfigInvalid(f"{what} bounds need {m} values each")
    if any(not a < b for a, b in zip(lo, hi)):
        raise ConfigInvalid(f"{what} needs lower < upper in every coordinate")
    return [float(v) for v in lo], [float(v) for v in hi]


def build_inline(spec):
    """Catalog entry for an inline expression immersion."""
    m = len(spec["variables"])
    lo, hi = _box(spec["domain"], m, f"entry {spec['name']!r}: domain")
    try:
        amb = _ambient(spec.get("ambient", {"kind": "euclidean"}), len(spec["components"]))
        imm = immersion_from_expressions(spec["name"], spec["variables"], spec["components"], list(zip(lo, hi)), amb,
                                         derivatives=spec.get("derivatives", "symbolic"))
    except (ConfigInvalid, ValueError, KeyError, SyntaxError) as exc:
        raise ConfigInvalid(f"entry {spec['name']!r}: {exc}") from None
    box = None
    if "sample_box" in spec:
        box = _box(spec["sample_box"], m, f"entry {spec['name']!r}: sample_box")
        if any(a < l or b > h for a, b, l, h in zip(*box, lo, hi)):
            raise ConfigInvalid(f"entry {spec['name']!r}: sample_box leaves the domain")
    flags = None
    if "flags" in spec:
        flags = {k: None for k in ("totally_umbilic", "extrinsic_sphere", "constant_isotropic")}
        flags["hypersurface"] = imm.codim == 1
        flags.update(spec["flags"])
    return custom_entry(imm, box, flags, spec.get("description", "inline immersion"))


def _check_span(span, step, what):
    a, b = float(span[0]), float(span[1])
    if not a <= 0.0 <= b or a == b:
        raise ConfigInvalid(f"{what} span [{a}, {b}] must contain 0 and have positive length")
    if step >= b - a:
        raise ConfigInvalid(f"{what} step {step} does not fit in the span")
    return (a, b)


def from_dict(data, source="<dict>", overrides=None):
    """Validate ``data`` (plus CLI ``overrides``) and build a :class:`ScenarioConfig`."""
    data = copy.deepcopy(data)
    problems = schema_errors(data)
    if problems:
        raise ConfigInvalid(f"{source}: schema violation: " + "; ".join(problems))
    overrides = overrides or {}
    curves = data.setdefault("curves", {})
    if overrides.get("step") is not None:
        curves["step"] = float(overrides["step"])
    if overrides.get("span") is not None:
        curves["span"] = [float(v) for v in overrides["span"]]
    if overrides.get("seed") is not None:
        data["seed"] = int(overrides["seed"])
    if overrides.get("out") is not None:
        data.setdefault("output", {})["dir"] = overrides["out"]

    inline, entries = {}, []
    for item in data["entries"]:
        if isinstance(item, str):
            if item not in CATALOG and item not in inline:
                raise ConfigInvalid(f"unknown catalog entry {item!r}; known: {', '.join(sorted(CATALOG))}")
            entries.append(inline.get(item) or CATALOG[item])
            continue
        if item["name"] in CATALOG or item["name"] in inline:
            raise ConfigInvalid(f"inline entry name {item['name']!r} is already taken")
        e = build_inline(item)
        inline[item["name"]] = e
        entries.append(e)
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise ConfigInvalid("entries are listed more than once")

    thresholds = dict(DEFAULT_THRESHOLDS)
    thresholds.update(data.get("thresholds", {}))
    if not thresholds["planar"] < thresholds["reject"]:
        raise ConfigInvalid("thresholds must satisfy planar < reject")

    step = float(curves.get("step", DEFAULT_STEP))
    span = _check_span(curves.get("span", DEFAULT_SPAN), step, "curves")
    c_values = tuple(float(c) for c in curves.get("c_values", (0.5, 1.0, 2.0)))
    if any(c == 0.0 or not math.isfinite(c) for c in c_values):
        raise ConfigInvalid("c values must be finite and non-zero")
    grid = data.get("grid", {})
    out = data.get("output", {})
    seed = int(data.get("seed", 0))
    settings = SuiteSettings(
        step=step,
        span=span,
        seeds=int(curves.get("seeds", 24)),
        c_values=c_values,
        grid_points=int(grid.get("points", 25)),
        directions=int(grid.get("directions", 64)),
        offsets=tuple(float(v) for v in data.get("sections", {}).get("offsets", DEFAULT_OFFSETS)),
        seed=seed,
        thresholds=thresholds,
        trajectories=out.get("trajectories", "representative"),
        stride=int(out.get("stride", 1)),
    )

    studies = []
    for k, st in enumerate(data.get("convergence", [])):
        what = f"convergence[{k}]"
        if st["entry"] not in CATALOG and st["entry"] not in inline:
            raise ConfigInvalid(f"{what}: unknown entry {st['entry']!r}")
        if st["kind"] == PSEUDO_GEODESIC and not st.get("c"):
            raise ConfigInvalid(f"{what}: a pseudo-geodesic study needs a non-zero 'c'")
        steps = check_ladder(st["steps"])
        if overrides.get("step") is not None:
            # the ladder keeps its ratios; --step sets the finest rung
            scale = float(overrides["step"]) / steps[-1]
            steps = [h * scale for h in steps]
        sp = _check_span(st.get("span", [0.0, math.pi]), steps[0], what)
        studies.append({"entry": st["entry"], "kind": st["kind"], "c": st.get("c"), "steps": steps,
                        "span": sp, "seeds": int(st.get("seeds", 2))})

    threads = data.get("threads")
    return ScenarioConfig(
        name=data.get("name", os.path.splitext(os.path.basename(source))[0] or "scenario"),
        raw=data,
        entries=entries,
        suites=tuple(s for s in THEOREMS if s in data.get("suites", list(THEOREMS))),
        settings=settings,
        convergence=studies,
        output_dir=out.get("dir", os.path.join("runs", data.get("name", "scenario"))),
        trajectories=settings.trajectories,
        seed=seed,
        threads=None if threads is None else int(threads),
        source=source,
        inline=inline,
    )


def load_raw(scenario):
    """Raw dict and source label for a built-in name or a JSON file path."""
    if scenario in BUILTIN_SCENARIOS:
        return copy.deepcopy(BUILTIN_SCENARIOS[scenario]), f"<builtin:{scenario}>"
    if not os.path.isfile(scenario):
        raise ConfigInvalid(
            f"{scenario!r} is neither a built-in scenario ({', '.join(sorted(BUILTIN_SCENARIOS))}) nor a file")
    try:
        with open(scenario, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {scenario}: {exc}") from None
    return parse_text(text, scenario), scenario


def load_scenario(scenario, **overrides):
    raw, source = load_raw(scenario)
    return from_dict(raw, source, overrides)

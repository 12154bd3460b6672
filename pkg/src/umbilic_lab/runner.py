"""Scenario execution: suites, convergence studies, report and manifest files."""

from __future__ import annotations

import datetime as _dt
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .emit import Emitter, dumps, sha256_bytes
from .kernels import BACKEND
from .suite import convergence_study, ordered_map, theorem_suite

THREADS_ENV = "UMBILIC_LAB_THREADS"
REPORT_FORMAT = 1


def resolve_threads(cli_value=None, config_value=None):
    """``--threads`` wins, then the environment, then the config, then 1."""
    if cli_value is not None:
        value, where = cli_value, "--threads"
    elif os.environ.get(THREADS_ENV, "").strip():
        value, where = os.environ[THREADS_ENV].strip(), THREADS_ENV
    elif config_value is not None:
        value, where = config_value, "config 'threads'"
    else:
        return 1
    try:
        n = int(value)
    except (TypeError, ValueError):
        n = 0
    if n < 1:
        from .errors import ConfigInvalid

        raise ConfigInvalid(f"{where} must be a positive integer, got {value!r}")
    return n


def _experiment_config(cfg):
    # output location and worker count do not change results
    raw = {k: v for k, v in cfg.raw.items() if k != "threads"}
    if "output" in raw:
        raw["output"] = {k: v for k, v in raw["output"].items() if k != "dir"}
        if not raw["output"]:
            del raw["output"]
    return raw


def _settings_dict(s):
    return {"step": s.step, "span": list(s.span), "seeds": s.seeds, "c_values": list(s.c_values),
            "grid_points": s.grid_points, "directions": s.directions, "offsets": list(s.offsets),
            "seed": s.seed, "thresholds": dict(sorted(s.thresholds.items())), "trajectories": s.trajectories,
            "stride": s.stride}


def _entries_dict(cfg):
    out = {}
    for e in cfg.entries:
        imm = e.immersion
        out[e.name] = {"description": e.description, "flags": dict(e.flags), "dim": imm.dim,
                       "ambient_dim": imm.ambient_dim, "ambient": imm.ambient.label, "codim": imm.codim,
                       "inline": e.name in cfg.inline}
    return out


def _studies(cfg, threads):
    def one(st):
        return convergence_study(cfg.entry(st["entry"]), st["kind"], st["steps"], c=st["c"], span=st["span"],
                                 n_seeds=st["seeds"], seed=cfg.seed)

    return ordered_map(one, cfg.convergence, threads)


def _study_file(k, res):
    tag = res.kind if res.c is None else f"{res.kind}-c{res.c:g}"
    return f"{k:02d}__{res.entry}__{tag}.csv"


def execute(cfg, threads=1, suites=True, studies=True):
    """Compute everything ``cfg`` asks for; returns ``(report, csv_files, consistent)``."""
    report = {
        "format": REPORT_FORMAT,
        "scenario": cfg.name,
        "config": _experiment_config(cfg),
        "settings": _settings_dict(cfg.settings),
        "entries": _entries_dict(cfg),
    }
    files = {}
    ok = True
    if suites:
        res = theorem_suite(cfg.entries, cfg.suites, cfg.settings, threads=threads)
        errors = [c["label"] for c in res.curves if "error" in c]
        report["summary"] = {
            "consistent": res.consistent,
            "verdicts": {v.theorem: v.consistent for v in res.verdicts},
            "curves": len(res.curves),
            "curve_errors": len(errors),
        }
        report["verdicts"] = [v.to_dict() for v in res.verdicts]
        report["defects"] = {name: {k: d.to_dict() for k, d in g.items()} for name, g in res.defects.items()}
        report["curves"] = res.curves
        files.update({"trajectories/" + k: v for k, v in res.csv.items()})
        ok = ok and res.consistent
    if studies and cfg.convergence:
        results = _studies(cfg, threads)
        rows = []
        for k, r in enumerate(results):
            name = _study_file(k, r)
            files["convergence/" + name] = r.csv_text()
            rows.append(dict(r.to_dict(), passed=r.passed, csv=name))
        report["convergence"] = rows
        conv_ok = all(r.passed for r in results)
        report.setdefault("summary", {})["convergence_passed"] = conv_ok
        ok = ok and conv_ok
    report.setdefault("summary", {})["exit_consistent"] = bool(ok)
    return report, files, ok


def write_outputs(out_dir, cfg, report, files, threads, wall_clock, verb):
    em = Emitter(out_dir)
    for rel in sorted(files):
        em.write_text(rel, files[rel])
    report_text = dumps(report)
    em.write_text("report.json", report_text)
    import numba

    manifest = {
        "tool": "umbilic-lab",
        "version": __version__,
        "verb": verb,
        "scenario": cfg.name,
        "source": cfg.source,
        "config_sha256": sha256_bytes(dumps(report["config"]).encode()),
        "report_sha256": sha256_bytes(report_text.encode()),
        "backend": BACKEND,
        "threads": threads,
        "seed": cfg.seed,
        "wall_clock_seconds": wall_clock,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "numba": numba.__version__,
        "platform": platform.platform(),
        "files": em.files,
    }
    em.write_json("manifest.json", manifest)
    return em


def run_scenario(cfg, threads=1, out_dir=None, verb="run"):
    """Run ``cfg`` and write report.json, manifest.json and the CSV files.

    ``verb`` is ``"run"`` (suites and any listed studies) or
    ``"convergence"`` (studies only).  Returns ``(report, consistent)``.
    """
    t0 = time.perf_counter()
    report, files, ok = execute(cfg, threads, suites=(verb == "run"), studies=True)
    wall = time.perf_counter() - t0
    write_outputs(out_dir or cfg.output_dir, cfg, report, files, threads, wall, verb)
    return report, ok

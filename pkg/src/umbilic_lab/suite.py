"""Theorem-level verdicts over an ensemble of immersions, and convergence studies.

Work is split into independent tasks (one per entry and curve family, plus
one per entry for the pointwise grid defects).  Tasks may run on a thread
pool; results are always consumed in submission order so the aggregated
report does not depend on the worker count.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .catalog import sample_grid
from .development import ambient_planarity_residual, intrinsic_planarity_residual
from .diagnostics import (
    DEFAULT_DIRECTIONS,
    DefectReport,
    eigenvector_defect,
    extrinsic_sphere_defect,
    isotropy_defect,
    parallel_normalized_H_defect,
    umbilicity_defect,
)
from .errors import ConfigInvalid, MeanCurvatureVanishes, UmbilicLabError
from .geometry import frames_along
from .integrators import (
    DEFAULT_SPAN,
    DEFAULT_STEP,
    GEODESIC,
    PSEUDO_GEODESIC,
    curvature_profile,
    integrate_batch,
    sphere_section,
    trajectory_from_ambient_curve,
    trajectory_rows,
)

THEOREMS = ("MainTH-fwd", "MainTH-conv", "COR", "PlanarImpliesPG", "SecondTH", "ThirdTH")

DEFAULT_THRESHOLDS = {
    "planar": 1e-6,
    "reject": 1e-4,
    "umbilic": 1e-6,
    "pnh": 1e-6,
    "isotropy": 1e-8,
    "spread": 1e-6,
    "circle": 1e-6,
    "ratio": 1e-6,
    "eigen": 1e-6,
    "kappa_floor": 1e-6,
    "tau_floor": 1e-6,
    "witness_umbilic": 0.1,
}

DEFAULT_OFFSETS = tuple(float(v) for v in np.linspace(-0.8, 0.8, 10))
MIN_SAMPLES = 16
CONVERGENCE_FLOOR = 1e-12
SLOPE_BAND = (3.5, 4.5)


def stable_rng(seed, *keys):
    """Generator keyed by the run seed and string labels (order-independent of tasks)."""
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [zlib.crc32(str(k).encode()) for k in keys]
    return np.random.default_rng(words)


def ordered_map(fn, items, threads=1):
    """``[fn(x) for x in items]``, possibly on a thread pool, in input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SuiteSettings:
    step: float = DEFAULT_STEP
    span: tuple = DEFAULT_SPAN
    seeds: int = 24
    c_values: tuple = (0.5, 1.0, 2.0)
    grid_points: int = 25
    directions: int = DEFAULT_DIRECTIONS
    offsets: tuple = DEFAULT_OFFSETS
    seed: int = 0
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    trajectories: str = "representative"
    stride: int = 1

    def threshold(self, key):
        return float(self.thresholds.get(key, DEFAULT_THRESHOLDS[key]))


@dataclass
class TheoremVerdict:
    """Outcome of one theorem over an ensemble.

    ``consistent`` holds iff every entry satisfies "hypothesis => conclusion"
    on its sampled set.  Per-entry details keep the defect values, sample
    counts and named witness seeds.
    """

    theorem: str
    consistent: bool
    entries: list
    notes: list = field(default_factory=list)

    @property
    def hypothesis_defects(self):
        return {e["entry"]: e["hypothesis"] for e in self.entries}

    @property
    def conclusion_defects(self):
        return {e["entry"]: e["conclusion"] for e in self.entries}

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "consistent": self.consistent,
            "hypothesis_defects": self.hypothesis_defects,
            "conclusion_defects": self.conclusion_defects,
            "entries": self.entries,
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# per-entry tasks


def grid_defects(entry, settings):
    """Umbilicity and isotropy defects on the seeded chart grid of ``entry``."""
    imm = entry.immersion
    pts = sample_grid(entry, [settings.seed, zlib.crc32(entry.name.encode()), 1], settings.grid_points)
    umb, iso, lam, spread = [], [], [], []
    for k, u in enumerate(pts):
        umb.append(umbilicity_defect(imm, u, seed=settings.seed + k))
        r = isotropy_defect(imm, u, settings.directions, seed=settings.seed + k)
        iso.append(r.defect)
        lam.append(r.lam)
        spread.append(r.spread)
    sampling = {"points": int(len(pts)), "directions": int(settings.directions), "seed": int(settings.seed),
                "grid": pts.tolist()}
    short = {k: v for k, v in sampling.items() if k != "grid"}
    lam_range = float(max(lam) - min(lam)) if lam else 0.0
    return {
        "umbilicity": DefectReport.from_values("umbilicity", umb, sampling, settings.threshold("umbilic")),
        "isotropy": DefectReport.from_values("isotropy", iso, short, settings.threshold("isotropy")),
        "lambda": DefectReport.from_values("lambda", lam, short, None, range=lam_range),
        "isotropy_spread": DefectReport.from_values("isotropy_spread", spread, short, settings.threshold("spread")),
    }


def _stdev(values):
    values = np.asarray(values, dtype=float)
    return float(np.std(values)) if values.size else float("nan")


def analyze_curve(entry, traj, settings, intrinsic=False):
    """Scalar summary of one trajectory; module errors are captured, not raised."""
    imm = entry.immersion
    o = traj.origin
    rec = {
        "label": traj.label,
        "entry": entry.name,
        "kind": traj.kind,
        "c": traj.c,
        "seed": {"p": traj.u[o].tolist(), "x": traj.T[o].tolist(), "y": traj.Y[o].tolist()},
        "status": traj.status,
        "span": list(traj.span),
        "samples": int(len(traj)),
        "events": list(traj.events),
        "max_drift": float(traj.max_drift),
    }
    if len(traj) < MIN_SAMPLES:
        rec["error"] = f"InsufficientSamples: {len(traj)} samples"
        return rec
    th = settings.threshold
    try:
        fr = frames_along(imm, traj.u, normals=True)
        prof = curvature_profile(imm, traj, fr)
        amb = ambient_planarity_residual(imm, traj, th("planar"), th("reject"), profile=prof, frames=fr)
        rec["ambient"] = amb.to_dict()
        if intrinsic:
            rec["intrinsic"] = intrinsic_planarity_residual(imm, traj, th("planar"), th("reject"),
                                                            profile=prof, frames=fr).to_dict()
        kt = prof.kappa_tilde
        rec["pythagoras"] = prof.pythagoras_defect()
        rec["kappa_tilde"] = {"min": float(kt.min()), "max": float(kt.max()), "range": float(kt.max() - kt.min())}
        rec["tau_at_seed"] = float(prof.tau[o])
        keep = prof.kappa >= th("kappa_floor")
        rec["tau_over_kappa_stdev"] = _stdev(prof.tau[keep] / prof.kappa[keep]) if keep.any() else None
        if imm.dim == 2 and imm.ambient_dim == 3 and not imm.ambient.is_levelset:
            d = prof.theta_defined
            rec["theta_stdev"] = _stdev(prof.theta[d]) if d.any() else None
        try:
            rec["parallel_normalized_H"] = parallel_normalized_H_defect(imm, traj, fr)
        except MeanCurvatureVanishes:
            rec["parallel_normalized_H"] = None
        rec["extrinsic_sphere"] = extrinsic_sphere_defect(imm, traj, fr)
        rec["umbilicity_at_seed"] = umbilicity_defect(imm, traj.u[o])
        if imm.codim == 1:
            rec["eigenvector_at_seed"] = eigenvector_defect(imm, traj.u[o], traj.T[o])[0]
        rec["asymptotic"] = bool(rec["tau_at_seed"] < th("tau_floor")
                                 or any(e.get("event") == "sigma-zero" for e in traj.events))
    except UmbilicLabError as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec


def _csv_text(traj, stride):
    header, rows = trajectory_rows(traj)
    lines = [",".join(header)] + [",".join(r) for r in rows[::max(1, int(stride))]]
    return "\n".join(lines) + "\n"


def _file_name(label):
    return label.replace("/", "__").replace(" ", "_") + ".csv"


def _pick_emitted(records, mode):
    """Indices of trajectories to export: all, none, or first and worst per family."""
    if mode == "all":
        return set(range(len(records)))
    if mode == "none":
        return set()
    chosen = set()
    groups = {}
    for i, r in enumerate(records):
        groups.setdefault((r["kind"], r["c"]), []).append(i)
    for idx in groups.values():
        chosen.add(idx[0])
        scored = [i for i in idx if "ambient" in records[i]]
        if scored:
            chosen.add(max(scored, key=lambda i: (records[i]["ambient"]["residual_fit"], -i)))
    return chosen


def curve_family(entry, settings, geodesics=True, c_values=(), intrinsic=False):
    """Integrate and analyse the seeded geodesics and c-pseudo-geodesics of ``entry``.

    All families share the same seeds and one batched integration: a
    geodesic is the c = 0 member of the pseudo-geodesic system, whose right
    side then reduces to the geodesic one term for term.  Returns
    ``(records, csv)`` where ``csv`` maps file names to text for the exported
    subset.
    """
    imm = entry.immersion
    seeds = entry.sample_seeds(stable_rng(settings.seed, entry.name, "seeds"), settings.seeds)
    n = len(seeds)
    cs = ([0.0] if geodesics else []) + [float(c) for c in c_values]
    batch = [s for _ in cs for s in seeds]
    labels = [(f"{entry.name}/geodesic/s{i:02d}" if (geodesics and k == 0) else f"{entry.name}/pg-c{c:g}/s{i:02d}")
              for k, c in enumerate(cs) for i in range(n)]
    trajs = integrate_batch(imm, PSEUDO_GEODESIC, batch, settings.span, settings.step, c=np.repeat(cs, n),
                            labels=labels)
    if geodesics:
        for t in trajs[:n]:
            t.kind, t.c, t.sigma = GEODESIC, None, None
    records = [analyze_curve(entry, t, settings, intrinsic and t.kind == PSEUDO_GEODESIC) for t in trajs]
    csv = {}
    for i in sorted(_pick_emitted(records, settings.trajectories)):
        name = _file_name(records[i]["label"])
        records[i]["csv"] = name
        csv[name] = _csv_text(trajs[i], settings.stride)
    return records, csv


def _section_normal(rng, dim, offset):
    """Random plane normal whose section circle stays away from the chart's pole."""
    for _ in range(1000):
        n = rng.normal(size=dim)
        n /= np.linalg.norm(n)
        rho = math.sqrt(1.0 - offset * offset)
        lowest = offset * n[-1] - rho * math.sqrt(max(1.0 - n[-1] ** 2, 0.0))
        if lowest > -0.6:
            return n
    raise ConfigInvalid("could not place a plane section inside the chart")


def section_family(entry, settings):
    """Plane sections of a round-sphere entry as explicit unit-speed curves."""
    info = entry.round_sphere
    rng = stable_rng(settings.seed, entry.name, "sections")
    records, csv = [], {}
    r = float(info["radius"])
    for k, d in enumerate(settings.offsets):
        d = float(d) * r
        n = _section_normal(rng, info["dim"] + 1, d / r)
        rho = math.sqrt(r * r - d * d)
        count = int(math.floor(2.0 * math.pi * rho / settings.step))
        t = (np.arange(count) - count // 2) * settings.step
        X, dX, d2X = sphere_section(n, d, t, r)
        pad = info["ambient_dim"] - X.shape[1]
        if pad:
            X, dX, d2X = (np.concatenate([a, np.zeros((len(a), pad))], axis=1) for a in (X, dX, d2X))
        label = f"{entry.name}/section/o{k:02d}"
        traj = trajectory_from_ambient_curve(entry.immersion, t, X, dX, d2X, label=label)
        rec = analyze_curve(entry, traj, settings)
        rec["section"] = {"normal": n.tolist(), "offset": d}
        if settings.trajectories != "none":
            rec["csv"] = _file_name(label)
            csv[rec["csv"]] = _csv_text(traj, settings.stride)
        records.append(rec)
    return records, csv


# ---------------------------------------------------------------------------
# verdicts


def _usable(records, kind=None, c=None, exclude_asymptotic=False, intrinsic=False, planar=None):
    out = []
    for r in records:
        if "error" in r or (kind and r["kind"] != kind) or (c is not None and r["c"] != c):
            continue
        if exclude_asymptotic and r.get("asymptotic"):
            continue
        if intrinsic and planar is not None and r["intrinsic"]["residual_fit"] > planar:
            continue
        out.append(r)
    return out


def _max(values):
    values = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    return float(max(values)) if values else None


def _entry_block(entry, hyp, concl, consistent, **extra):
    out = {"entry": entry, "hypothesis": hyp, "conclusion": concl, "consistent": bool(consistent)}
    out.update(extra)
    return out


def _counts(records, used):
    return {"curves": len(records), "used": len(used), "errors": sum(1 for r in records if "error" in r)}


def verdict_mainth_forward(entry, grid, records, settings):
    """Totally umbilic => every planar pseudo-geodesic has planar extrinsic shape."""
    th = settings.threshold
    umb = grid["umbilicity"].sup
    hyp_holds = umb <= th("umbilic")
    # asymptotic seeds stay in: only the parallel-H half needs to avoid geodesic points
    used = _usable(records, PSEUDO_GEODESIC, intrinsic=True, planar=th("planar"))
    per_c = {}
    for c in sorted({r["c"] for r in used}):
        rs = [r for r in used if r["c"] == c]
        per_c[f"{c:g}"] = {"max_residual_fit": _max(r["ambient"]["residual_fit"] for r in rs),
                           "max_residual_ode": _max(r["ambient"]["residual_ode"] for r in rs), "curves": len(rs)}
    worst = max(used, key=lambda r: r["ambient"]["residual_fit"], default=None)
    concl_holds = bool(used) and all(r["ambient"]["residual_fit"] <= th("planar") for r in used)
    consistent = (not hyp_holds) or concl_holds
    notes = []
    if hyp_holds and not used:
        notes.append("no usable pseudo-geodesics")
    return _entry_block(
        entry.name,
        {"umbilicity_sup": umb, "holds": hyp_holds},
        {"max_residual_fit": _max(r["ambient"]["residual_fit"] for r in used),
         "max_residual_ode": _max(r["ambient"]["residual_ode"] for r in used),
         "max_parallel_normalized_H": _max(r["parallel_normalized_H"] for r in used),
         "per_c": per_c, "holds": concl_holds},
        consistent, samples=_counts(records, used),
        worst=None if worst is None else worst["label"], notes=notes)


def verdict_mainth_converse(entry, grid, records, settings):
    """Some c with all planar c-pseudo-geodesics planar => umbilic with parallel normalized H."""
    th = settings.threshold
    umb = grid["umbilicity"].sup
    used = _usable(records, PSEUDO_GEODESIC, exclude_asymptotic=True, intrinsic=True, planar=th("planar"))
    witnesses, hyp_by_c = {}, {}
    for c in sorted({r["c"] for r in used}):
        rs = [r for r in used if r["c"] == c]
        hyp_by_c[f"{c:g}"] = all(r["ambient"]["residual_fit"] <= th("planar") for r in rs)
        w = max(rs, key=lambda r: r["ambient"]["residual_fit"])
        witnesses[f"{c:g}"] = {
            "label": w["label"],
            "residual_fit": w["ambient"]["residual_fit"],
            "umbilicity_at_seed": w["umbilicity_at_seed"],
            "non_planar": w["ambient"]["residual_fit"] >= th("reject"),
            "witness": (w["ambient"]["residual_fit"] >= th("reject")
                        and w["umbilicity_at_seed"] >= th("witness_umbilic")),
            "non_planar_count": sum(1 for r in rs if r["ambient"]["residual_fit"] >= th("reject")),
            "curves": len(rs),
        }
    pnh = _max(r["parallel_normalized_H"] for r in used)
    hyp_holds = any(hyp_by_c.values())
    concl_holds = umb <= th("umbilic") and (pnh is None or pnh <= th("pnh"))
    consistent = (not hyp_holds) or concl_holds
    return _entry_block(
        entry.name,
        {"all_planar_by_c": hyp_by_c, "holds": hyp_holds},
        {"umbilicity_sup": umb, "max_parallel_normalized_H": pnh, "holds": concl_holds},
        consistent, samples=_counts(records, used), witnesses=witnesses)


def verdict_cor(entry, grid, records, settings):
    """Totally umbilic => every geodesic has planar extrinsic shape."""
    th = settings.threshold
    umb = grid["umbilicity"].sup
    hyp_holds = umb <= th("umbilic")
    used = _usable(records, GEODESIC)
    fits = [r["ambient"]["residual_fit"] for r in used]
    concl_holds = bool(used) and all(f <= th("planar") for f in fits)
    worst = max(used, key=lambda r: r["ambient"]["residual_fit"], default=None)
    return _entry_block(
        entry.name,
        {"umbilicity_sup": umb, "holds": hyp_holds},
        {"max_residual_fit": _max(fits), "max_residual_ode": _max(r["ambient"]["residual_ode"] for r in used),
         "non_planar_count": sum(1 for f in fits if f >= th("reject")), "holds": concl_holds},
        (not hyp_holds) or concl_holds, samples=_counts(records, used),
        worst=None if worst is None else worst["label"])


def verdict_planar_implies_pg(entry, grid, records, settings):
    """Umbilic with parallel normalized H: planar extrinsic shape => pseudo-geodesic."""
    th = settings.threshold
    umb = grid["umbilicity"].sup
    used = _usable(records)
    per_curve, consistent = [], True
    for r in used:
        pnh = r["parallel_normalized_H"]
        hyp = (umb <= th("umbilic") and pnh is not None and pnh <= th("pnh")
               and r["ambient"]["residual_fit"] <= th("planar"))
        ratio = r["tau_over_kappa_stdev"]
        concl = ratio is None or ratio <= th("ratio")
        consistent = consistent and ((not hyp) or concl)
        per_curve.append({"label": r["label"], "residual_fit": r["ambient"]["residual_fit"],
                          "tau_over_kappa_stdev": ratio, "hypothesis": hyp, "conclusion": concl})
    return _entry_block(
        entry.name,
        {"umbilicity_sup": umb, "max_parallel_normalized_H": _max(r["parallel_normalized_H"] for r in used),
         "max_residual_fit": _max(r["ambient"]["residual_fit"] for r in used),
         "holds": any(c["hypothesis"] for c in per_curve)},
        {"max_tau_over_kappa_stdev": _max(r["tau_over_kappa_stdev"] for r in used),
         "holds": all(c["conclusion"] for c in per_curve)},
        consistent and bool(used), samples=_counts(records, used), curves=per_curve)


def _circle(r, th):
    kt = r["kappa_tilde"]
    return kt["range"] <= th("circle") and kt["min"] > th("circle")


def verdict_second(entry, grid, records, settings):
    """Hypersurfaces: all geodesics planar => totally umbilic (circles => extrinsic sphere)."""
    th = settings.threshold
    umb = grid["umbilicity"].sup
    used = _usable(records, GEODESIC)
    planar = [r for r in used if r["ambient"]["residual_fit"] <= th("planar")]
    hyp_holds = bool(used) and len(planar) == len(used)
    concl_holds = umb <= th("umbilic")
    eig = [r for r in planar if r["tau_at_seed"] >= th("tau_floor")]
    eig_max = _max(r["eigenvector_at_seed"] for r in eig)
    eig_ok = eig_max is None or eig_max <= th("eigen")
    circle_hyp = hyp_holds and all(_circle(r, th) for r in used)
    es_max = _max(r["extrinsic_sphere"] for r in used)
    circle_concl = concl_holds and es_max is not None and es_max <= th("pnh")
    consistent = ((not hyp_holds) or concl_holds) and eig_ok and ((not circle_hyp) or circle_concl)
    nonplanar = [r for r in used if r["ambient"]["residual_fit"] >= th("reject")]
    witness = max(nonplanar, key=lambda r: r["ambient"]["residual_fit"], default=None)
    return _entry_block(
        entry.name,
        {"max_residual_fit": _max(r["ambient"]["residual_fit"] for r in used),
         "planar_count": len(planar), "non_planar_count": len(nonplanar),
         "all_circles": circle_hyp, "holds": hyp_holds},
        {"umbilicity_sup": umb, "max_extrinsic_sphere": es_max,
         "eigenvector_max": eig_max, "eigenvector_checked": len(eig), "holds": concl_holds},
        consistent, samples=_counts(records, used),
        witness=None if witness is None else {
            "label": witness["label"], "seed": witness["seed"],
            "residual_fit": witness["ambient"]["residual_fit"],
            "umbilicity_at_seed": witness["umbilicity_at_seed"]})


def verdict_third(entry, grid, records, settings):
    """All geodesics planar => totally isotropic; circles => constant isotropic."""
    th = settings.threshold
    used = _usable(records, GEODESIC)
    planar = [r for r in used if r["ambient"]["residual_fit"] <= th("planar")]
    hyp_holds = bool(used) and len(planar) == len(used)
    iso = grid["isotropy"].sup
    concl_holds = iso <= th("isotropy")
    lam = grid["lambda"]
    lam_range = float(lam.extra.get("range", 0.0))
    spread = grid["isotropy_spread"].sup
    circle_hyp = hyp_holds and all(_circle(r, th) for r in used)
    circle_concl = lam_range <= th("spread") and spread <= th("spread") and min(lam.values) > th("spread")
    consistent = ((not hyp_holds) or concl_holds) and ((not circle_hyp) or circle_concl)
    return _entry_block(
        entry.name,
        {"max_residual_fit": _max(r["ambient"]["residual_fit"] for r in used),
         "max_kappa_tilde_range": _max(r["kappa_tilde"]["range"] for r in used),
         "all_circles": circle_hyp, "holds": hyp_holds},
        {"isotropy_sup": iso, "lambda_mean": lam.mean, "lambda_range": lam_range,
         "spread_sup": spread, "holds": concl_holds, "constant_isotropic": circle_concl},
        consistent, samples=_counts(records, used))


# ---------------------------------------------------------------------------
# runner


@dataclass
class SuiteResult:
    verdicts: list
    curves: list
    defects: dict
    csv: dict

    @property
    def consistent(self):
        return all(v.consistent for v in self.verdicts)


def _needs(suites):
    pg = bool({"MainTH-fwd", "MainTH-conv"} & set(suites))
    geo = bool({"COR", "SecondTH", "ThirdTH"} & set(suites))
    sections = "PlanarImpliesPG" in suites
    return pg, geo, sections


def theorem_suite(entries, suites=THEOREMS, settings=None, threads=1):
    """Evaluate the requested theorem verdicts over ``entries``.

    Returns a :class:`SuiteResult` whose order depends only on the inputs.
    """
    settings = settings or SuiteSettings()
    for s in suites:
        if s not in THEOREMS:
            raise ConfigInvalid(f"unknown suite {s!r}; known: {', '.join(THEOREMS)}")
    want_pg, want_geo, want_sections = _needs(suites)
    tasks = []
    for e in entries:
        tasks.append(("grid", e))
        if want_pg or want_geo:
            tasks.append(("curves", e))
        if want_sections and e.round_sphere is not None:
            tasks.append(("sections", e))

    def work(task):
        what, e = task
        if what == "grid":
            return grid_defects(e, settings)
        if what == "curves":
            return curve_family(e, settings, geodesics=want_geo, c_values=settings.c_values if want_pg else (),
                                intrinsic=True)
        return section_family(e, settings)

    results = ordered_map(work, tasks, threads)
    grids, fam, csv, curves = {}, {}, {}, []
    for (what, e), res in zip(tasks, results):
        if what == "grid":
            grids[e.name] = res
            continue
        records, files = res
        if what == "curves":
            fam[("pg", e.name)] = [r for r in records if r["kind"] == PSEUDO_GEODESIC]
            fam[("geo", e.name)] = [r for r in records if r["kind"] == GEODESIC]
        else:
            fam[(what, e.name)] = records
        curves.extend(records)
        csv.update(files)

    verdicts = []
    for s in THEOREMS:
        if s not in suites:
            continue
        blocks, notes = [], []
        for e in entries:
            g = grids[e.name]
            if s == "MainTH-fwd":
                blocks.append(verdict_mainth_forward(e, g, fam[("pg", e.name)], settings))
            elif s == "MainTH-conv":
                blocks.append(verdict_mainth_converse(e, g, fam[("pg", e.name)], settings))
            elif s == "COR":
                blocks.append(verdict_cor(e, g, fam[("geo", e.name)], settings))
            elif s == "PlanarImpliesPG":
                if e.round_sphere is None:
                    notes.append(f"{e.name}: no plane-section construction (not a round sphere); skipped")
                    continue
                blocks.append(verdict_planar_implies_pg(e, g, fam[("sections", e.name)], settings))
            elif s == "SecondTH":
                if e.immersion.codim != 1:
                    notes.append(f"{e.name}: codimension {e.immersion.codim}, not a hypersurface; skipped")
                    continue
                blocks.append(verdict_second(e, g, fam[("geo", e.name)], settings))
            elif s == "ThirdTH":
                blocks.append(verdict_third(e, g, fam[("geo", e.name)], settings))
        verdicts.append(TheoremVerdict(s, all(b["consistent"] for b in blocks), blocks, notes))
    return SuiteResult(verdicts, curves, grids, csv)


# ---------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceResult:
    entry: str
    kind: str
    c: float
    steps: list
    residuals: list
    slope: float
    status: str
    reference_step: float
    span: tuple
    seeds: int
    band: tuple = SLOPE_BAND
    floor: float = CONVERGENCE_FLOOR

    @property
    def passed(self):
        return self.status in ("ok", "floor")

    def to_dict(self):
        return {"entry": self.entry, "kind": self.kind, "c": self.c, "steps": list(self.steps),
                "residuals": list(self.residuals), "slope": self.slope, "status": self.status,
                "reference_step": self.reference_step, "span": list(self.span), "seeds": self.seeds,
                "band": list(self.band), "floor": self.floor}

    def csv_text(self):
        from .integrators import format_float

        lines = ["h,residual"] + [f"{format_float(h)},{format_float(r)}" for h, r in zip(self.steps, self.residuals)]
        return "\n".join(lines) + "\n"


def check_ladder(steps):
    steps = sorted((float(h) for h in steps), reverse=True)
    if len(steps) < 3:
        raise ConfigInvalid("a convergence study needs at least 3 step sizes")
    if any(h <= 0 for h in steps):
        raise ConfigInvalid("step sizes must be positive")
    ratios = [a / b for a, b in zip(steps, steps[1:])]
    if any(abs(r - ratios[0]) > 1e-6 * ratios[0] for r in ratios) or ratios[0] <= 1.0:
        raise ConfigInvalid(f"steps {steps} are not a geometric ladder")
    return steps


def convergence_study(entry, kind, steps, c=None, span=(0.0, math.pi), n_seeds=2, seed=0,
                      floor=CONVERGENCE_FLOOR, band=SLOPE_BAND):
    """Global ambient error of RK4 runs against a reference at a quarter of the finest step.

    The residual for step h is the max over seeds and shared samples of the
    ambient position difference.  Residuals at or below ``floor`` are
    rounding noise and are dropped from the log-log fit; with fewer than two
    points left the study reports ``floor`` instead of a slope.
    """
    steps = check_ladder(steps)
    imm = entry.immersion
    h_ref = steps[-1] / 4.0
    seeds = entry.sample_seeds(stable_rng(seed, entry.name, "convergence"), n_seeds)
    ref = integrate_batch(imm, kind, seeds, span, h_ref, c=c)
    residuals = []
    for h in steps:
        stride = h / h_ref
        k = int(round(stride))
        if abs(stride - k) > 1e-9 * stride:
            raise ConfigInvalid(f"step {h} is not a multiple of the reference step {h_ref}")
        runs = integrate_batch(imm, kind, seeds, span, h, c=c)
        err = 0.0
        for tr, rf in zip(runs, ref):
            j = rf.origin + (np.arange(len(tr)) - tr.origin) * k
            ok = (j >= 0) & (j < len(rf))
            if ok.any():
                err = max(err, float(np.max(np.linalg.norm(tr.x[ok] - rf.x[j[ok]], axis=1))))
        residuals.append(err)
    keep = [(h, r) for h, r in zip(steps, residuals) if r > floor]
    if len(keep) < 2:
        slope, status = None, "floor"
    else:
        lh = np.log([h for h, _ in keep])
        lr = np.log([r for _, r in keep])
        slope = float(np.polyfit(lh, lr, 1)[0])
        status = "ok" if band[0] <= slope <= band[1] else "out-of-range"
    return ConvergenceResult(entry.name, kind, None if c is None else float(c), steps, residuals, slope, status,
                             h_ref, tuple(float(s) for s in span), len(seeds), tuple(band), floor)

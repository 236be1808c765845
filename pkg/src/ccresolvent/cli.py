"""Config-driven experiment runner.

One flat INI file describes one experiment; ``run`` executes it into an
output directory as CSV artifacts plus a JSON manifest, ``validate``
reports config diagnostics without running anything, and
``list-experiments`` enumerates the known kinds.  Artifacts are written
with 17 significant digits so identical configs reproduce byte-identical
CSVs; the manifest digests every file in the output directory and is
written last.
"""

import argparse
import configparser
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .besselz import check_appendix_inequality, check_pointwise_bounds
from .cvcheck import (CVScanSpec, ProductGrid, WarpedMetric,
                      check_assumptions, energy_estimate_check,
                      high_energy_resolvent_check)
from .errors import ConfigError, ToolkitError
from .model import (CrossSectionSpectrum, ModelManifold, RadialGrid,
                    XiRegion, verify_prop_model)
from .report import EstimateReport
from .scanner import (FIT_COLUMNS, MAP_COLUMNS, ZERO_COLUMNS,
                      PotentialProfile, find_resonances,
                      fit_region_boundary, scan_region)
from .wavesim import (DECAY_COLUMNS, CauchyData, TimeCutoff, verify_decay)

OUTPUT_ROOT_ENV = "CCRESOLVENT_OUTPUT_ROOT"

KINDS = ("bessel-bounds", "appendix", "model-norms", "cv-assumptions",
         "cv-energy", "cv-highenergy", "scan", "wave-decay")

# resolved key set per kind: section -> {key: default-as-string}; the
# parser rejects sections and keys outside this schema so typos surface
# as diagnostics instead of silently running on defaults
_COMMON = {"experiment": {"kind": "", "seed": "0"},
           "output": {"dir": ""}}

_MODEL = {"n": "2", "modes": "1.0:1", "alpha0": "1.0"}

_METRIC = {"family": "hyperbolic", "n": "1", "a": "1.0", "r_max": "40.0",
           "i": "1", "j": "1", "amplitude": "0.05"}

_CV = {"lambdas": "4,8,16,32", "s": "0.6", "delta": "0.5",
       "delta0": "0.25", "nr": "257", "ny": "1", "p": "0",
       "envelope_center": "10.0", "envelope_width": "1.0"}

SCHEMAS = {
    "bessel-bounds": {"bessel": {"m_max": "32", "t_min": "-10.0",
                                 "t_max": "3.0", "n_t": "111"}},
    "appendix": {"bessel": {"m_max": "32", "t_min": "-5.0", "t_max": "2.0",
                            "n_t": "101"}},
    "model-norms": {"model": dict(_MODEL),
                    "norms": {"p": "0,1,2", "q": "0", "samples": "5",
                              "j_modes": "16", "grid_nodes": "256",
                              "grid_lo": "-14.0", "grid_hi": "3.0",
                              "im_lo": "2.0", "im_hi": "32.0",
                              "re_offsets": "1e-6,-0.2"}},
    "cv-assumptions": {"metric": dict(_METRIC), "cv": dict(_CV)},
    "cv-energy": {"metric": dict(_METRIC), "cv": dict(_CV)},
    "cv-highenergy": {"metric": dict(_METRIC), "cv": dict(_CV)},
    "scan": {"model": dict(_MODEL),
             "scan": {"potential": "free",
                      "region": "0.78,1.5,1.0,30.0",
                      "density": "60", "critical_margin": "0.0"}},
    "wave-decay": {"model": dict(_MODEL),
                   "wave": {"potential": "free", "grid": "-16,5,2101",
                            "center": "-2.5", "width": "1.0",
                            "omega0": "14.0", "epsilon": "0.02",
                            "t_lo": "5.0", "t_hi": "40.0",
                            "cross_check_time": "5.0", "dt": "5e-4"}},
}


class UsageError(ConfigError):
    """Config or invocation problem: exit code 2, nothing written."""


@dataclass
class ExperimentConfig:
    """Parsed experiment file: kind, seed, resolved key/value sections."""

    kind: str
    seed: int
    out_dir: Path
    sections: dict
    source: str = ""


@dataclass
class RunManifest:
    """Run record: config snapshot, artifact digests, per-check verdicts."""

    kind: str
    seed: int
    version: str
    config: dict
    artifacts: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    partial: bool = False
    notes: list = field(default_factory=list)

    @property
    def status(self):
        ok = self.checks and all(v == "PASS" for v in self.checks.values())
        return "pass" if ok and not self.partial else "fail"

    def to_dict(self):
        return {"kind": self.kind, "seed": self.seed, "version": self.version,
                "config": self.config, "artifacts": self.artifacts,
                "checks": self.checks, "timings": self.timings,
                "partial": self.partial, "notes": self.notes,
                "status": self.status}


# ----------------------------------------------------------------------
# config parsing and validation
# ----------------------------------------------------------------------

def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file {path} does not exist")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise UsageError(f"config file {path} does not parse: {exc}") from exc
    if not parser.has_option("experiment", "kind"):
        raise UsageError("config needs [experiment] kind = <name>")
    kind = parser.get("experiment", "kind").strip()
    if kind not in KINDS:
        raise UsageError(f"unknown experiment kind {kind!r}; known kinds: "
                         + ", ".join(KINDS))

    schema = {**{k: dict(v) for k, v in _COMMON.items()},
              **{k: dict(v) for k, v in SCHEMAS[kind].items()}}
    sections = {name: dict(defaults) for name, defaults in schema.items()}
    for name in parser.sections():
        if name not in schema:
            raise UsageError(f"section [{name}] is not part of the "
                             f"{kind} experiment")
        for key, value in parser.items(name):
            if key not in schema[name]:
                raise UsageError(f"{name}.{key}: unknown key for {kind}")
            sections[name][key] = value.strip()

    sections["experiment"]["kind"] = kind
    try:
        seed = int(sections["experiment"]["seed"])
    except ValueError:
        raise UsageError("experiment.seed: must be an integer")

    out = sections["output"]["dir"] or f"runs/{kind}"
    out_dir = Path(out)
    if not out_dir.is_absolute():
        root = os.environ.get(OUTPUT_ROOT_ENV)
        out_dir = (Path(root) / out_dir) if root else out_dir
    return ExperimentConfig(kind=kind, seed=seed, out_dir=out_dir,
                            sections=sections, source=str(path))


def _get_float(cfg, section, key, diags):
    try:
        return float(cfg.sections[section][key])
    except ValueError:
        diags.append(f"{section}.{key}: not a number "
                     f"({cfg.sections[section][key]!r})")
        return None


def _get_int(cfg, section, key, diags):
    try:
        return int(cfg.sections[section][key])
    except ValueError:
        diags.append(f"{section}.{key}: not an integer "
                     f"({cfg.sections[section][key]!r})")
        return None


def _get_floats(cfg, section, key, diags):
    try:
        return tuple(float(v) for v in cfg.sections[section][key].split(","))
    except ValueError:
        diags.append(f"{section}.{key}: not a comma-separated number list "
                     f"({cfg.sections[section][key]!r})")
        return None


def _validate_model(cfg, diags):
    n = _get_int(cfg, "model", "n", diags)
    if n is not None and n < 1:
        diags.append("model.n: cross-section dimension must be >= 1")
    a0 = _get_float(cfg, "model", "alpha0", diags)
    if a0 is not None and a0 <= 0:
        diags.append("model.alpha0: boundary defining scale must be positive")
    for pair in cfg.sections["model"]["modes"].split(","):
        parts = pair.split(":")
        try:
            mu = float(parts[0])
            mult = int(parts[1]) if len(parts) > 1 else 1
        except (ValueError, IndexError):
            diags.append(f"model.modes: entry {pair!r} is not mu:multiplicity")
            continue
        if mu <= 0 or mult < 1:
            diags.append("model.modes: mu must be positive and "
                         "multiplicity >= 1")


def _validate_metric(cfg, diags):
    fam = cfg.sections["metric"]["family"]
    if fam not in ("hyperbolic", "cylinder", "perturbed"):
        diags.append(f"metric.family: {fam!r} is not one of hyperbolic, "
                     "cylinder, perturbed")
    a = _get_float(cfg, "metric", "a", diags)
    if a is not None and a < 1.0:
        diags.append("metric.a: inner radius must satisfy a >= 1")
    r_max = _get_float(cfg, "metric", "r_max", diags)
    if None not in (a, r_max) and r_max <= a:
        diags.append("metric.r_max: must exceed the inner radius a")
    i = _get_int(cfg, "metric", "i", diags)
    j = _get_int(cfg, "metric", "j", diags)
    if fam == "perturbed" and None not in (i, j) and (i < 1 or j < 0):
        diags.append("metric.i/j: polyhomogeneous indices need i >= 1, j >= 0")


def _validate_cv(cfg, diags):
    lams = _get_floats(cfg, "cv", "lambdas", diags)
    if lams is not None:
        if sorted(lams) != list(lams) or (lams and min(lams) < 1.0):
            diags.append("cv.lambdas: energy grid must be ascending with "
                         "every lambda >= 1")
    s = _get_float(cfg, "cv", "s", diags)
    delta0 = _get_float(cfg, "cv", "delta0", diags)
    if None not in (s, delta0) and not (0.5 < s <= 0.5 + delta0):
        diags.append(f"cv.s: weight exponent s={s:g} outside "
                     f"(1/2, 1/2 + delta0={delta0:g}]")
    delta = _get_float(cfg, "cv", "delta", diags)
    if delta is not None and delta <= 0:
        diags.append("cv.delta: decay rate must be positive")
    nr = _get_int(cfg, "cv", "nr", diags)
    if nr is not None and nr < 3:
        diags.append("cv.nr: radial grid needs at least 3 nodes")
    p = _get_int(cfg, "cv", "p", diags)
    if p is not None and p not in (0, 1):
        diags.append("cv.p: derivative count must be 0 or 1")


def validate_config(cfg: ExperimentConfig):
    """Diagnostics that would make run_experiment refuse the config;
    empty list means the run would be accepted."""
    diags = []
    if cfg.kind not in KINDS:
        diags.append(f"experiment.kind: unknown kind {cfg.kind!r}")
        return diags

    if cfg.kind in ("bessel-bounds", "appendix"):
        m_max = _get_int(cfg, "bessel", "m_max", diags)
        if m_max is not None and m_max < 1:
            diags.append("bessel.m_max: order grid needs m_max >= 1")
        t0 = _get_float(cfg, "bessel", "t_min", diags)
        t1 = _get_float(cfg, "bessel", "t_max", diags)
        if None not in (t0, t1) and t0 >= t1:
            diags.append("bessel.t_min/t_max: need t_min < t_max")
        n_t = _get_int(cfg, "bessel", "n_t", diags)
        if n_t is not None and n_t < 9:
            diags.append("bessel.n_t: refinement needs at least 9 t nodes")

    elif cfg.kind == "model-norms":
        _validate_model(cfg, diags)
        ps = cfg.sections["norms"]["p"].split(",")
        if not all(v.strip() in ("0", "1", "2") for v in ps):
            diags.append("norms.p: derivative orders must come from {0, 1, 2}")
        q = _get_int(cfg, "norms", "q", diags)
        if q is not None and q not in (0, 1):
            diags.append("norms.q: xi-derivative count must be 0 or 1")
        lo = _get_float(cfg, "norms", "im_lo", diags)
        hi = _get_float(cfg, "norms", "im_hi", diags)
        if None not in (lo, hi) and not (1.0 <= lo < hi):
            diags.append("norms.im_lo/im_hi: need 1 <= im_lo < im_hi")
        g0 = _get_float(cfg, "norms", "grid_lo", diags)
        g1 = _get_float(cfg, "norms", "grid_hi", diags)
        if None not in (g0, g1) and (g0 > -10.0 or g1 < 2.0):
            diags.append("norms.grid_lo/grid_hi: radial grid must cover "
                         "the weight support [-10, 2]")

    elif cfg.kind in ("cv-assumptions", "cv-energy", "cv-highenergy"):
        _validate_metric(cfg, diags)
        _validate_cv(cfg, diags)
        if cfg.kind == "cv-energy":
            w = _get_float(cfg, "cv", "envelope_width", diags)
            if w is not None and w <= 0:
                diags.append("cv.envelope_width: must be positive")

    elif cfg.kind == "scan":
        _validate_model(cfg, diags)
        _validate_potential(cfg.sections["scan"]["potential"], "scan", diags)
        region = _get_floats(cfg, "scan", "region", diags)
        n = _get_int(cfg, "model", "n", diags) or 2
        if region is not None:
            if len(region) != 4:
                diags.append("scan.region: needs re_min,re_max,im_min,im_max")
            else:
                re0, re1, im0, im1 = region
                if re0 >= re1 or im0 >= im1:
                    diags.append("scan.region: rectangle is empty")
                if re0 <= n / 2 - 0.25:
                    diags.append("scan.region: re_min must stay inside the "
                                 f"continuation region (> n/2 - 1/4 = "
                                 f"{n / 2 - 0.25:g})")
                if im0 < 1.0:
                    diags.append("scan.region: im_min must be >= 1")
        density = _get_int(cfg, "scan", "density", diags)
        if density is not None and density < 8:
            diags.append("scan.density: needs at least 8 cells per axis")

    elif cfg.kind == "wave-decay":
        _validate_model(cfg, diags)
        _validate_potential(cfg.sections["wave"]["potential"], "wave", diags)
        grid = _get_floats(cfg, "wave", "grid", diags)
        if grid is not None and (len(grid) != 3 or grid[0] >= grid[1]
                                 or int(grid[2]) < 8):
            diags.append("wave.grid: needs lo,hi,n with lo < hi and n >= 8")
        eps = _get_float(cfg, "wave", "epsilon", diags)
        if eps is not None and not (0.0 < eps < 1.0):
            diags.append("wave.epsilon: cutoff onset must sit in (0, 1)")
        w = _get_float(cfg, "wave", "width", diags)
        if w is not None and w <= 0:
            diags.append("wave.width: packet width must be positive")
        t0 = _get_float(cfg, "wave", "t_lo", diags)
        t1 = _get_float(cfg, "wave", "t_hi", diags)
        if None not in (t0, t1) and not (5.0 <= t0 < t1 <= 100.0):
            diags.append("wave.t_lo/t_hi: decay range must sit inside "
                         "[5, 100]")
        if cfg.sections["wave"]["cross_check_time"]:
            _get_float(cfg, "wave", "cross_check_time", diags)
        if cfg.sections["wave"]["dt"]:
            dt = _get_float(cfg, "wave", "dt", diags)
            if dt is not None and dt <= 0:
                diags.append("wave.dt: time step must be positive")

    return diags


def _validate_potential(text, section, diags):
    try:
        _build_potential(text)
    except (ConfigError, ValueError, IndexError) as exc:
        diags.append(f"{section}.potential: {exc}")


# ----------------------------------------------------------------------
# builders shared by the runners
# ----------------------------------------------------------------------

def _build_model(cfg) -> ModelManifold:
    sec = cfg.sections["model"]
    entries = []
    for pair in sec["modes"].split(","):
        parts = pair.split(":")
        entries.append((float(parts[0]),
                        int(parts[1]) if len(parts) > 1 else 1))
    return ModelManifold(n=int(sec["n"]),
                         spectrum=CrossSectionSpectrum.explicit(entries),
                         alpha0=float(sec["alpha0"]))


def _build_metric(cfg) -> WarpedMetric:
    sec = cfg.sections["metric"]
    n, a, r_max = int(sec["n"]), float(sec["a"]), float(sec["r_max"])
    fam = sec["family"]
    if fam == "hyperbolic":
        return WarpedMetric.hyperbolic(n=n, a=a, r_max=r_max)
    if fam == "cylinder":
        return WarpedMetric.cylinder(n=n, a=a, r_max=r_max)
    return WarpedMetric.perturbed_hyperbolic(
        i=int(sec["i"]), j=int(sec["j"]), amplitude=float(sec["amplitude"]),
        n=n, a=a, r_max=r_max)


def _build_cv_spec(cfg) -> CVScanSpec:
    sec = cfg.sections["cv"]
    return CVScanSpec(lambdas=tuple(float(v) for v in
                                    sec["lambdas"].split(",")),
                      s=float(sec["s"]), delta=float(sec["delta"]),
                      delta0=float(sec["delta0"]))


def _build_potential(text) -> PotentialProfile:
    name, _, args = text.partition(":")
    vals = [float(v) for v in args.split(",")] if args else []
    name = name.strip()
    if name == "free":
        return PotentialProfile.free()
    if name == "square-well":
        depth, lo, hi = vals
        return PotentialProfile.square_well(depth, lo, hi)
    if name == "gaussian-bump":
        amp, center, width = vals
        return PotentialProfile.gaussian_bump(amp, center, width)
    if name == "double-bump":
        amp, c1, c2, width = vals
        return PotentialProfile.double_bump(amplitude=amp, centers=(c1, c2),
                                            width=width)
    raise ConfigError(f"unknown potential {name!r}; known: free, "
                      "square-well:depth,lo,hi, gaussian-bump:amp,center,"
                      "width, double-bump:amp,c1,c2,width")


def _bessel_grids(cfg):
    sec = cfg.sections["bessel"]
    ks = [1j * m for m in range(1, int(sec["m_max"]) + 1)]
    ts = np.linspace(float(sec["t_min"]), float(sec["t_max"]),
                     int(sec["n_t"]))
    return ks, ts


# ----------------------------------------------------------------------
# artifact writing
# ----------------------------------------------------------------------

def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "nan" if math.isnan(v) else f"{v:.17g}"
    return str(value)


def _write_csv(path, columns, rows, notes=()):
    with open(path, "w", newline="") as fh:
        for note in notes:
            fh.write(f"# {note}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_report(out_dir, report: EstimateReport, artifacts, checks):
    """One data CSV plus one summary CSV per EstimateReport."""
    stem = report.check_id
    data = out_dir / f"{stem}.csv"
    _write_csv(data, report.columns, report.rows, report.notes)
    artifacts.append(data)
    summary = out_dir / f"{stem}_summary.csv"
    _write_csv(summary,
               ("bound_id",) + EstimateReport.SUMMARY_COLUMNS + ("note",),
               [(s.bound_id, s.sup_ratio, s.refinement_delta, s.passed,
                 s.note) for s in report.summaries],
               report.notes)
    artifacts.append(summary)
    for s in report.summaries:
        checks[s.bound_id] = "PASS" if s.passed else "FAIL"


# ----------------------------------------------------------------------
# experiment runners
# ----------------------------------------------------------------------

def _run_bessel_bounds(cfg, out_dir, artifacts, checks):
    ks, ts = _bessel_grids(cfg)
    report = check_pointwise_bounds(ks, ts)
    _write_report(out_dir, report, artifacts, checks)


def _run_appendix(cfg, out_dir, artifacts, checks):
    ks, ts = _bessel_grids(cfg)
    report = check_appendix_inequality(ks, ts)
    _write_report(out_dir, report, artifacts, checks)


def _run_model_norms(cfg, out_dir, artifacts, checks):
    sec = cfg.sections["norms"]
    model = _build_model(cfg)
    nodes = np.linspace(float(sec["grid_lo"]), float(sec["grid_hi"]),
                        int(sec["grid_nodes"]))
    h = nodes[1] - nodes[0]
    weights = np.full(nodes.size, h)
    weights[0] = weights[-1] = h / 2
    grid = RadialGrid(nodes, weights)
    ps = tuple(int(v) for v in sec["p"].split(","))
    q = int(sec["q"])
    im_lo, im_hi = float(sec["im_lo"]), float(sec["im_hi"])
    half = model.n / 2.0
    for tag, off in (("right", float(sec["re_offsets"].split(",")[0])),
                     ("left", float(sec["re_offsets"].split(",")[1]))):
        re_line = half + off
        region = XiRegion(re_line, re_line, im_lo, im_hi)
        report = verify_prop_model(model, region, ps, q, grid,
                                   J=int(sec["j_modes"]),
                                   samples=int(sec["samples"]))
        report.check_id = f"norm_law_{tag}"
        _write_report(out_dir, report, artifacts,
                      {})  # summaries renamed below to carry the line tag
        for s in report.summaries:
            checks[f"{tag}_{s.bound_id}"] = "PASS" if s.passed else "FAIL"


def _run_cv_assumptions(cfg, out_dir, artifacts, checks):
    metric = _build_metric(cfg)
    grid = ProductGrid.for_metric(metric, nr=int(cfg.sections["cv"]["nr"]),
                                  ny=int(cfg.sections["cv"]["ny"]))
    report = check_assumptions(metric, grid, _build_cv_spec(cfg))
    _write_report(out_dir, report, artifacts, checks)


def _run_cv_energy(cfg, out_dir, artifacts, checks):
    metric = _build_metric(cfg)
    sec = cfg.sections["cv"]
    center, width = float(sec["envelope_center"]), float(sec["envelope_width"])

    def envelope(r):
        return np.exp(-(((r - center) / width) ** 2))

    report = energy_estimate_check(metric, envelope, _build_cv_spec(cfg))
    _write_report(out_dir, report, artifacts, checks)


def _run_cv_highenergy(cfg, out_dir, artifacts, checks):
    metric = _build_metric(cfg)
    report = high_energy_resolvent_check(metric, _build_cv_spec(cfg),
                                         p=int(cfg.sections["cv"]["p"]))
    _write_report(out_dir, report, artifacts, checks)


def _run_scan(cfg, out_dir, artifacts, checks):
    sec = cfg.sections["scan"]
    model = _build_model(cfg)
    potential = _build_potential(sec["potential"])
    re0, re1, im0, im1 = (float(v) for v in sec["region"].split(","))
    rmap = scan_region(model, potential, XiRegion(re0, re1, im0, im1),
                       density=int(sec["density"]),
                       critical_margin=float(sec["critical_margin"]))
    zeros = find_resonances(rmap)

    map_path = out_dir / "scan_map.csv"
    _write_csv(map_path, MAP_COLUMNS, rmap.rows(), rmap.notes)
    artifacts.append(map_path)
    zero_path = out_dir / "scan_zeros.csv"
    _write_csv(zero_path, ZERO_COLUMNS, rmap.zero_rows(), rmap.notes)
    artifacts.append(zero_path)
    checks["candidates_resolved"] = "PASS" if not rmap.unresolved else "FAIL"

    if zeros:
        fit = fit_region_boundary(zeros, model.n)
        rmap.fit = fit
        fit_path = out_dir / "scan_fit.csv"
        _write_csv(fit_path, FIT_COLUMNS,
                   [(fit.C1, fit.C2, fit.residual)], rmap.notes)
        artifacts.append(fit_path)
        checks["boundary_fit_residual"] = ("PASS" if fit.residual < 0.20
                                           else "FAIL")


def _run_wave_decay(cfg, out_dir, artifacts, checks):
    sec = cfg.sections["wave"]
    model = _build_model(cfg)
    potential = _build_potential(sec["potential"])
    lo, hi, npts = (float(v) for v in sec["grid"].split(","))
    r = np.linspace(lo, hi, int(npts))
    data = CauchyData.gaussian_packet(r, center=float(sec["center"]),
                                      width=float(sec["width"]),
                                      omega0=float(sec["omega0"]))
    cross = (float(sec["cross_check_time"])
             if sec["cross_check_time"] else None)
    dt = float(sec["dt"]) if sec["dt"] else None
    report = verify_decay(model, potential, data,
                          t_range=(float(sec["t_lo"]), float(sec["t_hi"])),
                          cutoff=TimeCutoff(float(sec["epsilon"])),
                          cross_check_time=cross, dt=dt)
    decay_path = out_dir / "decay.csv"
    notes = report.notes
    if report.cross_check is not None:
        notes = notes + (f"two-method cross-check residual "
                         f"{report.cross_check:.6g} at t = {cross:g}",)
    _write_csv(decay_path, DECAY_COLUMNS, report.rows(), notes)
    artifacts.append(decay_path)
    checks["decay_exponents"] = "PASS" if report.passed else "FAIL"
    if report.cross_check is not None:
        checks["two_method_cross_check"] = ("PASS"
                                            if report.cross_check <= 1e-3
                                            else "FAIL")


_RUNNERS = {
    "bessel-bounds": _run_bessel_bounds,
    "appendix": _run_appendix,
    "model-norms": _run_model_norms,
    "cv-assumptions": _run_cv_assumptions,
    "cv-energy": _run_cv_energy,
    "cv-highenergy": _run_cv_highenergy,
    "scan": _run_scan,
    "wave-decay": _run_wave_decay,
}


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run_experiment(config: ExperimentConfig) -> RunManifest:
    """Execute one experiment; all CSVs first, the manifest last."""
    diags = validate_config(config)
    if diags:
        raise UsageError("config rejected: " + "; ".join(diags))

    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(kind=config.kind, seed=config.seed,
                           version=__version__, config=config.sections)
    artifacts = []
    start = time.monotonic()
    try:
        _RUNNERS[config.kind](config, out_dir, artifacts, manifest.checks)
    except ToolkitError as exc:
        manifest.partial = True
        manifest.checks.setdefault(config.kind, "FAIL")
        manifest.notes.append(f"run aborted: {exc}")
    manifest.timings["total_seconds"] = time.monotonic() - start

    # the manifest digests every file in the output directory, not just
    # the ones this run wrote
    written = {p.name for p in artifacts}
    for path in sorted(out_dir.iterdir()):
        if path.name == "manifest.json" or not path.is_file():
            continue
        manifest.artifacts.append({"path": path.name,
                                   "sha256": _sha256(path),
                                   "bytes": path.stat().st_size,
                                   "from_this_run": path.name in written})
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ccresolvent",
        description="run config-driven resolvent/wave experiments")
    sub = parser.add_subparsers(dest="verb")
    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("config")
    val_p = sub.add_parser("validate", help="report config diagnostics")
    val_p.add_argument("config")
    sub.add_parser("list-experiments", help="print the known kinds")

    args = parser.parse_args(argv)
    if args.verb is None:
        parser.print_usage(sys.stderr)
        return 2

    if args.verb == "list-experiments":
        for kind in KINDS:
            print(kind)
        return 0

    try:
        cfg = parse_config(args.config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.verb == "validate":
        diags = validate_config(cfg)
        for d in diags:
            print(d)
        return 2 if diags else 0

    try:
        manifest = run_experiment(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for check, verdict in sorted(manifest.checks.items()):
        print(f"[{verdict}] {check}")
    print(f"manifest: {cfg.out_dir / 'manifest.json'}")
    return 0 if manifest.status == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())

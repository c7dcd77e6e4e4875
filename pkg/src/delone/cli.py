"""Command-line front end: ``generate``, ``analyze`` and ``report``.

Exit codes: 0 on success, 2 for usage or input errors, 3 when ``analyze``
could not complete a single analysis.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .densities import CubeFamily, default_radius_grid, lower_density, lower_reduced_density, weight_estimate
from .errors import (BoundaryContaminationError, DeloneError, EmptyRegionError, InsufficientWindowError,
                     SchemaError, UndefinedRadiusError)
from .generators import GeneratorSpec, generate
from .patterns import patch_classes
from .pointset import TOL_BOUNDARY, format_sample, load_sample, packing_radius, safe_covering_radius, flc_census
from .properties import consistency_report, lemma_rip_check, lr_constant, rp_constant
from .report import SCHEMA_VERSION, comparison_table, dumps, jsonable, load_report, table_csv, table_text
from .set_harness import builtin_neg_copies, cube_limit, gap_type_frequencies, pattern_frequency
from .voronoi import set_distortion, uniformity_estimate

log = logging.getLogger("delone")

EXIT_OK, EXIT_USAGE, EXIT_NOTHING = 0, 2, 3

ANALYSES = ("radii", "flc", "densities", "weights", "voronoi", "uniformity", "lr", "rp",
            "lemma_rip", "set_limits", "frequencies", "consistency")
PREREQUISITES = {"lemma_rip": ("weights",), "consistency": ("lr", "rp", "weights", "uniformity")}
WINDOW_ERRORS = (InsufficientWindowError, BoundaryContaminationError, EmptyRegionError, UndefinedRadiusError)


@dataclasses.dataclass
class AnalysisConfig:
    input: str = None
    generator: dict = None
    radius_grid: list = None
    cube_ladder: object = None  # list of sides or {"base", "factor", "count"}
    placements: list = None
    tol_patch: float = None
    tol_boundary: float = TOL_BOUNDARY
    analyses: list = None
    workers: int = 1

    def resolved_analyses(self):
        wanted = list(self.analyses or ANALYSES)
        unknown = [a for a in wanted if a not in ANALYSES]
        if unknown:
            raise ValueError(f"unknown analyses: {', '.join(unknown)}")
        stack = list(wanted)
        while stack:
            for dep in PREREQUISITES.get(stack.pop(), ()):
                if dep not in wanted:
                    wanted.append(dep)
                    stack.append(dep)
        return [a for a in ANALYSES if a in wanted]

    def echo(self):
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}


# -- argument parsing -------------------------------------------------------------

def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ladder(text):
    if "=" in text:
        spec = dict(part.split("=", 1) for part in text.split(","))
        return {"base": float(spec["base"]), "factor": float(spec["factor"]), "count": int(spec["count"])}
    return _floats(text)


def _placements(text):
    if "," not in text:
        k = int(text)
        if k < 1:
            raise argparse.ArgumentTypeError("placement count must be >= 1")
        return [0.0] if k == 1 else list(np.linspace(-0.25, 0.25, k))
    return _floats(text)


def _matrix(text):
    return [_floats(row) for row in text.split(";")]


def _common(p):
    p.add_argument("--tol-patch", type=float, help="patch equality tolerance (default 1e-6 * r_pack)")
    p.add_argument("--tol-boundary", type=float, help="closed-ball boundary tolerance (default 1e-9)")
    p.add_argument("--radius-grid", type=_floats, help="comma-separated pattern radii")
    p.add_argument("--cube-ladder", type=_ladder,
                   help="comma-separated cube sides, or base=B,factor=F,count=K")
    p.add_argument("--placements", type=_placements,
                   help="placements per axis (count) or comma-separated side fractions")
    p.add_argument("--workers", type=int, help="worker processes for density sweeps")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from reports")
    p.add_argument("-o", "--output", help="output file (generate, report) or directory (analyze)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="delone", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a generated sample as a DELONE v1 file")
    kinds = gen.add_subparsers(dest="kind", required=True)
    g = kinds.add_parser("lattice")
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--side", type=float, default=50.0)
    g.add_argument("--origin", type=float, default=0.0)
    g.add_argument("--basis", type=_matrix, help="rows separated by ';', entries by ','")
    g = kinds.add_parser("fibonacci")
    g.add_argument("--depth", type=int, required=True)
    g.add_argument("--origin", type=float, default=0.0)
    g = kinds.add_parser("sturmian")
    g.add_argument("--quotients", type=lambda t: [int(v) for v in t.split(",")], required=True)
    g.add_argument("--length", type=int, required=True)
    g.add_argument("--origin", type=float, default=0.0)
    g = kinds.add_parser("product")
    g.add_argument("--x", type=json.loads, required=True, help="JSON generator spec of the first factor")
    g.add_argument("--y", type=json.loads, required=True, help="JSON generator spec of the second factor")
    g = kinds.add_parser("perturbed")
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--side", type=float, default=30.0)
    g.add_argument("--alphabet", type=_matrix, required=True, help="displacements, e.g. '0,0;0.1,0.1'")
    g.add_argument("--rule", default="checkerboard")
    for p in kinds.choices.values():
        _common(p)

    ana = sub.add_parser("analyze", help="run analyses on a DELONE v1 file")
    ana.add_argument("input", nargs="?", help="DELONE v1 file")
    ana.add_argument("--generator", type=json.loads, help="JSON generator spec instead of a file")
    ana.add_argument("--config", help="JSON configuration; flags override its values")
    ana.add_argument("--analyses", type=lambda t: [a.strip() for a in t.split(",") if a.strip()],
                     help=f"subset of {','.join(ANALYSES)}")
    _common(ana)

    rep = sub.add_parser("report", help="compare analysis reports side by side")
    rep.add_argument("reports", nargs="+")
    _common(rep)
    return parser


# -- generate ---------------------------------------------------------------------

def _spec_from_args(args):
    if args.kind == "lattice":
        basis = args.basis if args.basis is not None else np.eye(args.dim).tolist()
        lo = [args.origin] * args.dim
        hi = [args.origin + args.side] * args.dim
        return GeneratorSpec("lattice", {"basis": basis, "window": [lo, hi]})
    if args.kind == "fibonacci":
        return GeneratorSpec("fibonacci_chain", {"depth": args.depth, "origin": args.origin})
    if args.kind == "sturmian":
        return GeneratorSpec("sturmian_chain", {"partial_quotients": args.quotients,
                                                "length": args.length, "origin": args.origin})
    if args.kind == "product":
        return GeneratorSpec("product_chain_2d", {"spec_x": args.x, "spec_y": args.y})
    return GeneratorSpec("perturbed_lattice", {"displacement_alphabet": args.alphabet, "rule": args.rule,
                                               "window": [[0.0] * args.dim, [args.side] * args.dim]})


def cmd_generate(args):
    spec = _spec_from_args(args)
    s = generate(spec)
    comment = "generator " + json.dumps({"kind": spec.kind, "params": spec.params}, sort_keys=True)
    text = format_sample(s, comment)
    if args.output:
        Path(args.output).write_text(text)
        log.info("wrote %d points to %s", len(s), args.output)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- analyze ----------------------------------------------------------------------

def _family(s, cfg):
    offsets = tuple(cfg.placements) if cfg.placements else (-0.25, 0.0, 0.25)
    ladder = cfg.cube_ladder
    if isinstance(ladder, dict):
        sides = [ladder["base"] * ladder["factor"] ** k for k in range(int(ladder["count"]))]
        return CubeFamily.for_window(s.window, sides=sides, offsets=offsets)
    if ladder:
        return CubeFamily.for_window(s.window, sides=list(ladder), offsets=offsets)
    return CubeFamily.for_window(s.window, offsets=offsets)


class _Run:
    """State shared by the analyses of one ``analyze`` call."""

    def __init__(self, s, cfg):
        self.s, self.cfg = s, cfg
        self.grid = list(cfg.radius_grid) if cfg.radius_grid else default_radius_grid(s.window)
        self.results, self.skipped, self.tables = {}, [], {}
        self.parts = {}
        self._fam = None

    @property
    def fam(self):
        if self._fam is None:
            self._fam = _family(self.s, self.cfg)
        return self._fam

    def need_grid(self, floor=None):
        grid = [r for r in self.grid if floor is None or r >= floor]
        if not grid:
            raise InsufficientWindowError("radius grid is empty for this window")
        return grid

    def kw(self):
        return {"tol_patch": self.cfg.tol_patch, "tol_boundary": self.cfg.tol_boundary}


def _pattern_dict(p):
    return {"center": list(p.center), "radius": p.radius}


def _a_radii(run):
    s = run.s
    run.results["pointset_core.packing_radius"] = {"value": packing_radius(s)}
    r, region = safe_covering_radius(s)
    run.results["pointset_core.covering_radius"] = {"value": r, "region": jsonable(region)}


def _a_flc(run):
    grid = run.need_grid()
    counts = [flc_census(run.s, R, run.cfg.tol_patch) for R in grid]
    run.results["pointset_core.flc_census"] = {"radius_grid": grid, "classes": counts}


def _a_densities(run):
    grid = run.need_grid(1.0)
    plain, reduced = [], []
    for R in grid:
        for k, p in enumerate(patch_classes(run.s, R, None, **run.kw())):
            nu = lower_density(run.s, p, run.fam, **run.kw())
            nup = lower_reduced_density(run.s, p, run.fam, **run.kw())
            plain.append({"pattern": _pattern_dict(p), "estimate": nu.estimate,
                          "certified": nu.estimate_certified})
            reduced.append({"pattern": _pattern_dict(p), "estimate": nup.estimate,
                            "certified": nup.estimate_certified, "method": nup.method})
            run.tables[f"density_R{R:g}_class{k}.csv"] = nu.to_csv()
            run.tables[f"reduced_density_R{R:g}_class{k}.csv"] = nup.to_csv()
    run.results["densities.lower_density"] = plain
    run.results["densities.lower_reduced_density"] = reduced


def _a_weights(run):
    grid = run.need_grid(1.0)
    for which in ("PW", "PQ"):
        est = weight_estimate(run.s, run.fam, grid, which, workers=run.cfg.workers, **run.kw())
        run.parts[which] = est
        run.results[f"densities.weight_estimate.{which}"] = {
            "value": est.value, "argmin": _pattern_dict(est.argmin), "certified": est.certified,
            "unresolved_patterns": est.unresolved, "raw_minimum": est.raw_value,
            "classes_per_radius": {f"{r:g}": n for r, n in est.classes_per_radius.items()},
        }


def _a_voronoi(run):
    rep = set_distortion(run.s)
    r_cov, _ = safe_covering_radius(run.s)
    run.results["voronoi.set_distortion"] = {
        "value": rep.value, "interior_sites": int(len(rep.sites)), "excluded_sites": rep.excluded,
        "ceiling": r_cov / packing_radius(run.s),
    }


def _a_uniformity(run):
    est = uniformity_estimate(run.s, run.need_grid(), **run.kw())
    run.parts["U"] = est
    run.results["voronoi.uniformity_estimate"] = {
        "value": est.value, "argmax": _pattern_dict(est.argmax),
        "per_radius": {f"{r:g}": v for r, v in est.per_radius.items()}, "excluded": est.excluded,
    }


def _constant(run, name, fn):
    est = fn(run.s, run.need_grid(), **run.kw())
    run.parts[name.upper()] = est
    reduce = max if name == "lr" else min
    run.results[f"properties.{name}_constant"] = {
        "value": est.value, "extremal_pattern": _pattern_dict(est.argext),
        "per_radius": {f"{r:g}": v for r, v in est.per_radius(reduce).items()}, "excluded": est.excluded,
    }
    lines = ["radius,center,value"] + [f"{R!r},{' '.join(repr(c) for c in p.center)},{v!r}"
                                       for R, p, v in est.rows]
    run.tables[f"{name}_breakdown.csv"] = "\n".join(lines) + "\n"


def _a_lemma(run):
    grid = [r for r in run.need_grid() if r >= 3]
    if not grid:
        raise InsufficientWindowError("radius grid has no radius >= 3")
    w = run.parts["PW"].value
    rows = []
    for R in grid:
        for p in patch_classes(run.s, R, None, **run.kw()):
            try:
                chk = lemma_rip_check(run.s, p, w, **run.kw())
            except InsufficientWindowError:
                continue
            rows.append({"pattern": _pattern_dict(p), "measured": chk.measured, "bound": chk.bound,
                         "passed": chk.passed})
    if not rows:
        raise InsufficientWindowError("no locater set with interior cells at radius >= 3")
    run.results["properties.lemma_rip_check"] = {"w": w, "rows": rows,
                                                 "all_passed": all(r["passed"] for r in rows)}


def _limit_patterns(run):
    R = run.need_grid(1.0)[0]
    return patch_classes(run.s, R, None, **run.kw())


def _a_set_limits(run):
    out = []
    for p in _limit_patterns(run):
        est = cube_limit(builtin_neg_copies(p), run.s, run.fam)
        out.append({"pattern": _pattern_dict(p), "mu": est.mu, "cauchy": est.cauchy})
    run.results["set_harness.cube_limit"] = out


def _a_frequencies(run):
    out = []
    for p in _limit_patterns(run):
        est = pattern_frequency(run.s, p, run.fam)
        out.append({"pattern": _pattern_dict(p), "frequency": est.mu, "cauchy": est.cauchy})
    run.results["set_harness.pattern_frequency"] = out
    if run.s.dim == 1:
        gaps = gap_type_frequencies(run.s, run.fam)
        keys = sorted(k for k in gaps if k is not None) + ([None] if None in gaps else [])
        run.results["set_harness.gap_type_frequencies"] = {
            ("beyond_radius" if k is None else f"{k:g}"): gaps[k] for k in keys}


def _a_consistency(run):
    v = consistency_report(run.s, run.need_grid(), run.fam, parts=dict(run.parts), **run.kw())
    run.results["properties.consistency_report"] = {
        "label": v.note, "estimates": v.estimates, "rows": jsonable(v.rows), "absent": v.absent}


RUNNERS = {
    "radii": _a_radii, "flc": _a_flc, "densities": _a_densities, "weights": _a_weights,
    "voronoi": _a_voronoi, "uniformity": _a_uniformity,
    "lr": lambda run: _constant(run, "lr", lr_constant),
    "rp": lambda run: _constant(run, "rp", rp_constant),
    "lemma_rip": _a_lemma, "set_limits": _a_set_limits, "frequencies": _a_frequencies,
    "consistency": _a_consistency,
}


def _load_config(args):
    cfg = AnalysisConfig()
    if args.config:
        data = json.loads(Path(args.config).read_text())
        names = {f.name for f in dataclasses.fields(AnalysisConfig)}
        unknown = set(data) - names - {"output"}
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for k, v in data.items():
            if k in names:
                setattr(cfg, k, v)
    overrides = {"input": args.input, "generator": args.generator, "radius_grid": args.radius_grid,
                 "cube_ladder": args.cube_ladder, "placements": args.placements,
                 "tol_patch": args.tol_patch, "tol_boundary": args.tol_boundary,
                 "analyses": args.analyses, "workers": args.workers}
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    return cfg


def _sample_info(s, cfg):
    digest = hashlib.sha256(np.ascontiguousarray(s.points).tobytes()).hexdigest()
    return {"label": s.label, "source": cfg.input if cfg.input else cfg.generator, "dim": s.dim,
            "n_points": len(s), "window": jsonable(s.window), "points_sha256": digest}


def run_analysis(s, cfg, timestamp=True):
    """Report dictionary and CSV tables for ``s`` under ``cfg``."""
    run = _Run(s, cfg)
    for name in cfg.resolved_analyses():
        try:
            RUNNERS[name](run)
        except WINDOW_ERRORS as exc:
            run.skipped.append({"analysis": name, "reason": f"insufficient window: {exc}"})
        except DeloneError as exc:
            run.skipped.append({"analysis": name, "reason": f"{type(exc).__name__}: {exc}"})
        except KeyError as exc:  # a prerequisite was skipped
            run.skipped.append({"analysis": name, "reason": f"prerequisite unavailable: {exc}"})
    report = {"schema_version": SCHEMA_VERSION, "sample": _sample_info(s, cfg),
              "config_echo": jsonable(cfg.echo()), "results": jsonable(run.results),
              "skipped": run.skipped}
    if timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    return report, run.tables


def cmd_analyze(args):
    cfg = _load_config(args)
    if cfg.input:
        s = load_sample(cfg.input)
    elif cfg.generator:
        spec = cfg.generator
        s = generate(GeneratorSpec(spec["kind"], spec.get("params", {}), spec.get("seed", 0)))
    else:
        raise ValueError("analyze needs an input file or --generator")
    report, tables = run_analysis(s, cfg, timestamp=not args.no_timestamp)
    out = Path(args.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps(report) + "\n")
    for name, text in sorted(tables.items()):
        (out / name).write_text(text)
    for item in report["skipped"]:
        log.warning("skipped %s: %s", item["analysis"], item["reason"])
    print(out / "report.json")
    return EXIT_OK if report["results"] else EXIT_NOTHING


# -- report -----------------------------------------------------------------------

def cmd_report(args):
    reports = [load_report(p) for p in args.reports]
    header, rows = comparison_table(reports)
    sys.stdout.write(table_text(header, rows))
    if args.output:
        Path(args.output).write_text(table_csv(header, rows))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "analyze": cmd_analyze, "report": cmd_report}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DeloneError, SchemaError, ValueError, KeyError, OSError) as exc:
        print(f"delone: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

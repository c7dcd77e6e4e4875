"""Voronoi cells of samples and locater sets, cell distortion and uniformity.

A cell is only reported when the window certifies it. A site at distance
``d`` from the window boundary gets a final cell once the computed cell
has outradius at most ``d / 2``: any unseen point lies at least ``d``
away, and its bisector cannot cut a cell that small. In one dimension a
site is certified exactly when it has a neighbour on both sides.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._cells import bisector_halfspaces
from .errors import BoundaryContaminationError, EmptyRegionError, InsufficientWindowError, ValidationError
from .patterns import BallPattern, locater_set, patch_classes
from .pointset import TOL_BOUNDARY, PointSample, _certified_cell, shrink

CERT_TOL = 1e-9


@dataclass
class VoronoiCell:
    site: np.ndarray
    normals: np.ndarray  # unit normals of the bisectors that touch the cell
    offsets: np.ndarray
    vertices: np.ndarray
    r_in: float
    r_out: float
    bounded: bool = True

    @property
    def distortion(self):
        return self.r_out / self.r_in

    def to_dict(self):
        return {
            "site": [float(v) for v in self.site],
            "vertices": [[float(v) for v in row] for row in self.vertices],
            "r_in": float(self.r_in),
            "r_out": float(self.r_out),
        }


def dump_cells(cells):
    """JSON text for a list of cells."""
    return json.dumps([c.to_dict() for c in cells], indent=1)


def _boundary_distance(window, x):
    return float(min(np.min(x - window.lo_array), np.min(window.hi_array - x)))


def _cell_1d(g, i):
    x = g.points[:, 0]
    if i == 0 or i == len(g) - 1:
        raise BoundaryContaminationError(f"site {x[i]} lacks a neighbour on one side")
    left, right = x[i] - x[i - 1], x[i + 1] - x[i]
    verts = np.array([[x[i] - left / 2], [x[i] + right / 2]])
    normals = np.array([[-1.0], [1.0]])
    offsets = np.array([-(x[i] - left / 2), x[i] + right / 2])
    return VoronoiCell(g.points[i].copy(), normals, offsets, verts,
                       min(left, right) / 2, max(left, right) / 2)


def _cell_index(g, i):
    if g.dim == 1:
        return _cell_1d(g, i)
    site = g.points[i]
    d = _boundary_distance(g.window, site)
    nn = float(g.nn_distances[i])
    if d < nn - CERT_TOL:
        raise BoundaryContaminationError(f"site {tuple(site)} is too close to the window boundary")
    lo, hi = site - d, site + d
    verts = _certified_cell(g, i, lo, hi, 2.0 * nn)
    if len(verts) == 0:
        raise BoundaryContaminationError(f"empty cell at {tuple(site)}")
    r_out = float(np.max(np.linalg.norm(verts - site, axis=1)))
    if 2.0 * r_out > d + CERT_TOL:
        raise BoundaryContaminationError(
            f"site {tuple(site)}: cell outradius {r_out:.6g} needs distance {2 * r_out:.6g} "
            f"to the boundary, have {d:.6g}")
    _, nb = g.index.ball(site[None, :], 2.0 * r_out * (1 + 1e-9) + CERT_TOL)
    nb = nb[nb != i]
    normals, offsets = bisector_halfspaces(site, g.points[nb])
    norms = np.linalg.norm(normals, axis=1)
    normals, offsets = normals / norms[:, None], offsets / norms
    slack = offsets[:, None] - normals @ verts.T
    # a facet needs at least N vertices on its bisector; corner-only contacts are dropped
    touching = np.sum(np.abs(slack) <= 1e-7 * max(1.0, r_out), axis=1) >= g.dim
    r_in = float(np.min(offsets - normals @ site))
    return VoronoiCell(site.copy(), normals[touching], offsets[touching], verts, r_in, r_out)


def voronoi_cell(g, x):
    """Certified Voronoi cell of the sample point ``x`` (a point or an index)."""
    if isinstance(x, (int, np.integer)):
        i = int(x)
    else:
        i = g.find(np.asarray(x, dtype=float))
        if i is None:
            raise ValidationError(f"{tuple(np.ravel(x))} is not a point of the sample")
    if len(g) < 2:
        raise InsufficientWindowError("a Voronoi cell needs at least two sites")
    return _cell_index(g, i)


@dataclass
class DistortionReport:
    sites: np.ndarray  # indices of certified interior sites
    distortions: np.ndarray
    r_in: np.ndarray
    r_out: np.ndarray
    excluded: int

    @property
    def value(self):
        return float(self.distortions.max())

    @property
    def argmax(self):
        return int(self.sites[int(np.argmax(self.distortions))])


def _interior_cells_1d(g):
    x = g.points[:, 0]
    gaps = np.diff(x)
    left, right = gaps[:-1], gaps[1:]
    sites = np.arange(1, len(x) - 1)
    return sites, np.minimum(left, right) / 2, np.maximum(left, right) / 2


def set_distortion(g):
    """Distortion of every certified cell and their maximum."""
    if len(g) < 2:
        raise InsufficientWindowError("a Voronoi diagram needs at least two sites")
    if g.dim == 1:
        sites, r_in, r_out = _interior_cells_1d(g)
    else:
        d = np.min(np.minimum(g.points - g.window.lo_array, g.window.hi_array - g.points), axis=1)
        cand = np.nonzero(d >= g.nn_distances - CERT_TOL)[0]
        sites, r_in, r_out = [], [], []
        for i in cand:
            try:
                c = _cell_index(g, int(i))
            except BoundaryContaminationError:
                continue
            sites.append(int(i))
            r_in.append(c.r_in)
            r_out.append(c.r_out)
        sites, r_in, r_out = np.array(sites, dtype=np.int64), np.array(r_in), np.array(r_out)
    if len(sites) == 0:
        raise InsufficientWindowError("no interior Voronoi cells in the window")
    return DistortionReport(sites, r_out / r_in, r_in, r_out, len(g) - len(sites))


def locater_sample(s, pattern, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """Locater set of ``pattern`` over the whole window, as a sample in its own right.

    Its window is the sample window shrunk by the pattern radius, the region
    in which the locater set is known completely. Cached on ``s``.
    """
    key = ("locater", pattern.index, float(pattern.radius),
           None if tol_patch is None else float(tol_patch), float(tol_boundary))
    if key not in s._cache:
        loc = locater_set(s, pattern, s.window, tol_patch, tol_boundary)
        try:
            win = shrink(s.window, pattern.radius)
        except EmptyRegionError:
            raise InsufficientWindowError("window too small for the pattern radius") from None
        s._cache[key] = PointSample(loc.members, win, f"L[{s.label}]", validate=False)
    return s._cache[key]


def pattern_grid(s, radius_grid, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """Class representatives for each radius: ``[(R, [BallPattern, ...]), ...]``."""
    return [(float(R), patch_classes(s, R, s.window, tol_patch, tol_boundary)) for R in radius_grid]


@dataclass
class UniformityEstimate:
    value: float
    argmax: BallPattern
    radius_grid: list
    per_radius: dict  # R -> max distortion among classes with interior cells
    excluded: int  # locater sets without a certified interior cell
    evaluated: int = 0
    rows: list = field(default_factory=list, repr=False)


def uniformity_estimate(s, radius_grid, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """Largest locater-set distortion over the patch classes of the grid.

    A finite grid only sees part of the supremum, so this is a lower bound.
    """
    best, arg, per, excluded, rows = -np.inf, None, {}, 0, []
    for R, reps in pattern_grid(s, radius_grid, tol_patch, tol_boundary):
        for p in reps:
            try:
                g = locater_sample(s, p, tol_patch, tol_boundary)
                rep = set_distortion(g)
            except InsufficientWindowError:
                excluded += 1
                continue
            rows.append((R, p, rep.value))
            per[R] = max(per.get(R, -np.inf), rep.value)
            if rep.value > best:
                best, arg = rep.value, p
    if arg is None:
        raise InsufficientWindowError("no locater set has a certified interior cell")
    return UniformityEstimate(float(best), arg, [float(r) for r in radius_grid], per,
                              excluded, len(rows), rows)

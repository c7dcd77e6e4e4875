"""Finite windows of Delone sets.

A :class:`PointSample` is an immutable, lexicographically ordered point
array together with the box it was observed in. Everything downstream only
trusts data that the window fully determines: balls ``B_R(x)`` that fit in
the window, regions shrunk away from its boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels
from ._cells import bisector_halfspaces, polytope_cell, polytope_volume
from .errors import (
    BoundaryContaminationError,
    DuplicatePointError,
    EmptyRegionError,
    FormatError,
    InsufficientWindowError,
    UndefinedRadiusError,
    ValidationError,
)

log = logging.getLogger(__name__)

MERGE_TOL = 1e-9
TOL_BOUNDARY = 1e-9
PATCH_TOL_FACTOR = 1e-6


@dataclass(frozen=True, eq=False)
class BoxRegion:
    """Axis-parallel box ``[lo, hi]``.

    ``open_hi`` marks upper faces that are excluded from the box; it is only
    used to split a box into two disjoint halves whose union is the box.
    """

    lo: tuple
    hi: tuple
    open_hi: tuple = None
    _base: tuple = field(default=None, repr=False)

    def __post_init__(self):
        lo = tuple(float(v) for v in np.ravel(self.lo))
        hi = tuple(float(v) for v in np.ravel(self.hi))
        if len(lo) != len(hi) or not lo:
            raise ValidationError("box corners must have equal, positive length")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ValidationError("box corners must be finite")
        if any(a >= b for a, b in zip(lo, hi)):
            raise EmptyRegionError(f"empty box: lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if self.open_hi is None:
            object.__setattr__(self, "open_hi", (False,) * len(lo))
        else:
            object.__setattr__(self, "open_hi", tuple(bool(v) for v in self.open_hi))

    @classmethod
    def cube(cls, center, side):
        c = np.asarray(center, dtype=float)
        return cls(tuple(c - side / 2.0), tuple(c + side / 2.0))

    @classmethod
    def from_bounds(cls, lo, hi):
        return cls(tuple(lo), tuple(hi))

    def __eq__(self, other):
        if not isinstance(other, BoxRegion):
            return NotImplemented
        return (self.lo, self.hi, self.open_hi) == (other.lo, other.hi, other.open_hi)

    def __hash__(self):
        return hash((self.lo, self.hi, self.open_hi))

    @property
    def dim(self):
        return len(self.lo)

    @property
    def lo_array(self):
        return np.array(self.lo)

    @property
    def hi_array(self):
        return np.array(self.hi)

    @property
    def sides(self):
        return self.hi_array - self.lo_array

    @property
    def min_side(self):
        return float(self.sides.min())

    @property
    def volume(self):
        return float(np.prod(self.sides))

    @property
    def center(self):
        return 0.5 * (self.lo_array + self.hi_array)

    @property
    def is_cube(self):
        s = self.sides
        return bool(np.all(np.abs(s - s[0]) <= 1e-12 * s[0]))

    def contains_box(self, other, tol=0.0):
        return bool(np.all(other.lo_array >= self.lo_array - tol)
                    and np.all(other.hi_array <= self.hi_array + tol))

    def contains_points(self, pts, tol=0.0):
        return self.ball_inside(pts, 0.0, tol)

    def ball_inside(self, pts, radius, tol=TOL_BOUNDARY):
        """Mask of points ``y`` with the closed ball ``B_radius(y)`` inside the box.

        Touching a closed face within ``tol`` counts as inside; touching an
        open face never does.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ok = np.all(pts - radius >= self.lo_array - tol, axis=1)
        hi = self.hi_array
        closed = ~np.array(self.open_hi)
        if closed.any():
            ok &= np.all(pts[:, closed] + radius <= hi[closed] + tol, axis=1)
        if (~closed).any():
            ok &= np.all(pts[:, ~closed] + radius < hi[~closed] - 2.0 * tol, axis=1)
        return ok

    def translate(self, t):
        t = np.asarray(t, dtype=float)
        return BoxRegion(tuple(self.lo_array + t), tuple(self.hi_array + t), self.open_hi)

    def scale(self, alpha):
        return BoxRegion(tuple(self.lo_array * alpha), tuple(self.hi_array * alpha), self.open_hi)

    def split(self, axis, at):
        """Two disjoint boxes whose union is this box: ``x[axis] < at`` and ``>= at``."""
        if not self.lo[axis] < at < self.hi[axis]:
            raise EmptyRegionError("split position must be interior")
        lo_hi = list(self.hi)
        lo_hi[axis] = at
        open_hi = list(self.open_hi)
        open_hi[axis] = True
        hi_lo = list(self.lo)
        hi_lo[axis] = at
        return (BoxRegion(self.lo, tuple(lo_hi), tuple(open_hi)),
                BoxRegion(tuple(hi_lo), self.hi, self.open_hi))


def shrink(region, s):
    """Box with every face moved inward by ``s`` (the points at distance >= s from outside)."""
    s = float(s)
    if s < 0:
        raise ValueError("shrink distance must be non-negative")
    base, inset = region, 0.0
    if region._base is not None:
        base, inset = region._base
    total = inset + s
    lo = tuple(v + total for v in base.lo)
    hi = tuple(v - total for v in base.hi)
    if any(a >= b for a, b in zip(lo, hi)):
        raise EmptyRegionError(f"shrinking by {s} empties {region}")
    if total == 0.0:
        return base
    return BoxRegion(lo, hi, base.open_hi, _base=(base, total))


class GridIndex:
    """Uniform-grid spatial index.

    Points are bucketed into cubic cells of side ``cell`` (about the mean
    spacing) and stored cell by cell so the kernels scan contiguous memory.
    """

    def __init__(self, points, window, cell=None):
        points = np.asarray(points, dtype=float)
        n, dim = points.shape
        self.dim = dim
        self.lo = np.ascontiguousarray(window.lo_array)
        extent = window.sides
        if cell is None:
            cell = (float(np.prod(extent)) / max(n, 1)) ** (1.0 / dim)
            cell = max(cell, float(extent.max()) / 4096.0, 1e-12)
        self.cell = float(cell)
        self.shape = np.maximum(np.ceil(extent / self.cell).astype(np.int64), 1)
        ids = np.clip(np.floor((points - self.lo) / self.cell).astype(np.int64), 0, self.shape - 1)
        strides = np.ones(dim, dtype=np.int64)
        for k in range(dim - 2, -1, -1):
            strides[k] = strides[k + 1] * self.shape[k + 1]
        lin = ids @ strides
        self.order = np.argsort(lin, kind="stable")
        ncells = int(np.prod(self.shape))
        self.cell_start = np.zeros(ncells + 1, dtype=np.int64)
        np.cumsum(np.bincount(lin, minlength=ncells), out=self.cell_start[1:])
        self.sorted_points = np.ascontiguousarray(points[self.order])
        self._rank = np.empty(n, dtype=np.int64)
        self._rank[self.order] = np.arange(n)

    def nearest(self, queries, exclude=None):
        """Distance to, and index of, the nearest point for each query.

        ``exclude`` gives one sample index per query to ignore (or -1).
        """
        queries = np.ascontiguousarray(np.atleast_2d(queries), dtype=float)
        if exclude is None:
            ex = np.full(len(queries), -1, dtype=np.int64)
        else:
            ex = np.asarray(exclude, dtype=np.int64)
            ex = np.where(ex >= 0, self._rank[np.maximum(ex, 0)], -1)
        dist, idx = kernels.nn_query(self.sorted_points, self.cell_start, self.shape,
                                     self.lo, self.cell, queries, np.ascontiguousarray(ex))
        idx = np.asarray(idx)
        return np.asarray(dist), np.where(idx >= 0, self.order[np.maximum(idx, 0)], -1)

    def ball(self, centers, radius):
        """CSR ``(offsets, indices)`` of points within ``radius`` of each center."""
        centers = np.ascontiguousarray(np.atleast_2d(centers), dtype=float)
        offs, idx = kernels.ball_query(self.sorted_points, self.cell_start, self.shape,
                                       self.lo, self.cell, centers, float(radius))
        return np.asarray(offs), self.order[np.asarray(idx)]


class PointSample:
    """Finite window of a Delone set.

    Points are stored sorted lexicographically, so index order is the
    deterministic tie-break used everywhere (e.g. class representatives).
    """

    def __init__(self, points, window, label="", *, merge_tol=MERGE_TOL, validate=True, rows=None):
        pts = np.array(points, dtype=float, ndmin=2)
        if pts.size == 0:
            pts = pts.reshape(0, window.dim)
        if pts.shape[1] != window.dim:
            raise ValidationError(f"points have dimension {pts.shape[1]}, window {window.dim}")
        order = np.lexsort(pts.T[::-1]) if len(pts) else np.zeros(0, dtype=np.int64)
        pts = pts[order]
        pts.setflags(write=False)
        self.points = pts
        self.window = window
        self.label = label
        self.merge_tol = merge_tol
        self._cache = {}
        if validate:
            self._validate(rows if rows is None else np.asarray(rows)[order])

    def _validate(self, rows):
        pts = self.points
        if not np.all(np.isfinite(pts)):
            raise ValidationError("non-finite coordinate")
        outside = ~self.window.contains_points(pts, MERGE_TOL) if len(pts) else np.zeros(0, bool)
        if outside.any():
            i = int(np.nonzero(outside)[0][0])
            where = f" (row {rows[i]})" if rows is not None else ""
            raise ValidationError(f"point {pts[i].tolist()} outside window{where}")
        if len(pts) >= 2:
            dist, nn = self.index.nearest(pts, exclude=np.arange(len(pts)))
            bad = np.nonzero(dist <= self.merge_tol)[0]
            if len(bad):
                i, j = sorted((int(bad[0]), int(nn[bad[0]])))
                if rows is not None:
                    raise DuplicatePointError(
                        f"duplicate point at rows {min(rows[i], rows[j])} and {max(rows[i], rows[j])}")
                raise DuplicatePointError(f"duplicate point {pts[i].tolist()}")

    @property
    def dim(self):
        return self.window.dim

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PointSample(label={self.label!r}, dim={self.dim}, n={len(self)}, window={self.window})"

    @cached_property
    def index(self):
        return GridIndex(self.points, self.window)

    @cached_property
    def nn_distances(self):
        """Distance from every point to its nearest other point."""
        if len(self) < 2:
            return np.full(len(self), np.inf)
        d, _ = self.index.nearest(self.points, exclude=np.arange(len(self)))
        return d

    @cached_property
    def default_tol_patch(self):
        if len(self) < 2:
            return PATCH_TOL_FACTOR
        return PATCH_TOL_FACTOR * packing_radius(self)

    def find(self, x, tol=None):
        """Index of the sample point equal to ``x`` (within ``tol``), else None."""
        tol = MERGE_TOL * 10 if tol is None else tol
        d, i = self.index.nearest(np.asarray(x, dtype=float)[None, :])
        return int(i[0]) if d[0] <= tol else None

    def translate(self, t):
        t = np.asarray(t, dtype=float)
        return PointSample(self.points + t, self.window.translate(t), self.label, validate=False)

    def scale(self, alpha):
        return PointSample(self.points * alpha, self.window.scale(alpha), self.label, validate=False)

    def subset(self, indices, window, label=None):
        """Sample made of selected points, observed in ``window``."""
        return PointSample(self.points[np.asarray(indices, dtype=np.int64)], window,
                           self.label if label is None else label, validate=False)


# -- DELONE v1 text format ---------------------------------------------------

def load_sample(path, label=None):
    """Read a DELONE v1 point file."""
    path = Path(path)
    rows, coords = [], []
    dim = window = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if dim is None:
                parts = text.split()
                if len(parts) != 3 or parts[0] != "DELONE" or parts[1] != "v1" or not parts[2].startswith("dim="):
                    raise FormatError("expected header 'DELONE v1 dim=<N>'", lineno)
                try:
                    dim = int(parts[2][4:])
                except ValueError:
                    raise FormatError("dimension is not an integer", lineno) from None
                if dim < 1:
                    raise FormatError("dimension must be positive", lineno)
                continue
            if window is None:
                parts = text.split()
                if parts[0] != "window" or len(parts) != 2 * dim + 1:
                    raise FormatError(f"expected 'window' followed by {2 * dim} numbers", lineno)
                try:
                    vals = [float(v) for v in parts[1:]]
                    window = BoxRegion(tuple(vals[:dim]), tuple(vals[dim:]))
                except (ValueError, ValidationError, EmptyRegionError) as exc:
                    raise FormatError(f"bad window: {exc}", lineno) from None
                continue
            parts = text.split()
            if len(parts) != dim:
                raise FormatError(f"expected {dim} coordinates, found {len(parts)}", lineno)
            try:
                coords.append([float(v) for v in parts])
            except ValueError:
                raise FormatError("coordinate is not a number", lineno) from None
            rows.append(lineno)
    if dim is None:
        raise FormatError("missing header", 1)
    if window is None:
        raise FormatError("missing window line")
    pts = np.array(coords, dtype=float).reshape(-1, dim)
    if not np.all(np.isfinite(pts)):
        bad = int(np.nonzero(~np.all(np.isfinite(pts), axis=1))[0][0])
        raise FormatError("non-finite coordinate", rows[bad])
    return PointSample(pts, window, label or path.stem, rows=rows)


def format_sample(s, comment=None):
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"DELONE v1 dim={s.dim}")
    lines.append("window " + " ".join(repr(v) for v in s.window.lo + s.window.hi))
    for p in s.points:
        lines.append(" ".join(repr(float(v)) for v in p))
    return "\n".join(lines) + "\n"


def save_sample(s, path, comment=None):
    Path(path).write_text(format_sample(s, comment))


# -- radii --------------------------------------------------------------------

def packing_radius(s):
    """Half the minimum pairwise distance, exact over the sample."""
    if len(s) < 2:
        raise UndefinedRadiusError("packing radius needs at least two points")
    return 0.5 * float(np.min(s.nn_distances))


def covering_radius(s, region):
    """Largest distance from a point of ``region`` to the sample.

    Exact: the maximum is attained at a Voronoi vertex or where a cell
    meets the region boundary, so it is read off the cells clipped to
    ``region``. The region must sit at least twice the result inside the
    window, otherwise points beyond the window could change the answer.
    """
    if region.dim != s.dim:
        raise ValidationError("region dimension mismatch")
    if not s.window.contains_box(region, MERGE_TOL):
        raise BoundaryContaminationError("region is not inside the window")
    if len(s) == 0:
        raise UndefinedRadiusError("empty sample")
    r = _covering_radius_1d(s, region) if s.dim == 1 else _covering_radius_cells(s, region)
    safe_lo = s.window.lo_array + 2 * r
    safe_hi = s.window.hi_array - 2 * r
    if np.any(region.lo_array < safe_lo - MERGE_TOL) or np.any(region.hi_array > safe_hi + MERGE_TOL):
        raise BoundaryContaminationError(
            f"region {region} is closer than 2*r_cov={2 * r:.6g} to the window boundary")
    return r


def safe_covering_radius(s, margin=0.0):
    """Covering radius on the largest region that passes the boundary check.

    Starts from ``shrink(window, margin)`` and shrinks further by twice the
    measured radius until the measurement certifies itself. Returns
    ``(radius, region)``.
    """
    if len(s) == 0:
        raise InsufficientWindowError("empty sample")
    inset = float(margin)
    for _ in range(50):
        try:
            region = shrink(s.window, inset)
        except EmptyRegionError:
            raise InsufficientWindowError("window too small for a safe covering-radius region") from None
        if s.dim == 1:
            r = _covering_radius_1d(s, region)
        else:
            r = _covering_radius_cells(s, region)
        if inset >= 2 * r - MERGE_TOL:
            return r, region
        inset = max(inset, 2 * r)
    raise InsufficientWindowError("covering-radius region did not stabilise")


def _covering_radius_1d(s, region):
    x = s.points[:, 0]
    a, b = region.lo[0], region.hi[0]
    best = 0.0
    # endpoints of the region
    for p in (a, b):
        best = max(best, float(np.min(np.abs(x - p))))
    mids = 0.5 * (x[1:] + x[:-1])
    inside = (mids >= a) & (mids <= b)
    if inside.any():
        best = max(best, float(np.max(0.5 * (x[1:] - x[:-1])[inside])))
    return best


def _certified_cell(s, i, lo, hi, rho, nb=None):
    """Cell of point ``i`` clipped to ``[lo, hi]`` using every relevant neighbour.

    ``nb`` may carry the indices already known to lie within ``rho``. The
    cell is final once all its vertices lie within ``rho / 2`` of the site:
    a farther site's bisector cannot reach it.
    """
    site = s.points[i]
    reach = 2.0 * float(np.linalg.norm(s.window.sides)) + float(np.linalg.norm(hi - lo))
    while True:
        if nb is None:
            _, nb = s.index.ball(site[None, :], rho)
        nb = nb[nb != i]
        if len(nb):
            normals, offsets = bisector_halfspaces(site, s.points[nb])
        else:
            normals, offsets = np.zeros((0, s.dim)), np.zeros(0)
        verts = polytope_cell(site, normals, offsets, lo, hi)
        if len(verts) == 0:
            return verts
        rmax = float(np.max(np.linalg.norm(verts - site, axis=1)))
        if 2.0 * rmax <= rho or rho > reach:
            return verts
        rho = 2.0 * rmax * (1.0 + 1e-9) + 1e-12
        nb = None


def _covering_radius_cells(s, region):
    lo, hi = region.lo_array, region.hi_array
    target = region.volume
    rho = 2.0 * (s.window.volume / max(len(s), 1)) ** (1.0 / s.dim)
    while True:
        cand = np.nonzero(np.all((s.points >= lo - rho) & (s.points <= hi + rho), axis=1))[0]
        offs, nbs = s.index.ball(s.points[cand], 2.0 * rho)
        best, covered = 0.0, 0.0
        for k, i in enumerate(cand):
            verts = _certified_cell(s, i, lo, hi, 2.0 * rho, nbs[offs[k]:offs[k + 1]])
            if len(verts) == 0:
                continue
            covered += polytope_volume(verts)
            best = max(best, float(np.max(np.linalg.norm(verts - s.points[i], axis=1))))
        # every region point must lie in some candidate's cell
        if covered >= target * (1.0 - 1e-9) and best <= rho:
            return best
        if rho > 4.0 * float(np.linalg.norm(s.window.sides)):
            raise InsufficientWindowError("cells do not cover the region")
        rho = max(2.0 * rho, best * 1.01)


def covering_radius_sampled(s, region, step=None):
    """Grid estimate of the covering radius (a lower bound within ``step*sqrt(N)/2``).

    Cross-check for :func:`covering_radius`; default step is ``r_pack / 20``.
    """
    if step is None:
        step = packing_radius(s) / 20.0
    axes = [np.arange(a, b + 0.5 * step, step) for a, b in zip(region.lo, region.hi)]
    axes = [np.clip(ax, a, b) for ax, a, b in zip(axes, region.lo, region.hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, s.dim)
    best = 0.0
    for chunk in np.array_split(grid, max(1, len(grid) // 200000)):
        d, _ = s.index.nearest(chunk)
        best = max(best, float(d.max()))
    return best


def check_delone(s):
    """Validate uniform discreteness and relative density on the shrunk window.

    Returns ``(r_pack, r_cov)``; raises :class:`ValidationError` otherwise.
    """
    try:
        rp = packing_radius(s)
        rc, _ = safe_covering_radius(s)
    except (UndefinedRadiusError, InsufficientWindowError) as exc:
        raise ValidationError(f"not a Delone window: {exc}") from None
    if not (rp > 0 and math.isfinite(rc) and rc > 0):
        raise ValidationError("not a Delone window")
    return rp, rc


# -- local complexity ---------------------------------------------------------

def census(s, radius, tol_patch=None, tol_boundary=TOL_BOUNDARY, center_radius=None):
    """Cached patch-class census of ``s`` at ``radius`` (see ``_census``)."""
    from ._census import build_census

    if tol_patch is None:
        tol_patch = s.default_tol_patch
    key = ("census", float(radius), float(tol_patch), float(tol_boundary),
           None if center_radius is None else float(center_radius))
    if key not in s._cache:
        s._cache[key] = build_census(s, float(radius), tol_patch, tol_boundary, center_radius)
    return s._cache[key]


def flc_census(s, radius=None, tol_patch=None, center_radius=None):
    """Number of distinct patches of radius ``radius`` over window-safe centers.

    Default radius is ``2 * r_cov``. ``center_radius`` restricts the centers
    to those whose ``center_radius``-ball fits the window, so counts at
    different radii can share one center set.
    """
    if radius is None:
        radius = 2.0 * safe_covering_radius(s)[0]
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = census(s, radius, tol_patch, center_radius=center_radius)
    if len(c.centers) == 0:
        raise InsufficientWindowError(f"no center admits a ball of radius {radius} inside the window")
    return c.n_classes


@dataclass
class PeriodReport:
    candidate_periods: list  # (vector, mismatches, tested) for each candidate
    is_periodic_within_window: bool

    @property
    def periods(self):
        return [t for t, miss, _ in self.candidate_periods if miss == 0]


def difference_vectors(s, max_norm, tol=None):
    """Distinct nonzero vectors ``y - x`` between sample points with norm <= max_norm."""
    if tol is None:
        tol = s.default_tol_patch
    offs, nb = s.index.ball(s.points, max_norm)
    owner = np.repeat(np.arange(len(s)), np.diff(offs))
    diff = s.points[nb] - s.points[owner]
    diff = diff[np.linalg.norm(diff, axis=1) > tol]
    if len(diff) == 0:
        return diff
    q = np.rint(diff / tol).astype(np.int64)
    _, first = np.unique(q, axis=0, return_index=True)
    out = diff[np.sort(first)]
    order = np.lexsort(np.vstack([out.T[::-1], np.linalg.norm(out, axis=1)]))
    return out[order]


def detect_periods(s, tol=None):
    """Translation vectors ``t`` (``|t| <=`` quarter window side) that map the sample into itself.

    For each ``t`` in the observed difference set, every point of
    ``shrink(window, |t|)`` is shifted by ``t`` and looked up in the sample;
    the mismatch count is recorded and zero-mismatch vectors are periods.
    """
    if tol is None:
        tol = s.default_tol_patch
    quarter = 0.25 * s.window.min_side
    candidates = []
    if len(s) < 2:
        return PeriodReport([], False)
    for t in difference_vectors(s, quarter, tol):
        norm = float(np.linalg.norm(t))
        try:
            inner = shrink(s.window, norm)
        except EmptyRegionError:
            continue
        src = s.points[inner.contains_points(s.points, MERGE_TOL)]
        if len(src) == 0:
            continue
        d, _ = s.index.nearest(src + t)
        candidates.append((tuple(float(v) for v in t), int(np.sum(d > tol)), len(src)))
    periodic = any(m == 0 for _, m, _ in candidates)
    return PeriodReport(candidates, periodic)

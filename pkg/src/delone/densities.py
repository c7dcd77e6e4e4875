"""Windowed estimates of lower densities and of the weight infima.

The liminf over large cubes is approximated in two steps. Each cube size
is first reduced to the minimum over a small grid of placements. The
estimate is then the minimum over the tail of the size ladder.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientWindowError, ValidationError
from .patterns import BallPattern, locater_set, max_disjoint, patch_classes
from .pointset import TOL_BOUNDARY, BoxRegion

DEFAULT_OFFSETS = (-0.25, 0.0, 0.25)
MIN_LADDER = 4


class DiagnosticsWarning(UserWarning):
    """The cube ladder is too short for a meaningful tail."""


@dataclass(frozen=True)
class BallVolume:
    dim: int
    value: float

    def __float__(self):
        return self.value


def unit_ball_volume(dim):
    if dim < 1:
        raise ValidationError("dimension must be >= 1")
    # V_N = V_{N-2} * 2 pi / N keeps N = 1 and N = 2 exact
    v = 2.0 if dim % 2 else 1.0
    for n in range(2 + dim % 2, dim + 1, 2):
        v *= 2.0 * math.pi / n
    return BallVolume(int(dim), v)


def ball_volume(dim, radius):
    return unit_ball_volume(dim).value * radius ** dim


@dataclass(frozen=True)
class CubeFamily:
    """Window-centred cubes on a strictly increasing ladder of sides.

    Every size is placed at the ``offsets`` (fractions of the side) along
    each axis, giving ``len(offsets) ** N`` translates.
    """

    center: tuple
    sides: tuple
    offsets: tuple = DEFAULT_OFFSETS
    tail_fraction: float = 0.5

    def __post_init__(self):
        if len(self.sides) == 0:
            raise ValidationError("empty cube ladder")
        if any(b <= a for a, b in zip(self.sides, self.sides[1:])):
            raise ValidationError("cube ladder must be strictly increasing")
        if not 0.0 < self.tail_fraction <= 1.0:
            raise ValidationError("tail_fraction must lie in (0, 1]")

    @classmethod
    def for_window(cls, window, n_sizes=6, ratio=math.sqrt(2.0), max_side=None, sides=None,
                   offsets=DEFAULT_OFFSETS, tail_fraction=0.5):
        """Largest admissible ladder: every placement stays inside ``window``."""
        reach = 1.0 + 2.0 * max(abs(o) for o in offsets)
        limit = window.min_side / reach
        if sides is None:
            top = limit if max_side is None else min(max_side, limit)
            sides = tuple(top / ratio ** k for k in range(n_sizes - 1, -1, -1))
        fam = cls(tuple(window.center), tuple(float(x) for x in sides), tuple(offsets), tail_fraction)
        for side in fam.sides:
            for cube in fam.placements(side):
                if not window.contains_box(cube, 1e-9):
                    raise InsufficientWindowError(f"cube of side {side} does not fit in {window}")
        return fam

    @property
    def dim(self):
        return len(self.center)

    def placements(self, side):
        c = np.asarray(self.center)
        shifts = np.array(np.meshgrid(*[self.offsets] * self.dim, indexing="ij")).reshape(self.dim, -1).T
        return [BoxRegion.cube(tuple(c + side * sh), side) for sh in shifts]

    def centered(self, side):
        return BoxRegion.cube(self.center, side)

    @property
    def tail(self):
        k = len(self.sides)
        return list(range(k - max(1, int(math.floor(k * self.tail_fraction))), k))


@dataclass
class DensityReport:
    pattern: BallPattern
    reduced: bool
    sequence: list  # (side, min over placements)
    certified: list  # per side: all placements exact
    estimate: float
    tail_fraction: float
    method: str  # weakest counting method used
    warnings: list = field(default_factory=list)

    @property
    def resolved(self):
        """Every tail cube holds at least one copy; a zero says the window is too small."""
        k = len(self.sequence)
        return all(v > 0 for _, v in self.sequence[k - max(1, int(math.floor(k * self.tail_fraction))):])

    @property
    def estimate_certified(self):
        k = len(self.certified)
        return all(self.certified[k - max(1, int(math.floor(k * self.tail_fraction))):])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["side", "placement_min_value", "certified"])
        for (side, value), ok in zip(self.sequence, self.certified):
            w.writerow([repr(float(side)), repr(float(value)), str(bool(ok)).lower()])
        return buf.getvalue()


def _density(s, pattern, fam, reduced, mode, cap, tol_patch, tol_boundary):
    R = pattern.radius
    for side in fam.sides:
        for cube in fam.placements(side):
            if not s.window.contains_box(cube, 1e-9):
                raise InsufficientWindowError(f"cube {cube} escapes the window")
    loc = locater_set(s, pattern, s.window, tol_patch, tol_boundary)
    vol_b = ball_volume(s.dim, R)
    seq, cert, worst = [], [], "exact"
    for side in fam.sides:
        best, ok = math.inf, True
        for cube in fam.placements(side):
            members = loc.members[cube.ball_inside(loc.members, R, tol_boundary)]
            if reduced:
                res = max_disjoint(members, R, mode, cap, tol_boundary)
                count = res.value
                if res.lower_bound:
                    ok = False
                    worst = "greedy"
            else:
                count = len(members)
            best = min(best, count * vol_b / cube.volume)
        seq.append((side, best))
        cert.append(ok)
    tail = fam.tail
    estimate = min(seq[k][1] for k in tail)
    notes = []
    if len(fam.sides) < MIN_LADDER:
        msg = f"ladder has {len(fam.sides)} sizes; at least {MIN_LADDER} are needed for diagnostics"
        warnings.warn(msg, DiagnosticsWarning, stacklevel=3)
        notes.append(msg)
    return DensityReport(pattern, reduced, seq, cert, estimate, fam.tail_fraction, worst, notes)


def lower_density(s, pattern, fam, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """Estimate of the lower density of copies of ``pattern``."""
    return _density(s, pattern, fam, False, "auto", 64, tol_patch, tol_boundary)


def lower_reduced_density(s, pattern, fam, mode="auto", cap=64, tol_patch=None,
                          tol_boundary=TOL_BOUNDARY):
    """Estimate of the lower density of pairwise disjoint copies of ``pattern``."""
    return _density(s, pattern, fam, True, mode, cap, tol_patch, tol_boundary)


def default_radius_grid(window, start=1.0):
    cap = window.min_side / 10.0
    grid = []
    r = start
    while r <= cap + 1e-12:
        grid.append(r)
        r *= 2.0
    return grid


@dataclass
class WeightEstimate:
    """Minimum density over the resolved (radius, class) pairs.

    Pairs whose tail saw a cube without any copy are counted in
    ``unresolved`` and left out of ``value``; ``raw_value`` keeps them.
    """

    which: str  # "PW" (w) or "PQ" (w')
    value: float
    radius_grid: list
    classes_per_radius: dict
    argmin: BallPattern
    certified: bool
    unresolved: int = 0
    raw_value: float = None
    reports: list = field(default_factory=list, repr=False)


def _one(args):
    s, pattern, fam, which, tol_patch, tol_boundary = args
    if which == "PW":
        return lower_density(s, pattern, fam, tol_patch, tol_boundary)
    return lower_reduced_density(s, pattern, fam, tol_patch=tol_patch, tol_boundary=tol_boundary)


def weight_estimate(s, fam, radius_grid=None, which="PW", tol_patch=None,
                    tol_boundary=TOL_BOUNDARY, workers=1):
    """Minimum density over every (radius, patch class) pair of the grid.

    ``which="PW"`` uses copy counts and ``"PQ"`` disjoint copy counts.
    """
    if which not in ("PW", "PQ"):
        raise ValidationError("which must be 'PW' or 'PQ'")
    grid = default_radius_grid(s.window) if radius_grid is None else list(radius_grid)
    if not grid:
        raise ValidationError("empty radius grid")
    if min(grid) < 1.0:
        raise ValidationError("pattern radii below 1 are not part of the weight infimum")
    jobs, per_radius = [], {}
    for R in grid:
        reps = patch_classes(s, R, s.window, tol_patch, tol_boundary)
        per_radius[float(R)] = len(reps)
        jobs.extend((s, p, fam, which, tol_patch, tol_boundary) for p in reps)
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            reports = list(ex.map(_one, jobs))
    else:
        reports = [_one(j) for j in jobs]
    resolved = [i for i, r in enumerate(reports) if r.resolved]
    if not resolved:
        raise InsufficientWindowError("no pattern of the grid is seen in every tail cube")
    # ties resolve to the first job, which is deterministic
    k = min(resolved, key=lambda i: reports[i].estimate)
    raw = min(r.estimate for r in reports)
    return WeightEstimate(which, reports[k].estimate, [float(r) for r in grid], per_radius,
                          reports[k].pattern, all(reports[i].estimate_certified for i in resolved),
                          len(reports) - len(resolved), raw, reports)

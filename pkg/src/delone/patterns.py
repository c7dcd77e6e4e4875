"""Ball patterns, patches, locater sets and copy counts.

A ball pattern ``(x, R)`` is identified with its patch, the translated
neighbourhood ``(sample - x) ∩ B_R``. The locater set of a pattern in a
region collects every center whose ball fits in the region and whose patch
equals the pattern's patch. ``copies_count`` is its size and
``disjoint_copies_count`` the largest subset with pairwise distances
exceeding ``2R`` (a maximum independent set of the conflict graph).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._census import patches_match
from .errors import CapExceededError, InadmissiblePatternError, InsufficientWindowError, ValidationError
from .pointset import TOL_BOUNDARY, BoxRegion, PointSample, census

EXACT_CAP = 64
MODES = ("exact", "greedy", "auto")


@dataclass(frozen=True)
class BallPattern:
    """Pattern centred at a sample point; ``index`` caches its position in the sample."""

    center: tuple
    radius: float
    index: int = -1

    @classmethod
    def at(cls, s, x, radius):
        i = s.find(x)
        if i is None:
            raise InadmissiblePatternError(f"{tuple(np.ravel(x))} is not a point of the sample")
        return cls(tuple(float(v) for v in s.points[i]), float(radius), i)

    @classmethod
    def at_index(cls, s, i, radius):
        return cls(tuple(float(v) for v in s.points[i]), float(radius), int(i))

    def resolve(self, s, tol_boundary=TOL_BOUNDARY):
        """Sample index of the center after checking admissibility on ``s``."""
        if self.radius <= 0:
            raise InadmissiblePatternError("pattern radius must be positive")
        i = self.index
        if i < 0 or i >= len(s) or not np.array_equal(s.points[i], self.center):
            i = s.find(self.center)
        if i is None:
            raise InadmissiblePatternError(f"center {self.center} is not a point of the sample")
        if not s.window.ball_inside(s.points[i], self.radius, tol_boundary)[0]:
            raise InadmissiblePatternError(
                f"ball of radius {self.radius} at {self.center} escapes the window")
        return int(i)


@dataclass(frozen=True)
class Patch:
    points: np.ndarray = field(compare=False)
    radius: float

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        return (isinstance(other, Patch) and self.radius == other.radius
                and np.array_equal(self.points, other.points))

    __hash__ = None


def _lex_sorted(pts):
    if len(pts) == 0:
        return pts
    return pts[np.lexsort(pts.T[::-1])]


def extract_patch(s, x, radius, tol_boundary=TOL_BOUNDARY):
    """Patch of the pattern ``(x, radius)``; ``x`` may be a point or a BallPattern."""
    pattern = x if isinstance(x, BallPattern) else BallPattern.at(s, x, radius)
    i = pattern.resolve(s, tol_boundary)
    return _patch_at(s, i, pattern.radius, tol_boundary)


def _patch_at(s, i, radius, tol_boundary=TOL_BOUNDARY):
    offs, nb = s.index.ball(s.points[i], radius + tol_boundary)
    rel = s.points[nb] - s.points[i]
    rel[nb == i] = 0.0
    return Patch(_lex_sorted(rel), float(radius))


def patch_equal(p, q, tol):
    """Equal cardinality and points matched within ``tol``.

    The canonical (lexicographic) pairing is tried first; if round-off
    swaps the order of nearly tied points, an order-free matching decides.
    """
    if p.radius != q.radius:
        raise ValidationError(f"patch radii differ: {p.radius} vs {q.radius}")
    if len(p) != len(q):
        return False
    if len(p) == 0:
        return True
    if np.all(np.linalg.norm(p.points - q.points, axis=1) <= tol):
        return True
    return patches_match(p.points, q.points, tol)


@dataclass
class LocaterSet:
    pattern: BallPattern
    members: np.ndarray  # coordinates, lexicographic order
    indices: np.ndarray  # sample indices of the members
    admissible_region: BoxRegion

    def __len__(self):
        return len(self.indices)


def _check_region(s, region):
    if region.dim != s.dim:
        raise ValidationError("region and sample dimensions differ")
    if not s.window.contains_box(region, 1e-9):
        raise ValidationError(f"region {region} is not inside the window {s.window}")


def locater_set(s, pattern, region=None, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """Centers in ``region`` (ball included) carrying the same patch as ``pattern``.

    Equality is decided by the cached class census at the pattern radius,
    so repeated queries on one sample share the same work.
    """
    region = s.window if region is None else region
    _check_region(s, region)
    i = pattern.resolve(s, tol_boundary)
    cen = census(s, pattern.radius, tol_patch, tol_boundary)
    cls = cen.labels[i]
    idx = np.nonzero(cen.labels == cls)[0]
    idx = idx[region.ball_inside(s.points[idx], pattern.radius, tol_boundary)]
    return LocaterSet(pattern, s.points[idx], idx, region)


def locater_set_bruteforce(s, pattern, region=None, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """Reference locater set by direct patch comparison at every candidate."""
    region = s.window if region is None else region
    _check_region(s, region)
    tol_patch = s.default_tol_patch if tol_patch is None else tol_patch
    i = pattern.resolve(s, tol_boundary)
    ref = _patch_at(s, i, pattern.radius, tol_boundary)
    cand = np.nonzero(region.ball_inside(s.points, pattern.radius, tol_boundary))[0]
    keep = [j for j in cand
            if patch_equal(_patch_at(s, j, pattern.radius, tol_boundary), ref, tol_patch)]
    idx = np.asarray(keep, dtype=np.int64)
    return LocaterSet(pattern, s.points[idx], idx, region)


def copies_count(s, pattern, region=None, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    return len(locater_set(s, pattern, region, tol_patch, tol_boundary))


@dataclass
class ConflictGraph:
    """Copies as vertices; an edge joins two copies at distance ``<= 2R``."""

    vertices: np.ndarray
    radius: float
    offsets: np.ndarray = field(repr=False)
    neighbors: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, points, radius, tol=TOL_BOUNDARY):
        pts = np.asarray(points, dtype=float)
        n = len(pts)
        if n == 0:
            return cls(pts, radius, np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64))
        sub = PointSample(pts, BoxRegion(tuple(pts.min(axis=0)), tuple(pts.max(axis=0) + 1e-9)),
                          validate=False)
        # PointSample re-sorts; map back to the caller's order
        perm = np.lexsort(pts.T[::-1])
        offs, nb = sub.index.ball(sub.points, 2.0 * radius + tol)
        owner = np.repeat(np.arange(n), np.diff(offs))
        keep = owner != nb
        a, b = perm[owner[keep]], perm[nb[keep]]
        order = np.lexsort((b, a))
        a, b = a[order], b[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(a, minlength=n), out=offsets[1:])
        return cls(pts, float(radius), offsets, b)

    def __len__(self):
        return len(self.vertices)

    def adjacent(self, v):
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    @property
    def edges(self):
        a = np.repeat(np.arange(len(self)), np.diff(self.offsets))
        m = a < self.neighbors
        return np.stack([a[m], self.neighbors[m]], axis=1)

    def bitmasks(self, subset=None):
        """Neighbour bitmasks restricted to ``subset`` (at most 64 vertices)."""
        subset = np.arange(len(self)) if subset is None else np.asarray(subset)
        if len(subset) > EXACT_CAP:
            raise CapExceededError(f"{len(subset)} vertices exceed the exact cap of {EXACT_CAP}")
        pos = {int(v): k for k, v in enumerate(subset)}
        masks = np.zeros(len(subset), dtype=np.uint64)
        for k, v in enumerate(subset):
            m = 0
            for u in self.adjacent(v):
                j = pos.get(int(u))
                if j is not None:
                    m |= 1 << j
            masks[k] = m
        return masks

    def components(self):
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import connected_components

        n = len(self)
        mat = csr_matrix((np.ones(len(self.neighbors)), self.neighbors, self.offsets), shape=(n, n))
        _, lab = connected_components(mat, directed=False)
        return [np.nonzero(lab == c)[0] for c in range(lab.max() + 1)] if n else []

    def is_independent(self, chosen):
        chosen = set(int(c) for c in chosen)
        return all(int(u) not in chosen for v in chosen for u in self.adjacent(v))


@dataclass(frozen=True)
class DisjointCount:
    """Value of a disjoint-copies count and how it was obtained.

    ``method`` is ``exact`` (branch and bound), ``sweep`` (exact left-to-right
    scan, one dimension only) or ``greedy`` (a lower bound).
    """

    value: int
    method: str
    n_candidates: int

    @property
    def lower_bound(self):
        return self.method == "greedy"

    def __int__(self):
        return self.value


def mis_exact(graph, subset=None):
    subset = np.arange(len(graph)) if subset is None else np.asarray(subset)
    if len(subset) <= 1:
        return len(subset)
    lower = len(greedy_independent_set(graph, subset))
    return int(kernels.mis_size(graph.bitmasks(subset), lower))


def greedy_independent_set(graph, subset=None):
    """Farthest-first selection: start at the lexicographically least vertex,
    then repeatedly add the admissible vertex farthest from the chosen ones."""
    subset = np.arange(len(graph)) if subset is None else np.asarray(subset)
    if len(subset) == 0:
        return []
    pts = graph.vertices[subset]
    alive = np.ones(len(subset), dtype=bool)
    mind = np.full(len(subset), np.inf)
    pos = {int(v): k for k, v in enumerate(subset)}
    k = int(np.lexsort(pts.T[::-1])[0])
    chosen = []
    while True:
        chosen.append(int(subset[k]))
        alive[k] = False
        for u in graph.adjacent(subset[k]):
            j = pos.get(int(u))
            if j is not None:
                alive[j] = False
        if not alive.any():
            return chosen
        mind = np.minimum(mind, np.linalg.norm(pts - pts[k], axis=1))
        k = int(np.argmax(np.where(alive, mind, -1.0)))


def _sweep_1d(points, radius, tol):
    xs = np.sort(points[:, 0])
    count, last = 0, -np.inf
    for x in xs:
        if x - last > 2.0 * radius + tol:
            count += 1
            last = x
    return count


def max_disjoint(points, radius, mode="auto", cap=EXACT_CAP, tol=TOL_BOUNDARY):
    """Largest subset of ``points`` with pairwise distances above ``2 * radius``."""
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(pts) if np.size(points) else 0
    if n <= 1:
        return DisjointCount(n, "exact", n)
    if mode == "exact" and n > cap:
        raise CapExceededError(
            f"{n} candidate copies exceed the exact cap of {cap}; use mode='greedy'")
    if mode == "auto" and n > cap and pts.shape[1] == 1:
        return DisjointCount(_sweep_1d(pts, radius, tol), "sweep", n)
    graph = ConflictGraph.build(pts, radius, tol)
    if mode == "greedy":
        return DisjointCount(len(greedy_independent_set(graph)), "greedy", n)
    if n <= cap:
        return DisjointCount(mis_exact(graph), "exact", n)
    comps = graph.components()
    if max(len(c) for c in comps) <= cap:
        return DisjointCount(sum(mis_exact(graph, c) for c in comps), "exact", n)
    return DisjointCount(len(greedy_independent_set(graph)), "greedy", n)


def disjoint_copies_count(s, pattern, region=None, mode="exact", cap=EXACT_CAP,
                          tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """Maximal number of pairwise disjoint copies of ``pattern`` in ``region``.

    ``exact`` refuses more than ``cap`` candidates, ``greedy`` returns a lower
    bound, and ``auto`` stays exact whenever a 1-D sweep or the connected
    components allow it, falling back to greedy otherwise.
    """
    loc = locater_set(s, pattern, region, tol_patch, tol_boundary)
    return max_disjoint(loc.members, pattern.radius, mode, cap, tol_boundary)


def mis_bruteforce(points, radius, tol=TOL_BOUNDARY):
    """Exhaustive reference for small candidate sets (at most ~20 points)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(pts) if np.size(points) else 0
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2) if n else np.zeros((0, 0))
    conflict = d <= 2.0 * radius + tol
    for size in range(n, 0, -1):
        for combo in itertools.combinations(range(n), size):
            sub = conflict[np.ix_(combo, combo)]
            if not (sub.sum() - size):
                return size
    return 0


def patch_classes(s, radius, region=None, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """One representative pattern per patch class among centers admissible in ``region``.

    The representative is the lexicographically least admissible center.
    """
    region = s.window if region is None else region
    _check_region(s, region)
    cen = census(s, radius, tol_patch, tol_boundary)
    ok = cen.centers[region.ball_inside(s.points[cen.centers], radius, tol_boundary)]
    if len(ok) == 0:
        raise InsufficientWindowError(f"no admissible centers at radius {radius} in {region}")
    labels = cen.labels[ok]
    reps = []
    for cls in np.unique(labels):
        i = int(ok[labels == cls].min())
        reps.append(BallPattern.at_index(s, i, radius))
    reps.sort(key=lambda p: p.index)
    return reps

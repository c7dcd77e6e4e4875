"""Region functions, subadditivity and invariance checks, and cube limits.

A region function maps ``(sample, box)`` to a real number. The built-ins
count copies of a pattern, so their limits along growing cubes are
pattern frequencies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._census import patches_match
from .densities import ball_volume
from .errors import EmptyRegionError, ValidationError
from .patterns import BallPattern, copies_count, disjoint_copies_count, locater_set, patch_classes
from .pointset import TOL_BOUNDARY, BoxRegion


@dataclass(frozen=True)
class RegionFunction:
    """``evaluator(sample, region)``; ``region=None`` stands for the empty region."""

    name: str
    evaluator: Callable
    declared_subadditive: bool = False
    declared_invariant: bool = False

    def __call__(self, s, region):
        if region is None:
            return 0.0
        return float(self.evaluator(s, region))


def negated(F):
    """``-F``; negation swaps sub- and superadditivity."""
    return RegionFunction(f"-({F.name})", lambda s, q: -F.evaluator(s, q),
                          declared_subadditive=not F.declared_subadditive,
                          declared_invariant=F.declared_invariant)


def zero_function():
    return RegionFunction("zero", lambda s, q: 0.0, True, True)


def builtin_neg_copies(pattern):
    """``Q -> -(number of copies of pattern inside Q)``."""
    return RegionFunction(f"-copies(R={pattern.radius:g})",
                          lambda s, q: -copies_count(s, pattern, q),
                          declared_subadditive=True, declared_invariant=True)


def builtin_copies(pattern):
    """``Q -> number of copies``; superadditive, so a subadditivity check must fail."""
    return RegionFunction(f"copies(R={pattern.radius:g})",
                          lambda s, q: copies_count(s, pattern, q),
                          declared_subadditive=False, declared_invariant=True)


def builtin_scaled_disjoint(pattern):
    """``Q -> |B_R| * (maximal number of disjoint copies in Q)``.

    Superadditive: its negation is the subadditive object.
    """
    vol = ball_volume(len(pattern.center), pattern.radius)

    def ev(s, q):
        return vol * disjoint_copies_count(s, pattern, q, mode="auto").value

    return RegionFunction(f"scaled-disjoint(R={pattern.radius:g})", ev,
                          declared_subadditive=False, declared_invariant=True)


def leftmost_coordinate():
    """Smallest first coordinate inside ``Q``; depends on position, not on the pattern."""

    def ev(s, q):
        pts = s.points[q.contains_points(s.points, TOL_BOUNDARY)]
        return float(pts[:, 0].min()) if len(pts) else 0.0

    return RegionFunction("leftmost", ev, declared_subadditive=False, declared_invariant=False)


def _random_box(rng, window, min_frac=0.1, max_frac=0.6):
    lo, hi = window.lo_array, window.hi_array
    side = window.sides * rng.uniform(min_frac, max_frac, size=window.dim)
    start = lo + rng.uniform(0.0, 1.0, size=window.dim) * (hi - lo - side)
    return BoxRegion(tuple(start), tuple(start + side))


@dataclass
class CheckResult:
    status: str  # "pass", "fail" or "inconclusive"
    trials: int
    tested: int
    violations: int = 0
    witness: dict = field(default=None)

    @property
    def passed(self):
        return self.status == "pass"


def check_subadditive(F, s, trials=200, seed=0, tol=1e-9):
    """``F(Q) <= F(Q1) + F(Q2)`` for random boxes ``Q`` split into two halves.

    The halves are disjoint (the lower one is open along the cut) and their
    union is ``Q``. The first violation found is kept as the witness.
    """
    rng = np.random.default_rng(seed)
    violations, witness = 0, None
    for _ in range(trials):
        q = _random_box(rng, s.window)
        axis = int(rng.integers(s.dim))
        at = q.lo[axis] + rng.uniform(0.1, 0.9) * (q.hi[axis] - q.lo[axis])
        q1, q2 = q.split(axis, at)
        fq, f1, f2 = F(s, q), F(s, q1), F(s, q2)
        if fq > f1 + f2 + tol:
            violations += 1
            if witness is None:
                witness = {"Q": q, "Q1": q1, "Q2": q2, "F(Q)": fq, "F(Q1)": f1, "F(Q2)": f2}
    return CheckResult("fail" if violations else "pass", trials, trials, violations, witness)


def _config(s, q):
    return s.points[q.contains_points(s.points, TOL_BOUNDARY)]


def check_invariance(F, s, trials=50, seed=0, match_tol=1e-9, tol=0.0):
    """``F(Q) = F(t + Q)`` whenever ``t`` carries ``Q``'s configuration onto ``t + Q``'s.

    Translations come from locater sets of a ball around ``Q``, and each
    candidate pair is re-verified point by point before ``F`` is compared.
    """
    rng = np.random.default_rng(seed)
    tested, violations, witness = 0, 0, None
    for _ in range(trials):
        q = _random_box(rng, s.window, 0.05, 0.25)
        c = np.asarray(q.center)
        d, i = s.index.nearest(c[None, :])
        x = int(i[0])
        rho = float(d[0]) + 0.5 * float(np.linalg.norm(q.sides)) + 1e-6
        if not s.window.ball_inside(s.points[x], rho)[0]:
            continue
        try:
            loc = locater_set(s, BallPattern.at_index(s, x, rho), s.window)
        except EmptyRegionError:
            continue
        others = loc.indices[loc.indices != x]
        if len(others) == 0:
            continue
        y = int(others[rng.integers(len(others))])
        t = s.points[y] - s.points[x]
        qt = q.translate(t)
        if not s.window.contains_box(qt, 1e-9):
            continue
        if not patches_match(_config(s, q) + t, _config(s, qt), match_tol):
            continue
        tested += 1
        a, b = F(s, q), F(s, qt)
        if abs(a - b) > tol:
            violations += 1
            if witness is None:
                witness = {"Q": q, "t": tuple(float(v) for v in t), "F(Q)": a, "F(t+Q)": b}
    if tested == 0:
        status = "inconclusive"
    else:
        status = "fail" if violations else "pass"
    return CheckResult(status, trials, tested, violations, witness)


@dataclass
class LimitEstimate:
    sequence: list  # (side, F(C) / |C|)
    mu: float
    cauchy: float  # largest pairwise deviation among tail entries
    tail: list

    @property
    def tail_values(self):
        return [self.sequence[k][1] for k in self.tail]


def cube_limit(F, s, fam):
    """``F(C) / |C|`` along window-centred cubes; ``mu`` is the tail mean."""
    seq = []
    for side in fam.sides:
        cube = fam.centered(side)
        if not s.window.contains_box(cube, 1e-9):
            raise ValidationError(f"cube of side {side} escapes the window")
        seq.append((side, F(s, cube) / cube.volume))
    tail = fam.tail
    vals = [seq[k][1] for k in tail]
    mu = math.fsum(vals) / len(vals)
    cauchy = max((abs(a - b) for a, b in itertools.combinations(vals, 2)), default=0.0)
    return LimitEstimate(seq, mu, cauchy, tail)


def pattern_frequency(s, pattern, fam):
    """Copies of ``pattern`` per unit volume along the cube family."""
    return cube_limit(builtin_copies(pattern), s, fam)


def gap_type_frequencies(s, fam, radius=1.2):
    """Share of each right-hand gap type in a 1-D sample.

    Classes at ``radius`` are grouped by the distance to the next point
    (``None`` when that point lies beyond ``radius``); shares sum to one.
    """
    if s.dim != 1:
        raise ValidationError("gap types are defined for one-dimensional samples")
    totals = {}
    for p in patch_classes(s, radius):
        patch = s.points[s.index.ball(s.points[p.index], radius + TOL_BOUNDARY)[1], 0] - p.center[0]
        right = patch[patch > TOL_BOUNDARY]
        key = None if len(right) == 0 else round(float(right.min()), 9)
        totals[key] = totals.get(key, 0.0) + pattern_frequency(s, p, fam).mu
    total = math.fsum(totals.values())
    return {k: v / total for k, v in totals.items()}

"""Repetitivity and repulsion constants, the inradius lemma, and a consistency report.

Every quantity is measured on the locater sets of the patch classes found
at each radius of a grid. The locater sets are cached on the sample, so
the constants and the uniformity estimate read the same sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .densities import CubeFamily, weight_estimate
from .errors import InsufficientWindowError, UndefinedRadiusError, ValidationError
from .pointset import TOL_BOUNDARY, packing_radius, safe_covering_radius
from .voronoi import locater_sample, pattern_grid, set_distortion, uniformity_estimate

LABEL = "empirical, finite-window"


@dataclass
class ConstantEstimate:
    """Extremum of a locater-set ratio over a radius grid.

    ``rows`` holds ``(R, pattern, value)`` for every class that could be
    measured; ``excluded`` counts those whose locater set was too sparse.
    """

    name: str
    value: float
    argext: object
    radius_grid: list
    rows: list = field(default_factory=list, repr=False)
    excluded: int = 0

    def per_radius(self, reduce=max):
        out = {}
        for R, _, v in self.rows:
            out[R] = reduce(out[R], v) if R in out else v
        return out


def _locater_ratios(s, radius_grid, measure, tol_patch, tol_boundary):
    rows, excluded = [], 0
    for R, reps in pattern_grid(s, radius_grid, tol_patch, tol_boundary):
        for p in reps:
            try:
                g = locater_sample(s, p, tol_patch, tol_boundary)
                rows.append((R, p, measure(g) / R))
            except (InsufficientWindowError, UndefinedRadiusError):
                excluded += 1
    return rows, excluded


def _lr_measure(g):
    r, _ = safe_covering_radius(g)
    return r


def lr_constant(s, radius_grid, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """Largest ``r_cov(L_P) / R`` over the grid (a lower bound on the supremum)."""
    grid = _grid(radius_grid)
    rows, excluded = _locater_ratios(s, grid, _lr_measure, tol_patch, tol_boundary)
    if not rows:
        raise InsufficientWindowError("no locater set admits a covering-radius measurement")
    k = max(range(len(rows)), key=lambda i: rows[i][2])
    return ConstantEstimate("lr", rows[k][2], rows[k][1], grid, rows, excluded)


def rp_constant(s, radius_grid, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """Smallest ``r_pack(L_P) / R`` over the grid (an upper bound on the infimum)."""
    grid = _grid(radius_grid)
    rows, excluded = _locater_ratios(s, grid, packing_radius, tol_patch, tol_boundary)
    if not rows:
        raise InsufficientWindowError("no locater set has two members")
    k = min(range(len(rows)), key=lambda i: rows[i][2])
    return ConstantEstimate("rp", rows[k][2], rows[k][1], grid, rows, excluded)


def _grid(radius_grid):
    grid = [float(r) for r in radius_grid]
    if not grid:
        raise ValidationError("empty radius grid")
    if any(r <= 0 for r in grid):
        raise ValidationError("radii must be positive")
    return grid


@dataclass(frozen=True)
class HarmonicCheck:
    n: int
    m: int
    total: float
    bound: float

    @property
    def passed(self):
        return self.total >= self.bound


def harmonic_lower_bound(n, m):
    """``sum_{k=n}^m 1/k`` against ``log((m + 1) / n)``."""
    n, m = int(n), int(m)
    if n < 1 or m <= n:
        raise ValidationError(f"need m > n >= 1, got n={n}, m={m}")
    total = math.fsum(1.0 / k for k in range(n, m + 1))
    return HarmonicCheck(n, m, total, math.log((m + 1) / n))


@lru_cache(maxsize=4)
def _harmonic_prefix(m_max):
    # H[j] = sum_{k<=j} 1/k, each prefix correctly rounded
    out = np.zeros(m_max + 1)
    terms = []
    for j in range(1, m_max + 1):
        terms.append(1.0 / j)
        out[j] = math.fsum(terms)
    return out


def harmonic_sweep(m_max):
    """Margin ``sum - bound`` for every pair ``1 <= n < m <= m_max``.

    Returns an ``(m_max + 1, m_max + 1)`` array, NaN where ``m <= n``.
    """
    H = _harmonic_prefix(int(m_max))
    idx = np.arange(m_max + 1)
    n, m = np.meshgrid(idx, idx, indexing="ij")
    valid = (n >= 1) & (m > n)
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = H[m] - H[np.maximum(n - 1, 0)] - np.log((m + 1.0) / n)
    return np.where(valid, margin, np.nan)


def rip_constant(dim, w):
    """``max(2, 4 exp(6^N / (2 w N)))``; infinite when the exponent overflows."""
    if w <= 0:
        raise ValidationError("the weight must be positive for the bound to be meaningful")
    try:
        return max(2.0, 4.0 * math.exp(6.0 ** dim / (2.0 * w * dim)))
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class LemmaRipCheck:
    pattern: object
    measured: float  # max inradius of the interior locater-set cells
    constant: float
    bound: float
    w: float
    interior_sites: int

    @property
    def passed(self):
        return self.measured <= self.bound


def lemma_rip_check(s, pattern, w, tol_patch=None, tol_boundary=TOL_BOUNDARY):
    """Largest inradius of the locater-set cells of ``pattern`` against ``c R``."""
    if pattern.radius < 3:
        raise ValidationError("the inradius bound applies to patterns of radius >= 3")
    c = rip_constant(s.dim, w)
    g = locater_sample(s, pattern, tol_patch, tol_boundary)
    rep = set_distortion(g)
    measured = float(rep.r_in.max())
    return LemmaRipCheck(pattern, measured, c, c * pattern.radius, float(w), len(rep.sites))


@dataclass
class ConsistencyVerdict:
    label: str
    estimates: dict  # name -> value or None when not computed
    rows: list  # {"relation", "observed", "status"}
    absent: list
    note: str = LABEL


def _row(relation, observed, ok):
    status = "not evaluated" if ok is None else ("consistent" if ok else "inconsistent")
    return {"relation": relation, "observed": observed, "status": status}


def _strictly_increasing(values):
    return all(b > a for a, b in zip(values, values[1:]))


def consistency_report(s, radius_grid, fam=None, tol_patch=None, tol_boundary=TOL_BOUNDARY,
                       parts=None):
    """Estimates of all five properties plus cross-checks relating them.

    ``parts`` may hold estimates computed earlier on the same grid, keyed
    ``LR``, ``RP``, ``PW``, ``PQ`` and ``U``; they are reused as they are.
    Rows only compare computed numbers with each other; they say nothing
    about the infinite set the window was cut from.
    """
    grid = _grid(radius_grid)
    est, absent = {}, []
    parts = dict(parts or {})

    def attempt(name, fn):
        if name in parts:
            est[name] = float(parts[name].value)
            return
        try:
            parts[name] = fn()
            est[name] = float(parts[name].value)
        except (InsufficientWindowError, ValidationError) as exc:
            est[name] = None
            absent.append(f"{name}: {exc}")

    if fam is None:
        try:
            fam = CubeFamily.for_window(s.window)
        except InsufficientWindowError as exc:
            absent.append(f"densities: {exc}")
    attempt("LR", lambda: lr_constant(s, grid, tol_patch, tol_boundary))
    attempt("RP", lambda: rp_constant(s, grid, tol_patch, tol_boundary))
    dens_grid = [r for r in grid if r >= 1.0]
    if fam is not None:
        attempt("PW", lambda: weight_estimate(s, fam, dens_grid, "PW", tol_patch, tol_boundary))
        attempt("PQ", lambda: weight_estimate(s, fam, dens_grid, "PQ", tol_patch, tol_boundary))
    attempt("U", lambda: uniformity_estimate(s, grid, tol_patch, tol_boundary))

    rows = []
    lr, rp, w, wq, u = (est.get(k) for k in ("LR", "RP", "PW", "PQ", "U"))
    have = lambda *xs: all(x is not None for x in xs)  # noqa: E731

    rows.append(_row("(LR) => (RP): rp > 0 when lr finite",
                     {"lr": lr, "rp": rp}, rp > 0 and math.isfinite(lr) if have(lr, rp) else None))
    rows.append(_row("(LR) => (U): U finite when lr finite",
                     {"lr": lr, "U": u}, math.isfinite(u) if have(lr, u) else None))
    rows.append(_row("(LR) => (PQ): w' > 0 when lr finite",
                     {"lr": lr, "w'": wq}, wq > 0 if have(lr, wq) else None))
    rows.append(_row("(PQ) => (PW): w' <= w and w > 0",
                     {"w'": wq, "w": w}, (wq <= w and w > 0) if have(w, wq) else None))

    # spot check r_cov(L_P) <= c * sigma * R with sigma the uniformity estimate
    if have(u, wq) and wq > 0 and "LR" in parts:
        c = rip_constant(s.dim, wq)
        worst = max(v / (c * u) for _, _, v in parts["LR"].rows)
        rows.append(_row("r_cov(L_P) <= c * sigma * R", {"max_ratio": worst, "c": c, "sigma": u},
                         worst <= 1.0))
    else:
        rows.append(_row("r_cov(L_P) <= c * sigma * R", None, None))

    # growth diagnostics along prefixes of the grid
    if "LR" in parts and len(grid) > 1:
        prefix = [max(v for R, _, v in parts["LR"].rows if R <= grid[k])
                  for k in range(1, len(grid))
                  if any(R <= grid[k] for R, _, _ in parts["LR"].rows)]
        rows.append(_row("lr along grid prefixes", {"values": prefix,
                         "strictly_increasing": _strictly_increasing(prefix)}, None))
    if "PW" in parts:
        per = {}
        for rep in parts["PW"].reports:
            R = rep.pattern.radius
            per[R] = min(per.get(R, math.inf), rep.estimate)
        seq = [per[R] for R in sorted(per)]
        rows.append(_row("w per radius", {"radii": sorted(per), "values": seq,
                         "decaying": all(b < a for a, b in zip(seq, seq[1:]))}, None))
    return ConsistencyVerdict(s.label, est, rows, absent)

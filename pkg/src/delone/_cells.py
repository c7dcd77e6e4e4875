"""Convex cell construction by halfspace intersection.

Shared by the exact covering radius and the Voronoi module. A cell is the
set of points at least as close to ``site`` as to each listed neighbour,
optionally clipped to a box. Dimension 2 uses polygon clipping; higher
dimensions go through qhull.
"""

from __future__ import annotations

import numpy as np

VERTEX_MERGE_TOL = 1e-9


def bisector_halfspaces(site, neighbors):
    """Rows ``(normal, offset)`` with the cell given by ``normal @ p <= offset``."""
    site = np.asarray(site, dtype=float)
    nb = np.atleast_2d(np.asarray(neighbors, dtype=float))
    normals = nb - site
    offsets = normals @ site + 0.5 * np.sum(normals * normals, axis=1)
    return normals, offsets


def box_halfspaces(lo, hi):
    dim = len(lo)
    eye = np.eye(dim)
    normals = np.vstack([eye, -eye])
    offsets = np.concatenate([np.asarray(hi, float), -np.asarray(lo, float)])
    return normals, offsets


def _clip_polygon(poly, normal, offset):
    # one Sutherland-Hodgman pass against normal @ p <= offset
    if len(poly) == 0:
        return poly
    vals = poly @ normal - offset
    inside = vals <= 0.0
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        if inside[i]:
            out.append(poly[i])
        if inside[i] != inside[j]:
            t = vals[i] / (vals[i] - vals[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out)


def _merge_close(poly, tol=VERTEX_MERGE_TOL):
    if len(poly) < 2:
        return poly
    keep = [poly[0]]
    for p in poly[1:]:
        if np.max(np.abs(p - keep[-1])) > tol:
            keep.append(p)
    if len(keep) > 1 and np.max(np.abs(keep[0] - keep[-1])) <= tol:
        keep.pop()
    return np.array(keep)


def polygon_cell(site, normals, offsets, lo, hi):
    """Vertices (counter-clockwise) of the 2-D cell clipped to box ``[lo, hi]``."""
    poly = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]], dtype=float)
    order = np.argsort(offsets - normals @ np.asarray(site, float))
    for k in order:
        poly = _clip_polygon(poly, normals[k], offsets[k])
        if len(poly) == 0:
            break
    return _merge_close(poly)


def polygon_area(poly):
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polytope_cell(site, normals, offsets, lo, hi):
    """Vertices of the cell clipped to ``[lo, hi]`` in any dimension >= 2.

    Returns an empty array when the clipped cell has no interior.
    """
    from scipy.spatial import ConvexHull, HalfspaceIntersection
    from scipy.spatial import QhullError

    site = np.asarray(site, dtype=float)
    if site.shape[0] == 2:
        return polygon_cell(site, normals, offsets, lo, hi)
    bn, bo = box_halfspaces(lo, hi)
    A = np.vstack([normals, bn]) if len(normals) else bn
    b = np.concatenate([offsets, bo]) if len(offsets) else bo
    interior = _interior_point(A, b)
    if interior is None:
        return np.zeros((0, site.shape[0]))
    try:
        hs = HalfspaceIntersection(np.hstack([A, -b[:, None]]), interior)
    except QhullError:
        return np.zeros((0, site.shape[0]))
    verts = hs.intersections
    verts = verts[np.all(np.isfinite(verts), axis=1)]
    try:
        hull = ConvexHull(verts)
        verts = verts[hull.vertices]
    except QhullError:
        pass
    return _dedupe(verts)


def polytope_volume(verts):
    if len(verts) == 0:
        return 0.0
    if verts.shape[1] == 2:
        return polygon_area(verts)
    from scipy.spatial import ConvexHull, QhullError

    try:
        return float(ConvexHull(verts).volume)
    except QhullError:
        return 0.0


def _interior_point(A, b):
    # Chebyshev center by linear programming
    from scipy.optimize import linprog

    norms = np.linalg.norm(A, axis=1)
    dim = A.shape[1]
    c = np.zeros(dim + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.hstack([A, norms[:, None]]), b_ub=b,
                  bounds=[(None, None)] * dim + [(0, None)], method="highs")
    if not res.success or res.x[-1] <= 1e-12:
        return None
    return res.x[:-1]


def _dedupe(verts, tol=VERTEX_MERGE_TOL):
    out = []
    for v in verts:
        if not any(np.max(np.abs(v - u)) <= tol for u in out):
            out.append(v)
    return np.array(out) if out else np.zeros((0, verts.shape[1]))

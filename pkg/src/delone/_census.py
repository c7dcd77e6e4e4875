"""Patch-class census at one radius.

Patches ``(sample - x) ∩ B_R`` are hashed by quantising offsets to a grid of
``tol_patch / 4`` and grouping identical quantised multisets. Quantisation
can split one class across a cell boundary, so distinct keys of equal size
are re-compared with the exact tolerance matcher and merged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MERGE_CHECK_CAP = 500


def patches_match(a, b, tol):
    """True iff the point sets ``a`` and ``b`` agree up to ``tol`` (order-free).

    Each point of ``a`` must have exactly one partner in ``b`` within ``tol``
    and the partners must be distinct.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        return False
    if a.size == 0:
        return True
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    j = np.argmin(d, axis=1)
    if np.any(d[np.arange(len(a)), j] > tol):
        return False
    return len(np.unique(j)) == len(a)


@dataclass
class PatchCensus:
    radius: float
    tol_patch: float
    tol_boundary: float
    center_radius: float
    centers: np.ndarray  # sample indices used as centers
    labels: np.ndarray  # class id per sample point, -1 when not a center
    reps: np.ndarray  # representative sample index per class
    counts: np.ndarray = field(repr=False)

    @property
    def n_classes(self):
        return len(self.reps)

    def members(self, cls):
        return np.nonzero(self.labels == cls)[0]


def neighbor_offsets(sample, centers, radius):
    """CSR offsets and translated neighbour coordinates for each center."""
    pts = sample.points
    offs, nb = sample.index.ball(pts[centers], radius)
    owner = np.repeat(np.arange(len(centers)), np.diff(offs))
    return offs, pts[nb] - pts[centers][owner], owner


def build_census(sample, radius, tol_patch, tol_boundary, center_radius=None):
    if center_radius is None:
        center_radius = radius
    pts = sample.points
    n, dim = pts.shape
    inside = sample.window.ball_inside(pts, center_radius, tol_boundary)
    centers = np.nonzero(inside)[0]
    labels = np.full(n, -1, dtype=np.int64)
    if len(centers) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return PatchCensus(radius, tol_patch, tol_boundary, center_radius,
                           centers, labels, empty, empty)

    offs, rel, owner = neighbor_offsets(sample, centers, radius + tol_boundary)
    quantum = tol_patch / 4.0
    q = np.rint(rel / quantum).astype(np.int64)
    keys = tuple(q[:, k] for k in range(dim - 1, -1, -1)) + (owner,)
    order = np.lexsort(keys)
    q = q[order]
    counts = np.diff(offs)
    maxk = int(counts.max())
    rank = np.arange(len(owner)) - offs[owner]
    padded = np.full((len(centers), maxk * dim + 1), np.iinfo(np.int64).max, dtype=np.int64)
    padded[:, 0] = counts
    for k in range(dim):
        padded[owner, 1 + rank * dim + k] = q[:, k]
    _, key_of = np.unique(padded, axis=0, return_inverse=True)
    key_of = key_of.reshape(-1)

    # representative = smallest sample index (points are stored lexicographically)
    n_keys = int(key_of.max()) + 1
    rep_of_key = np.full(n_keys, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(rep_of_key, key_of, centers)

    parent = np.arange(n_keys)
    if n_keys <= MERGE_CHECK_CAP:
        _merge_split_keys(parent, rep_of_key, counts, key_of, offs, rel, centers, tol_patch)
    root = _roots(parent)
    # canonical class ids ordered by representative
    root_rep = np.full(n_keys, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(root_rep, root, rep_of_key)
    roots = np.unique(root)
    reps = root_rep[roots]
    order_cls = np.argsort(reps, kind="stable")
    cls_of_root = np.empty(n_keys, dtype=np.int64)
    cls_of_root[roots[order_cls]] = np.arange(len(roots))
    labels[centers] = cls_of_root[root[key_of]]
    reps = reps[order_cls]
    class_counts = np.bincount(labels[centers], minlength=len(reps))
    return PatchCensus(radius, tol_patch, tol_boundary, center_radius,
                       centers, labels, reps, class_counts)


def _roots(parent):
    root = parent.copy()
    while True:
        nxt = root[root]
        if np.array_equal(nxt, root):
            return root
        root = nxt


def _merge_split_keys(parent, rep_of_key, counts, key_of, offs, rel, centers, tol):
    pos_of_center = {int(c): i for i, c in enumerate(centers)}
    size_of_key = np.zeros(len(rep_of_key), dtype=np.int64)
    size_of_key[key_of] = counts
    patches = []
    norms = []
    for key, rep in enumerate(rep_of_key):
        i = pos_of_center[int(rep)]
        p = rel[offs[i]:offs[i + 1]]
        patches.append(p)
        norms.append(np.sort(np.sqrt((p * p).sum(axis=1))))
    for size in np.unique(size_of_key):
        group = np.nonzero(size_of_key == size)[0]
        if len(group) < 2:
            continue
        nm = np.array([norms[g] for g in group])
        close = np.all(np.abs(nm[:, None, :] - nm[None, :, :]) <= tol, axis=2)
        ii, jj = np.nonzero(np.triu(close, 1))
        for a, b in zip(group[ii], group[jj]):
            ra, rb = _find(parent, a), _find(parent, b)
            if ra != rb and patches_match(patches[a], patches[b], tol):
                parent[max(ra, rb)] = min(ra, rb)


def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a

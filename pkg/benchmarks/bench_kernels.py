"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--points 20000]

Each kernel runs on identical inputs under every importable backend; the
outputs are checked for agreement before timings are reported.
"""

import argparse
import timeit

import numpy as np

from delone import kernels
from delone.pointset import BoxRegion, GridIndex


def _jittered_lattice(rng, side, dim):
    axes = [np.arange(side + 1, dtype=float)] * dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    return np.clip(pts + rng.uniform(-0.3, 0.3, size=pts.shape), 0, side)


def _disk_graph(rng, n, side, reach):
    pts = rng.uniform(0, side, size=(n, 2))
    close = np.linalg.norm(pts[:, None] - pts[None, :], axis=2) <= reach
    np.fill_diagonal(close, False)
    weights = np.uint64(1) << np.arange(n, dtype=np.uint64)
    return np.array([np.bitwise_or.reduce(weights[row]) if row.any() else np.uint64(0) for row in close],
                    dtype=np.uint64)


def cases(n_points, seed=0):
    rng = np.random.default_rng(seed)
    out = {}
    for dim in (1, 2):
        side = round(n_points ** (1 / dim))
        pts = _jittered_lattice(rng, side, dim)
        idx = GridIndex(pts, BoxRegion((0.0,) * dim, (float(side),) * dim))
        q = np.ascontiguousarray(rng.uniform(0, side, size=(2000, dim)))
        grid = (idx.sorted_points, idx.cell_start, idx.shape, idx.lo, idx.cell)
        out[f"nn_query {dim}D n={len(pts)}"] = (
            "nn_query", grid + (q, np.full(len(q), -1, dtype=np.int64)))
        out[f"ball_query {dim}D n={len(pts)} r=3"] = ("ball_query", grid + (q, 3.0))
    adj = _disk_graph(rng, 40, 8.0, 2.0)
    out["mis_size 40 vertices"] = ("mis_size", (adj,))
    return out


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=20000)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not importable; timing the python backend only")
    names = sorted(backends)
    print(f"{'case':<34}" + "".join(f"{n:>12}" for n in names) + (f"{'speedup':>10}" if len(names) > 1 else ""))
    for label, (fn, args_) in cases(args.points).items():
        results = {n: getattr(backends[n], fn)(*args_) for n in names}
        if len(names) > 1 and not _same(results["cython"], results["python"]):
            raise SystemExit(f"backends disagree on {label}")
        times = {n: min(timeit.repeat(lambda: getattr(backends[n], fn)(*args_), number=1, repeat=args.repeat))
                 for n in names}
        row = f"{label:<34}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in names)
        if len(names) > 1:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()

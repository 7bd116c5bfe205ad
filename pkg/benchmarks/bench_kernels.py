"""Compare the numba and numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat 200] [--steps 26]
"""

import argparse
import timeit

import numpy as np

from maneuver_planner.kernels import numba_backend, numpy_backend


def boxes(rng, n):
    return np.column_stack([rng.uniform(-5, 5, n), rng.uniform(-5, 5, n), rng.uniform(-3.2, 3.2, n),
                            rng.uniform(1.0, 3.0, n), rng.uniform(0.5, 1.2, n)])


def polyline(n):
    x = np.linspace(0.0, 500.0, n)
    pts = np.column_stack([x, 10.0 * np.sin(x / 40.0)])
    return pts[:-1, 0], pts[:-1, 1], np.diff(pts[:, 0]), np.diff(pts[:, 1])


def bench(label, fn, repeat):
    fn()  # compile / warm caches
    t = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<8s} {t * 1e6:10.1f} us")
    return t


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--steps", type=int, default=26, help="boxes per overlap call (one horizon)")
    ap.add_argument("--points", type=int, default=26, help="query points per projection call")
    ap.add_argument("--segments", type=int, default=1000)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = [("numpy", numpy_backend)] + ([("numba", numba_backend)] if numba_backend else [])

    a, b = boxes(rng, args.steps), boxes(rng, args.steps)
    ref = numpy_backend.obb_overlap_steps(a, b)
    print(f"obb_overlap_steps, {args.steps} box pairs")
    times = {}
    for name, mod in backends:
        assert np.array_equal(mod.obb_overlap_steps(a, b), ref)
        times[name] = bench(name, lambda: mod.obb_overlap_steps(a, b), args.repeat)
    if "numba" in times:
        print(f"  speedup  {times['numpy'] / times['numba']:10.1f}x")

    x0, y0, dx, dy = polyline(args.segments + 1)
    px, py = rng.uniform(0, 500, args.points), rng.uniform(-15, 15, args.points)
    ref = numpy_backend.nearest_segment(px, py, x0, y0, dx, dy)
    print(f"nearest_segment, {args.points} points x {args.segments} segments")
    times = {}
    for name, mod in backends:
        idx, tau = mod.nearest_segment(px, py, x0, y0, dx, dy)
        assert np.array_equal(idx, ref[0]) and np.allclose(tau, ref[1])
        times[name] = bench(name, lambda: mod.nearest_segment(px, py, x0, y0, dx, dy), args.repeat)
    if "numba" in times:
        print(f"  speedup  {times['numpy'] / times['numba']:10.1f}x")


if __name__ == "__main__":
    main()

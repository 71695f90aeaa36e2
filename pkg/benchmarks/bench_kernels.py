"""Time each hot kernel with numba against its fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0] [--only NAME ...]

The compiled column is missing when numba is unavailable or disabled through
MMGEO_DISABLE_NUMBA.  Compilation happens once, outside the timed region.
Kernels whose fallback is the same loop run as plain python there, which is
what the package does when numba is off.
"""
import argparse
import time

import numpy as np

from mmgeo import _accel, _kernels


def _metric(g, n):
    pts = g.standard_normal((n, 3))
    return np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))


def _inputs(name, g, scale):
    def size(n):
        return max(4, int(n * scale))

    if name == "line_transport":
        n = size(4000)
        x, y = np.sort(g.random(n)), np.sort(g.random(n))
        mu, nu = np.full(n, 1 / n), np.full(n, 1 / n)
        return (x, mu, y, nu, 0.01)
    if name == "bipartite_maxflow":
        n = size(120)
        d = g.random((n, n))
        return (d <= 0.3, np.full(n, 1 / n), np.full(n, 1 / n))
    if name == "max_weight_clique":
        n = min(size(40), 62)
        adj = g.random((n, n)) < 0.5
        adj = np.triu(adj, 1)
        adj = adj | adj.T
        return (adj, g.random(n))
    if name == "greedy_keep":
        n = size(120)
        dx, dy = _metric(g, n), _metric(g, n)
        xa = np.arange(n, dtype=np.int64)
        ya = g.permutation(n).astype(np.int64)
        return (dx, dy, xa, ya, np.full(n, 1 / n), 0.5)
    if name == "anneal_alignment":
        q = size(48)
        iters = size(20_000)
        temps = 0.25 * (4e-4) ** (np.arange(iters) / (iters - 1))
        return (_metric(g, q), _metric(g, q), np.arange(q, dtype=np.int64), np.zeros(q, dtype=np.bool_),
                g.random(iters), g.integers(0, q, iters).astype(np.int64),
                g.integers(0, q, iters).astype(np.int64), g.random(iters), temps)
    if name == "triangle_violation":
        return (_metric(g, size(400)), 1e-9)
    if name == "triplet_violation":
        s = np.linspace(0, 5, size(800))
        return (np.minimum(s, 2.0),)
    if name == "pair_norms":
        return (g.standard_normal((size(600), 20)),)
    raise KeyError(name)


def _best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="multiplies every problem size")
    ap.add_argument("--only", nargs="*", choices=sorted(_kernels.KERNELS))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    names = args.only or list(_kernels.KERNELS)
    print(f"backend at import: {_accel.BACKEND}")
    print(f"{'kernel':<20} {'numba [s]':>11} {'fallback [s]':>13} {'speedup':>9}")
    for name in names:
        loop_fn, fallback = _kernels.KERNELS[name]
        inputs = _inputs(name, np.random.default_rng(args.seed), args.scale)
        # pure-python loops are slow; one run is enough to see the gap
        reps = 1 if fallback is loop_fn else args.repeat
        t_fb = _best(fallback, inputs, reps)
        if _accel.USE_NUMBA:
            fast = _accel.compile_loop(loop_fn, _accel.REDUCE_FLAGS if name == "triangle_violation" else False)
            fast(*inputs)  # compile
            t_nb = _best(fast, inputs, args.repeat)
            print(f"{name:<20} {t_nb:>11.5f} {t_fb:>13.5f} {t_fb / max(t_nb, 1e-9):>8.1f}x")
        else:
            print(f"{name:<20} {'-':>11} {t_fb:>13.5f} {'-':>9}")


if __name__ == "__main__":
    main()

"""Compare the numba and numpy variants of the hot kernels.

    python3 benchmarks/bench_kernels.py [--n 200] [--bond 64] [--repeat 5]

Each kernel is run on identical inputs through both variants. The script
checks the outputs agree to 1e-12 and prints the best-of-``repeat`` wall
time of each, plus the speed-up. The first numba call (compilation or cache
load) is excluded from timing.
"""
import argparse
import timeit

import numpy as np

from fmps import kernels
from fmps.grid import make_grid


def _inputs(n: int, bond: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    g = make_grid((-6.0, 6.0), n)
    block = rng.normal(size=(n, n, bond)) + 1j * rng.normal(size=(n, n, bond))
    table = np.empty((4, n, n, bond), dtype=np.complex128)
    table[0] = block
    kernels.clamped_node_slopes(block, 0, out=table[1])
    kernels.clamped_node_slopes(block, 1, out=table[2])
    kernels.clamped_node_slopes(table[1], 1, out=table[3])

    c, s = np.cos(0.7), np.sin(0.7)
    x1, x2 = np.meshgrid(g.points, g.points, indexing="ij")
    i, u, in1 = kernels.locate((c * x1 + s * x2).ravel(), g.lo, g.h, n)
    j, v, in2 = kernels.locate((-s * x1 + c * x2).ravel(), g.lo, g.h, n)

    f = block[:, 0, :].copy()
    hm = kernels.clamped_node_slopes(f)
    q = rng.uniform(g.lo, g.hi, size=4 * n)
    qi, qu, qin = kernels.locate(q, g.lo, g.h, n)

    slab = np.ascontiguousarray(block.reshape(1, n, n * bond))
    inv = kernels._thomas_coefficients(n - 2)
    q_new = make_grid((-5.0, 5.0), n).points
    return {
        "node_slopes": (
            lambda fn: (fn(slab, inv, out := np.empty_like(slab)), out)[1],
            kernels._node_slopes_numpy, kernels._node_slopes_jit),
        "eval_1d": (
            lambda fn: fn(f, hm, qi, qu, qin, False),
            kernels._eval_1d_numpy, kernels._eval_1d_jit),
        "eval_2d": (
            lambda fn: fn(table, i, u, j, v, in1 & in2),
            kernels._eval_2d_numpy, kernels._eval_2d_jit),
        "propagator": (
            lambda fn: fn(q_new, g.points, g.weights, 0.9),
            kernels._propagator_numpy, kernels._propagator_jit),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--bond", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"numba active by default: {kernels.USE_NUMBA}   n={args.n} bond={args.bond}")
    print(f"{'kernel':<12} {'numpy ms':>10} {'numba ms':>10} {'speed-up':>9} {'max |diff|':>11}")
    ok = True
    for name, (call, f_np, f_jit) in _inputs(args.n, args.bond).items():
        a = call(f_np)
        b = call(f_jit)  # warm-up
        diff = float(np.max(np.abs(a - b)))
        ok &= diff <= 1e-12 * max(1.0, float(np.max(np.abs(a))))
        t_np = min(timeit.repeat(lambda: call(f_np), number=1, repeat=args.repeat)) * 1e3
        t_jit = min(timeit.repeat(lambda: call(f_jit), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<12} {t_np:10.2f} {t_jit:10.2f} {t_np / t_jit:8.1f}x {diff:11.2e}")
    print("variants agree" if ok else "VARIANTS DISAGREE")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())

"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--size 300] [--repeat 20]

Each kernel runs once per backend before timing so numba compilation is
excluded. Outputs of the two backends are compared as a sanity check.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from dualfg.fusion import ellipse
from dualfg.kernels import _numba, _numpy


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _mog_state(h, w, k, rng):
    weight = rng.dirichlet(np.ones(k), size=(h, w))
    mean = rng.random((h, w, k))
    var = np.full((h, w, k), (15 / 255) ** 2)
    return weight, mean, var


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    n = args.size
    rng = np.random.default_rng(0)
    img = rng.random((n, n))
    mask = rng.random((n, n)) < 0.3
    se3, se5 = ellipse(3).bits.copy(), ellipse(5).bits.copy()
    x = rng.random((n, n))
    mog_args = (0.01, 2.5, 0.7, (15 / 255) ** 2, (2 / 255) ** 2)

    cases = {
        "min_filter r=7": lambda b: b.min_filter(img, 7),
        "erode 3x3": lambda b: b.erode(mask, se3),
        "dilate 5x5": lambda b: b.dilate(mask, se5),
        "label8": lambda b: b.label8(mask),
    }
    print(f"{'kernel':<16}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}  match")
    for name, fn in cases.items():
        a, b = fn(_numba), fn(_numpy)
        same = all(np.array_equal(u, v) for u, v in zip(a, b)) if isinstance(a, tuple) else np.array_equal(a, b)
        tn = _best_of(lambda: fn(_numba), args.repeat)
        tp = _best_of(lambda: fn(_numpy), args.repeat)
        print(f"{name:<16}{tn * 1e3:>10.3f}{tp * 1e3:>10.3f}{tp / tn:>9.1f}  {same}")

    # the MOG update mutates its state, so each call gets a fresh copy
    state = _mog_state(n, n, 3, rng)
    outs = []
    times = {}
    for label, backend in (("numba", _numba), ("numpy", _numpy)):
        w, m, v = (s.copy() for s in state)
        outs.append((backend.mog_update(w, m, v, x, *mog_args), w, m, v))
        best = float("inf")
        for _ in range(args.repeat):
            w, m, v = (s.copy() for s in state)
            t = time.perf_counter()
            backend.mog_update(w, m, v, x, *mog_args)
            best = min(best, time.perf_counter() - t)
        times[label] = best
    same = all(np.array_equal(u, v) for u, v in zip(*outs))
    print(f"{'mog_update K=3':<16}{times['numba'] * 1e3:>10.3f}{times['numpy'] * 1e3:>10.3f}"
          f"{times['numpy'] / times['numba']:>9.1f}  {same}")


if __name__ == "__main__":
    main()

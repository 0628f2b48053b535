"""Compiled vs pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from varlp_lab import _core


def cases(rng):
    yield "window_max_1d n=2^16 k=257", _core.window_max_1d, (rng.random(1 << 16), 257)
    yield "window_max_2d 512^2 k=33", _core.window_max_2d, (rng.random((512, 512)), 33)
    yield "min_complement_sum 16x16 (4,4)", _core.min_complement_sum, (rng.random((16, 16)), 4, 4)
    yield "min_complement_sum 20x20 (6,5)", _core.min_complement_sum, (rng.random((20, 20)), 6, 5)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = ["python"] + (["compiled"] if _core.BACKEND == "compiled" else [])
    print(f"{'case':34} " + " ".join(f"{b:>12}" for b in backends) + "     speedup")
    for name, fn, fargs in cases(rng):
        times = []
        for b in backends:
            fn(*fargs, backend=b)
            t = timeit.repeat(lambda: fn(*fargs, backend=b), number=1, repeat=args.repeat)
            times.append(min(t))
        speed = f"{times[0] / times[1]:10.1f}x" if len(times) == 2 else "         -"
        print(f"{name:34} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()

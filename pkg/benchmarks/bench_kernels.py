"""Time the compiled grid kernels against their pure-Python twins.

    python3 benchmarks/bench_kernels.py [--size 64] [--repeat 20]

Prints one line per (kernel, backend) with the best time per call and the
speedup of the compiled version.  Both backends are checked to agree first.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from rhombform import _kernels_py

try:
    from rhombform import _kernels
except ImportError:
    _kernels = None


def random_mask(size: int, density: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.ascontiguousarray((rng.random((size, size)) < density).astype(np.uint8))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--density", type=float, default=0.6)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return

    mask = random_mask(args.size, args.density, args.seed)
    si, sj = map(int, np.argwhere(mask)[0])
    cases = {
        "label(side)": lambda k: k.label(mask, 1, False),
        "label(corner)": lambda k: k.label(mask, 0, True),
        "bfs_distances": lambda k: k.bfs_distances(mask, si, sj),
    }

    for name, call in cases.items():
        a, b = call(_kernels), call(_kernels_py)
        if isinstance(a, tuple):
            assert a[1] == b[1] and np.array_equal(a[0], b[0]), name
        else:
            assert np.array_equal(a, b), name

    print(f"mask {args.size}x{args.size}, density {args.density}, best of {args.repeat}")
    for name, call in cases.items():
        times = {}
        for backend, mod in (("cython", _kernels), ("python", _kernels_py)):
            times[backend] = min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat))
            print(f"{name:15s} {backend:7s} {times[backend] * 1e3:9.3f} ms")
        print(f"{name:15s} speedup {times['python'] / times['cython']:8.1f}x")


if __name__ == "__main__":
    main()

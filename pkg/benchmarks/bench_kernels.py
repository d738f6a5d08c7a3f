"""Time the compiled lattice kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --grid 17 --repeat 5
"""

import argparse
import timeit

import numpy as np

from sdyang import kernels


def bench(n, repeat, threads):
    rng = np.random.default_rng(0)
    shape = (n,) * 4 + (2, 2)
    src = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    h = (1.0 / (n - 1),) * 4
    cases = {
        "diff": lambda: kernels.diff(src, 1, h[1]),
        "wirtinger": lambda: kernels.wirtinger(src, 1, h, conjugate=True),
    }
    kernels.set_threads(threads)
    rows = []
    for name, fn in cases.items():
        times = {}
        for backend in ("python", "compiled"):
            kernels.use_backend(backend)
            fn()
            times[backend] = min(timeit.repeat(fn, number=1, repeat=repeat))
        rows.append((name, times["python"], times["compiled"]))
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--grid", type=int, default=17)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()
    try:
        kernels.use_backend("compiled")
    except ImportError:
        raise SystemExit("compiled extension not built; run pip install -e . first")
    print(f"grid {args.grid}^4, 2x2 blocks, threads {args.threads}")
    print(f"{'kernel':<10} {'python s':>10} {'compiled s':>11} {'speedup':>8}")
    for name, tp, tc in bench(args.grid, args.repeat, args.threads):
        print(f"{name:<10} {tp:>10.4f} {tc:>11.4f} {tp / tc:>8.2f}")


if __name__ == "__main__":
    main()

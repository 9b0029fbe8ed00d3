"""Times the hot kernels under the numba and numpy backends.

Run: python benchmarks/bench_backends.py [--n 2000] [--repeats 5]

The numbers compare the same primitives the package dispatches through
GEOSHAP_BACKEND: boosted-tree split search, tree-ensemble prediction, and
the kernel-weighted local regressions behind SVC extraction and bandwidth
search. The numba timings exclude the first (compile) call.
"""

import argparse
import time

import numpy as np

from geoshap import GBTConfig, _accel, train_boosted_trees


def timeit(fn, repeats):
    fn()  # warm-up (JIT compile for the numba path)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    n = args.n

    if "numba" not in _accel.IMPLEMENTATIONS:
        print("numba backend unavailable (GEOSHAP_BACKEND=numpy?); nothing to compare")
        return

    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(rng.normal(size=(n, 4)))
    resid = np.ascontiguousarray(rng.normal(size=n))
    coords = np.ascontiguousarray(rng.uniform(0, 1, size=(n, 2)))
    xcol = np.ascontiguousarray(X[:, 0])
    g = np.ascontiguousarray(2 * xcol + rng.normal(0, 0.1, n))

    model = train_boosted_trees(X, 2 * X[:, 0] + np.sin(X[:, 1]),
                                GBTConfig(trees=100, depth=3))
    pred_args = (X, model.feat, model.thr, model.left, model.right, model.leaf,
                 model.offsets, model.rate, model.init_value)

    cases = {
        f"best_split          (node {n}x4)": lambda impl: impl["best_split"](X, resid, 3),
        f"gbt_predict         ({n} rows, 100 trees)": lambda impl: impl["gbt_predict"](*pred_args),
        f"local_linear        ({n} locations, bisquare k=50)":
            lambda impl: impl["local_linear"](coords, xcol, g, 50.0, _accel.KERNEL_BISQUARE, False),
        f"local_linear LOO-CV ({n} locations)":
            lambda impl: impl["local_linear"](coords, xcol, g, 50.0, _accel.KERNEL_BISQUARE, True),
    }

    print(f"active backend: {_accel.BACKEND}")
    print(f"{'kernel':<45} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, call in cases.items():
        t_np = timeit(lambda: call(_accel.IMPLEMENTATIONS["numpy"]), args.repeats)
        t_nb = timeit(lambda: call(_accel.IMPLEMENTATIONS["numba"]), args.repeats)
        print(f"{name:<45} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()

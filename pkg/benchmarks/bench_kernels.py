"""Time the numba and numpy kernel backends and check that they agree.

    python benchmarks/bench_kernels.py [ratings-file] [--repeat 3] [--k 300]

Without a file the ML-100K ratings are used if present, else a random
943 x 1682 matrix at the same density.
"""

import argparse
import time

import numpy as np

from cupcf import RatingsMatrix, load_ratings
from cupcf._accel import HAVE_NUMBA
from cupcf._kernels import neighbor_table, nhsm_matrix, pearson_matrix, predict_pairs
from cupcf.movielens import find_ml100k


def random_matrix(seed=0, n_users=943, n_items=1682, n_ratings=100_000):
    rng = np.random.default_rng(seed)
    flat = rng.choice(n_users * n_items, size=n_ratings, replace=False)
    return RatingsMatrix.from_triples(flat // n_items + 1, flat % n_items + 1, rng.integers(1, 6, n_ratings))


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", nargs="?")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--k", type=int, default=300)
    args = ap.parse_args(argv)

    path = args.input or find_ml100k()
    m = load_ratings(path) if path else random_matrix()
    print(f"data: {path or 'random'}  {m.n_users} users, {m.n_items} items, {m.n_ratings} ratings")
    if not HAVE_NUMBA:
        print("numba disabled; timing the numpy backend only")
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])

    if HAVE_NUMBA:  # compile outside the timed region
        small = random_matrix(1, 20, 30, 200)
        sim = pearson_matrix(small, "numba")
        nhsm_matrix(small, "numba")
        predict_pairs(small.grid, small.user_means, sim, neighbor_table(sim, 5),
                      np.zeros(3, np.int64), np.zeros(3, np.int64), "numba")

    rng = np.random.default_rng(0)
    users = rng.integers(0, m.n_users, 20_000)
    items = rng.integers(0, m.n_items, 20_000)
    results = {}
    print(f"{'kernel':<10}{'backend':<8}{'seconds':>10}")
    for name, fn in (("nhsm", nhsm_matrix), ("pearson", pearson_matrix)):
        for b in backends:
            secs, out = best_of(lambda: fn(m, b), args.repeat)
            results[name, b] = out
            print(f"{name:<10}{b:<8}{secs:>10.3f}")
    nbrs = neighbor_table(results["pearson", "numpy"], args.k)
    for b in backends:
        secs, out = best_of(lambda: predict_pairs(m.grid, m.user_means, results["pearson", "numpy"],
                                                  nbrs, users, items, b), args.repeat)
        results["predict", b] = out[0]
        print(f"{'predict':<10}{b:<8}{secs:>10.3f}")

    if HAVE_NUMBA:
        for name in ("nhsm", "pearson", "predict"):
            diff = np.max(np.abs(results[name, "numba"] - results[name, "numpy"]))
            print(f"max |numba - numpy| {name}: {diff:.2e}")


if __name__ == "__main__":
    main()

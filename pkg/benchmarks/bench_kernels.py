"""Time the compiled tree kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--rows 200] [--features 6] [--trees 200] [--repeat 3]

Both backends grow the same forests (checked before timing), so the numbers
compare like with like.
"""

import argparse
import time

import numpy as np

from snodri import _tree_py
from snodri.featsel import ForestHyperparams, train_forest


def _compiled():
    try:
        from snodri import _tree
    except ImportError:
        return None
    return _tree


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=200)
    ap.add_argument("--features", type=int, default=6)
    ap.add_argument("--trees", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    X = rng.standard_normal((args.rows, args.features))
    y = X[:, 0] + 0.3 * rng.standard_normal(args.rows)
    hp = ForestHyperparams(n_trees=args.trees, seed=1)

    compiled = _compiled()
    py_time = best_of(lambda: train_forest(X, y, hp, kernels=_tree_py), args.repeat)
    print(f"forest {args.trees} trees on {args.rows}x{args.features}")
    print(f"  python  {py_time:8.3f} s")
    if compiled is None:
        print("  cython  (extension not built)")
        return
    a = train_forest(X, y, hp, kernels=_tree_py)
    b = train_forest(X, y, hp, kernels=compiled)
    same = all(s.same_structure(t) for s, t in zip(a.trees, b.trees))
    cy_time = best_of(lambda: train_forest(X, y, hp, kernels=compiled), args.repeat)
    print(f"  cython  {cy_time:8.3f} s   speedup x{py_time / cy_time:.1f}   identical trees: {same}")


if __name__ == "__main__":
    main()

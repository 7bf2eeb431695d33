"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--trees N]

Workloads are sized like the final experiment: ~350 training rows of 292
binned ROC features, 3501-point scaled spectra.  Each workload also checks
that both backends return identical results.
"""

import argparse
import sys
import time
from contextlib import contextmanager

import numpy as np

from ramanplastic import _kernels_py, kernels
from ramanplastic.models import model_to_dict, train_forest
from ramanplastic.preprocess import FeatureMatrix

try:
    from ramanplastic import _kernels
except ImportError:
    _kernels = None

NAMES = ("scale_fill", "bin_means", "reconstruct", "best_split", "apply_tree")


@contextmanager
def backend(module):
    saved = {n: getattr(kernels, n) for n in NAMES}
    for n in NAMES:
        setattr(kernels, n, getattr(module, n))
    try:
        yield
    finally:
        for n, f in saved.items():
            setattr(kernels, n, f)


def best_of(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def workloads(n_trees):
    rng = np.random.default_rng(0)
    n, d, n_classes = 350, 292, 15
    y = rng.integers(0, n_classes, n).astype(np.intp)
    X = rng.normal(size=(n, d)) + y[:, None] * 0.05
    samples = np.arange(n, dtype=np.intp)
    sub = np.sort(rng.permutation(d)[:17]).astype(np.intp)
    pos = np.unique(rng.integers(100, 3400, 1600)).astype(np.intp)
    vals = rng.normal(size=len(pos))
    spectrum = rng.uniform(1, 100, 3501)
    ratios = rng.uniform(0.9, 1.1, 3500)
    fm = FeatureMatrix(X, [str(v) for v in y], [""] * n)

    def forest():
        return model_to_dict(train_forest(fm, n_trees=n_trees, seed=0))

    return {
        "scale_fill (3501 slots)": lambda k: k.scale_fill(pos, vals, 3501),
        "bin_means (3500 / 12)": lambda k: k.bin_means(spectrum, 12),
        "reconstruct (3501 points)": lambda k: k.reconstruct(spectrum, ratios, spectrum[0], 99.0),
        "best_split root, sqrt(d) features": lambda k: k.best_split(X, y, samples, sub, n_classes, k.ENTROPY),
        "best_split root, all 292 features": lambda k: k.best_split(X, y, samples, np.arange(d, dtype=np.intp),
                                                                    n_classes, k.ENTROPY),
        f"train_forest ({n_trees} trees)": lambda k: _with_backend(k, forest),
    }


def _with_backend(module, fn):
    with backend(module):
        return fn()


def same(a, b):
    if isinstance(a, np.ndarray):
        return a.tobytes() == b.tobytes()
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--trees", type=int, default=10)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"{'workload':<38}{'python':>12}{'cython':>12}{'speedup':>10}  identical")
    ok = True
    for name, fn in workloads(args.trees).items():
        t_py, r_py = best_of(lambda: fn(_kernels_py), args.repeat)
        t_cy, r_cy = best_of(lambda: fn(_kernels), args.repeat)
        match = same(r_py, r_cy)
        ok &= match
        print(f"{name:<38}{t_py * 1e3:>10.2f}ms{t_cy * 1e3:>10.2f}ms{t_py / t_cy:>9.1f}x  {match}")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())

"""The compiled kernels must agree bit for bit with the numpy fallback."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramanplastic import _kernels_py as py
from ramanplastic import kernels

cy = pytest.importorskip("ramanplastic._kernels", reason="compiled kernels not built")


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@given(st.lists(st.integers(0, 40), min_size=1, max_size=30), st.integers(0, 20))
def test_scale_fill(slots, extra):
    pos = np.array(sorted(set(slots)), dtype=np.intp)
    y = np.random.default_rng(len(slots)).normal(size=len(pos))
    n = int(pos[-1]) + 1 + extra
    assert cy.scale_fill(pos, y, n).tobytes() == py.scale_fill(pos, y, n).tobytes()


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=200), st.integers(1, 60))
def test_bin_means(values, width):
    v = np.array(values)
    assert cy.bin_means(v, width).tobytes() == py.bin_means(v, width).tobytes()


@given(st.integers(2, 80), st.floats(0, 99.9), st.integers(0, 2**32 - 1))
def test_reconstruct(n, pct, seed):
    rng = np.random.default_rng(seed)
    ref = rng.uniform(0.1, 100, n)
    r = rng.uniform(0.01, 3, n - 1)
    assert cy.reconstruct(ref, r, ref[0], pct).tobytes() == py.reconstruct(ref, r, ref[0], pct).tobytes()


@settings(max_examples=200)
@given(st.integers(2, 60), st.integers(1, 8), st.integers(2, 6), st.integers(0, 2**32 - 1), st.sampled_from([0, 1]))
def test_best_split(n, d, c, seed, criterion):
    rng = np.random.default_rng(seed)
    X = np.round(rng.normal(size=(n, d)), 1)
    y = rng.integers(0, c, n).astype(np.intp)
    samples = np.sort(rng.choice(n, size=rng.integers(2, n + 1), replace=True)).astype(np.intp)
    features = np.sort(rng.permutation(d)[: rng.integers(1, d + 1)]).astype(np.intp)
    a = cy.best_split(X, y, samples, features, c, criterion)
    b = py.best_split(X, y, samples, features, c, criterion)
    assert a == b


def test_apply_tree():
    from ramanplastic.models import train_tree
    from ramanplastic.preprocess import FeatureMatrix

    rng = np.random.default_rng(0)
    X = rng.normal(size=(80, 5))
    tree = train_tree(FeatureMatrix(X, list(rng.choice(list("ABCD"), 80)), [""] * 80))
    probe = rng.normal(size=(200, 5))
    args = (tree.feature, tree.threshold, tree.left, tree.right)
    assert np.array_equal(cy.apply_tree(probe, *args), py.apply_tree(probe, *args))


def test_read_only_inputs():
    v = np.arange(10.0)
    v.setflags(write=False)
    assert cy.bin_means(v, 3).tolist() == py.bin_means(v, 3).tolist()

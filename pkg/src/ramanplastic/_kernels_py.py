"""Pure numpy implementations of the hot loops.

Every function here has a twin in ``_kernels.pyx`` with the same signature.
Floating-point operations are ordered identically in both (sequential sums,
libm ``log2``) so the two backends agree bit for bit.
"""

import math

import numpy as np

ENTROPY = 0
GINI = 1


def scale_fill(pos, y, n_out):
    """Dense fill of ``n_out`` slots from sorted slot positions ``pos``.

    Later points at an already-written slot overwrite it; slots before the
    first written one take ``y[0]``; every other unwritten slot takes the
    value at the nearest written slot to its left.
    """
    pos = np.asarray(pos, dtype=np.intp)
    y = np.asarray(y, dtype=np.float64)
    src = np.full(n_out, -1, dtype=np.intp)
    is_last = np.ones(len(pos), dtype=bool)
    is_last[:-1] = pos[1:] != pos[:-1]
    src[pos[is_last]] = np.nonzero(is_last)[0]
    np.maximum.accumulate(src, out=src)
    src[src < 0] = 0
    return y[src]


def bin_means(values, width):
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    n_full = n // width
    n_bins = -(-n // width)
    out = np.empty(n_bins, dtype=np.float64)
    if n_full:
        block = values[: n_full * width].reshape(n_full, width)
        acc = np.zeros(n_full, dtype=np.float64)
        for j in range(width):
            acc += block[:, j]
        out[:n_full] = acc / width
    if n_bins > n_full:
        tail = values[n_full * width:]
        acc = 0.0
        for v in tail:
            acc += float(v)
        out[-1] = acc / len(tail)
    return out


def reconstruct(reference, ratios, start, max_pct_change):
    """Chain ``ratios`` from ``start``, clamping each step into the
    ``reference * (1 +/- max_pct_change/100)`` envelope."""
    ref = np.asarray(reference, dtype=np.float64).tolist()
    r = np.asarray(ratios, dtype=np.float64).tolist()
    hi_f = 1.0 + max_pct_change / 100.0
    lo_f = 1.0 - max_pct_change / 100.0
    out = [0.0] * len(ref)
    prev = float(start)
    out[0] = prev
    for i, el in enumerate(r):
        prev = prev * el
        upper = ref[i + 1] * hi_f
        if prev > upper:
            prev = upper
        lower = ref[i + 1] * lo_f
        if prev < lower:
            prev = lower
        out[i + 1] = prev
    return np.array(out, dtype=np.float64)


def _xlogx_table(n):
    return np.array([c * math.log2(c) if c > 0 else 0.0 for c in range(n + 1)])


def _node_impurity(counts, n, criterion, xlogx):
    # counts: (m, C) integer array; n: (m,) integer array of row totals
    n_f = n.astype(np.float64)
    if criterion == GINI:
        sq = np.zeros(len(n), dtype=np.int64)
        for c in range(counts.shape[1]):
            sq += counts[:, c] * counts[:, c]
        return 1.0 - sq / (n_f * n_f)
    acc = np.zeros(len(n), dtype=np.float64)
    for c in range(counts.shape[1]):
        acc += xlogx[counts[:, c]]
    return np.array([math.log2(k) for k in n.tolist()]) - acc / n_f


def best_split(X, y, samples, features, n_classes, criterion):
    """Best axis-aligned split of the node holding ``samples``.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; rows with ``x <= threshold`` go left.  Returns
    ``(feature, threshold, improvement)`` with ``feature == -1`` when no
    feature separates the node.  Ties keep the earliest feature in
    ``features`` and the lowest threshold.
    """
    samples = np.asarray(samples, dtype=np.intp)
    n = len(samples)
    ys = y[samples]
    total = np.bincount(ys, minlength=n_classes).astype(np.int64)
    xlogx = _xlogx_table(n) if criterion == ENTROPY else None
    parent = _node_impurity(total[None, :], np.array([n]), criterion, xlogx)[0]
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), ys] = 1

    best_f, best_t, best_imp = -1, 0.0, -np.inf
    for f in features:
        v = X[samples, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        cut = np.nonzero(vs[:-1] < vs[1:])[0]
        if cut.size == 0:
            continue
        left = np.cumsum(onehot[order], axis=0)[cut]
        n_left = cut + 1
        n_right = n - n_left
        child = (
            n_left * _node_impurity(left, n_left, criterion, xlogx)
            + n_right * _node_impurity(total - left, n_right, criterion, xlogx)
        ) / n
        improvement = parent - child
        j = int(np.argmax(improvement))
        if improvement[j] > best_imp:
            a, b = float(vs[cut[j]]), float(vs[cut[j] + 1])
            t = (a + b) / 2.0
            if t >= b:
                t = a
            best_f, best_t, best_imp = int(f), t, float(improvement[j])
    return best_f, best_t, best_imp


def apply_tree(X, feature, threshold, left, right):
    """Index of the leaf reached by each row of ``X``."""
    node = np.zeros(X.shape[0], dtype=np.intp)
    active = np.nonzero(feature[node] >= 0)[0]
    while active.size:
        cur = node[active]
        go_left = X[active, feature[cur]] <= threshold[cur]
        node[active] = np.where(go_left, left[cur], right[cur])
        active = active[feature[node[active]] >= 0]
    return node

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; mirrors ``_kernels_py`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log2
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

ENTROPY = 0
GINI = 1


ctypedef struct ValueLabel:
    double value
    Py_ssize_t label


cdef int _cmp_value(const void* a, const void* b) noexcept nogil:
    cdef double va = (<ValueLabel*>a).value
    cdef double vb = (<ValueLabel*>b).value
    if va < vb:
        return -1
    if va > vb:
        return 1
    return 0


def scale_fill(pos, y, Py_ssize_t n_out):
    cdef const cnp.intp_t[::1] p = np.ascontiguousarray(pos, dtype=np.intp)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    out_arr = np.empty(n_out, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k, last = -1
    cdef Py_ssize_t m = p.shape[0]
    for i in range(m):
        k = p[i]
        if last == -1:
            for j in range(k):
                out[j] = yv[i]
        else:
            for j in range(last + 1, k):
                out[j] = out[last]
        out[k] = yv[i]
        last = k
    for j in range(last + 1, n_out):
        out[j] = out[last]
    return out_arr


def bin_means(values, Py_ssize_t width):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t n_bins = (n + width - 1) // width
    out_arr = np.empty(n_bins, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t b, j, lo, hi
    cdef double acc
    for b in range(n_bins):
        lo = b * width
        hi = lo + width
        if hi > n:
            hi = n
        acc = 0.0
        for j in range(lo, hi):
            acc += v[j]
        out[b] = acc / (hi - lo)
    return out_arr


def reconstruct(reference, ratios, double start, double max_pct_change):
    cdef const double[::1] ref = np.ascontiguousarray(reference, dtype=np.float64)
    cdef const double[::1] r = np.ascontiguousarray(ratios, dtype=np.float64)
    cdef Py_ssize_t m = ref.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double hi_f = 1.0 + max_pct_change / 100.0
    cdef double lo_f = 1.0 - max_pct_change / 100.0
    cdef double prev = start, upper, lower
    cdef Py_ssize_t i
    out[0] = prev
    for i in range(r.shape[0]):
        prev = prev * r[i]
        upper = ref[i + 1] * hi_f
        if prev > upper:
            prev = upper
        lower = ref[i + 1] * lo_f
        if prev < lower:
            prev = lower
        out[i + 1] = prev
    return out_arr


cdef inline double _impurity(cnp.int64_t* counts, Py_ssize_t n_classes, Py_ssize_t n,
                             int criterion, double* xlogx) noexcept nogil:
    cdef Py_ssize_t c
    cdef cnp.int64_t sq = 0
    cdef double acc = 0.0
    if criterion == 1:
        for c in range(n_classes):
            sq += counts[c] * counts[c]
        return 1.0 - <double>sq / (<double>n * <double>n)
    for c in range(n_classes):
        acc += xlogx[counts[c]]
    return log2(<double>n) - acc / <double>n


def best_split(X, y, samples, features, Py_ssize_t n_classes, int criterion):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.intp_t[::1] yv = np.ascontiguousarray(y, dtype=np.intp)
    cdef const cnp.intp_t[::1] sv = np.ascontiguousarray(samples, dtype=np.intp)
    cdef const cnp.intp_t[::1] fv = np.ascontiguousarray(features, dtype=np.intp)
    cdef Py_ssize_t n = sv.shape[0]
    cdef Py_ssize_t i, c, fi, f
    cdef Py_ssize_t best_f = -1
    cdef double best_t = 0.0
    cdef double best_imp = -np.inf
    cdef double parent, child, imp, a, b, t
    cdef Py_ssize_t n_left, n_right

    cdef ValueLabel* pairs = <ValueLabel*>malloc(n * sizeof(ValueLabel))
    cdef cnp.int64_t* total = <cnp.int64_t*>malloc(n_classes * sizeof(cnp.int64_t))
    cdef cnp.int64_t* left = <cnp.int64_t*>malloc(n_classes * sizeof(cnp.int64_t))
    cdef cnp.int64_t* right = <cnp.int64_t*>malloc(n_classes * sizeof(cnp.int64_t))
    cdef double* xlogx = <double*>malloc((n + 1) * sizeof(double))
    if pairs == NULL or total == NULL or left == NULL or right == NULL or xlogx == NULL:
        free(pairs); free(total); free(left); free(right); free(xlogx)
        raise MemoryError()
    try:
        xlogx[0] = 0.0
        for i in range(1, n + 1):
            xlogx[i] = <double>i * log2(<double>i)
        for c in range(n_classes):
            total[c] = 0
        for i in range(n):
            total[yv[sv[i]]] += 1
        parent = _impurity(total, n_classes, n, criterion, xlogx)

        with nogil:
            for fi in range(fv.shape[0]):
                f = fv[fi]
                for i in range(n):
                    pairs[i].value = Xv[sv[i], f]
                    pairs[i].label = yv[sv[i]]
                qsort(pairs, n, sizeof(ValueLabel), _cmp_value)
                for c in range(n_classes):
                    left[c] = 0
                for i in range(n - 1):
                    left[pairs[i].label] += 1
                    if not (pairs[i].value < pairs[i + 1].value):
                        continue
                    n_left = i + 1
                    n_right = n - n_left
                    for c in range(n_classes):
                        right[c] = total[c] - left[c]
                    child = (
                        <double>n_left * _impurity(left, n_classes, n_left, criterion, xlogx)
                        + <double>n_right * _impurity(right, n_classes, n_right, criterion, xlogx)
                    ) / <double>n
                    imp = parent - child
                    if imp > best_imp:
                        a = pairs[i].value
                        b = pairs[i + 1].value
                        t = (a + b) / 2.0
                        if t >= b:
                            t = a
                        best_f = f
                        best_t = t
                        best_imp = imp
    finally:
        free(pairs); free(total); free(left); free(right); free(xlogx)
    return int(best_f), float(best_t), float(best_imp)


def apply_tree(X, feature, threshold, left, right):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.intp_t[::1] fe = np.ascontiguousarray(feature, dtype=np.intp)
    cdef const double[::1] th = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const cnp.intp_t[::1] lc = np.ascontiguousarray(left, dtype=np.intp)
    cdef const cnp.intp_t[::1] rc = np.ascontiguousarray(right, dtype=np.intp)
    cdef Py_ssize_t n = Xv.shape[0]
    out_arr = np.empty(n, dtype=np.intp)
    cdef cnp.intp_t[::1] out = out_arr
    cdef Py_ssize_t i, node
    with nogil:
        for i in range(n):
            node = 0
            while fe[node] >= 0:
                if Xv[i, fe[node]] <= th[node]:
                    node = lc[node]
                else:
                    node = rc[node]
            out[i] = node
    return out_arr

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled regression-tree kernels. Mirrors ``_tree_py`` operation for operation."""

import numpy as np

from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc, qsort

ctypedef struct Pair:
    double x
    double y

ctypedef struct Frame:
    int64_t node
    int64_t start
    int64_t end
    int64_t depth


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef const Pair* pa = <const Pair*>a
    cdef const Pair* pb = <const Pair*>b
    if pa.x < pb.x:
        return -1
    if pa.x > pb.x:
        return 1
    if pa.y < pb.y:
        return -1
    if pa.y > pb.y:
        return 1
    return 0


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef void _sort_int(int64_t* a, int64_t n) noexcept nogil:
    cdef int64_t i, j, v
    for i in range(1, n):
        v = a[i]
        j = i - 1
        while j >= 0 and a[j] > v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = v


def build_tree(const double[:, ::1] X, const double[::1] y, samples,
               int64_t max_depth, int64_t min_samples_leaf, int64_t max_features,
               uint64_t rng_seed):
    cdef int64_t[::1] idx = np.array(samples, dtype=np.int64)
    cdef int64_t n_samples = idx.shape[0]
    cdef int64_t n_features = X.shape[1]
    cdef int64_t cap = max(2 * n_samples - 1, 1)

    feature_a = np.full(cap, -1, dtype=np.int64)
    threshold_a = np.zeros(cap)
    left_a = np.full(cap, -1, dtype=np.int64)
    right_a = np.full(cap, -1, dtype=np.int64)
    value_a = np.zeros(cap)
    n_node_a = np.zeros(cap, dtype=np.int64)
    decrease_a = np.zeros(cap)
    cdef int64_t[::1] feature = feature_a
    cdef double[::1] threshold = threshold_a
    cdef int64_t[::1] left = left_a
    cdef int64_t[::1] right = right_a
    cdef double[::1] value = value_a
    cdef int64_t[::1] n_node = n_node_a
    cdef double[::1] decrease = decrease_a

    cdef uint64_t state = rng_seed
    cdef Pair* pairs = <Pair*>malloc(max(n_samples, 1) * sizeof(Pair))
    cdef int64_t* scratch = <int64_t*>malloc(max(n_samples, 1) * sizeof(int64_t))
    cdef int64_t* perm = <int64_t*>malloc(max(n_features, 1) * sizeof(int64_t))
    cdef Frame* stack = <Frame*>malloc(cap * sizeof(Frame))
    if pairs == NULL or scratch == NULL or perm == NULL or stack == NULL:
        free(pairs); free(scratch); free(perm); free(stack)
        raise MemoryError()

    cdef int64_t sp = 0, count = 1
    cdef int64_t node, start, end, depth, n, i, j, k, f, t, n_left, n_right
    cdef double total, parent, sl, sr, nl, nr, gain, best_gain, best_thr, thr, ymin, ymax
    cdef int64_t best_f

    with nogil:
        stack[0].node = 0
        stack[0].start = 0
        stack[0].end = n_samples
        stack[0].depth = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp].node
            start = stack[sp].start
            end = stack[sp].end
            depth = stack[sp].depth
            n = end - start

            total = 0.0
            ymin = y[idx[start]]
            ymax = ymin
            for i in range(start, end):
                total = total + y[idx[i]]
                if y[idx[i]] < ymin:
                    ymin = y[idx[i]]
                if y[idx[i]] > ymax:
                    ymax = y[idx[i]]
            value[node] = total / n
            n_node[node] = n
            if depth >= max_depth or n < 2 * min_samples_leaf or ymax == ymin:
                continue

            for i in range(n_features):
                perm[i] = i
            for i in range(max_features):
                j = i + <int64_t>(_splitmix(&state) % <uint64_t>(n_features - i))
                t = perm[i]
                perm[i] = perm[j]
                perm[j] = t
            _sort_int(perm, max_features)

            parent = total * total / n
            best_gain = 0.0
            best_f = -1
            best_thr = 0.0
            for k in range(max_features):
                f = perm[k]
                for i in range(n):
                    pairs[i].x = X[idx[start + i], f]
                    pairs[i].y = y[idx[start + i]]
                qsort(pairs, n, sizeof(Pair), _cmp_pair)
                sl = 0.0
                for i in range(n - 1):
                    sl = sl + pairs[i].y
                    n_left = i + 1
                    n_right = n - n_left
                    if n_left < min_samples_leaf or n_right < min_samples_leaf:
                        continue
                    if not (pairs[i].x < pairs[i + 1].x):
                        continue
                    nl = <double>n_left
                    nr = <double>n_right
                    sr = total - sl
                    gain = sl * sl / nl + sr * sr / nr - parent
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        thr = 0.5 * (pairs[i].x + pairs[i + 1].x)
                        if thr >= pairs[i + 1].x:
                            thr = pairs[i].x
                        best_thr = thr
            if best_f < 0:
                continue

            n_left = 0
            n_right = 0
            for i in range(start, end):
                if X[idx[i], best_f] <= best_thr:
                    idx[start + n_left] = idx[i]
                    n_left += 1
                else:
                    scratch[n_right] = idx[i]
                    n_right += 1
            for i in range(n_right):
                idx[start + n_left + i] = scratch[i]

            feature[node] = best_f
            threshold[node] = best_thr
            decrease[node] = best_gain
            left[node] = count
            right[node] = count + 1
            count += 2
            stack[sp].node = right[node]
            stack[sp].start = start + n_left
            stack[sp].end = end
            stack[sp].depth = depth + 1
            sp += 1
            stack[sp].node = left[node]
            stack[sp].start = start
            stack[sp].end = start + n_left
            stack[sp].depth = depth + 1
            sp += 1

    free(pairs); free(scratch); free(perm); free(stack)
    return (feature_a[:count], threshold_a[:count], left_a[:count], right_a[:count],
            value_a[:count], n_node_a[:count], decrease_a[:count])


def predict_tree(const double[:, ::1] X, const int64_t[::1] feature, const double[::1] threshold,
                 const int64_t[::1] left, const int64_t[::1] right, const double[::1] value):
    cdef int64_t n = X.shape[0]
    out_a = np.empty(n)
    cdef double[::1] out = out_a
    cdef int64_t i, node
    with nogil:
        for i in range(n):
            node = 0
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] = value[node]
    return out_a

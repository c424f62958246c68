"""Pure-Python regression-tree kernels (fallback for the compiled ``_tree``).

Both implementations follow the same arithmetic in the same order so that a
given seed grows the same tree with either backend:

* candidate features are drawn per node by a partial Fisher-Yates shuffle
  driven by splitmix64, then visited in ascending index order;
* node values are sorted by (x, y) and prefix sums accumulated left to right;
* the split score is ``S_l^2/n_l + S_r^2/n_r - S^2/n`` (the SSE decrease) and
  only a strictly larger score replaces the incumbent, so ties go to the lowest
  feature index and then the lowest threshold.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & _MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def _draw_features(rng, n_features, max_features):
    perm = list(range(n_features))
    for i in range(max_features):
        j = i + rng.next() % (n_features - i)
        perm[i], perm[j] = perm[j], perm[i]
    return sorted(perm[:max_features])


def _best_split(X, y, seg, features, min_samples_leaf, total):
    n = seg.shape[0]
    parent = total * total / n
    best_gain = 0.0
    best_feature = -1
    best_threshold = 0.0
    ys_seg = y[seg]
    nl = np.arange(1, n, dtype=float)
    nr = n - nl
    size_ok = (nl >= min_samples_leaf) & (nr >= min_samples_leaf)
    for f in features:
        xs = X[seg, f]
        order = np.lexsort((ys_seg, xs))
        xs = xs[order]
        ys = ys_seg[order]
        sl = np.cumsum(ys)[:-1]
        sr = total - sl
        gain = sl * sl / nl + sr * sr / nr - parent
        valid = size_ok & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            best_gain = float(gain[i])
            best_feature = int(f)
            thr = 0.5 * (xs[i] + xs[i + 1])
            if thr >= xs[i + 1]:
                thr = xs[i]
            best_threshold = float(thr)
    return best_feature, best_threshold, best_gain


def build_tree(X, y, samples, max_depth, min_samples_leaf, max_features, rng_seed):
    """Grow one tree on rows ``samples`` (duplicates allowed) of ``X``/``y``.

    Returns ``(feature, threshold, left, right, value, n_node_samples,
    impurity_decrease)`` arrays indexed by node id; leaves have feature -1.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    idx = np.array(samples, dtype=np.int64)
    n_features = X.shape[1]
    rng = SplitMix64(rng_seed)

    cap = max(2 * idx.shape[0] - 1, 1)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    n_node = np.zeros(cap, dtype=np.int64)
    decrease = np.zeros(cap)

    count = 1
    stack = [(0, 0, idx.shape[0], 0)]
    while stack:
        node, start, end, depth = stack.pop()
        seg = idx[start:end]
        n = end - start
        ys = y[seg]
        total = float(np.cumsum(ys)[-1])
        value[node] = total / n
        n_node[node] = n
        if depth >= max_depth or n < 2 * min_samples_leaf or ys.max() == ys.min():
            continue
        feats = _draw_features(rng, n_features, max_features)
        f, thr, gain = _best_split(X, y, seg, feats, min_samples_leaf, total)
        if f < 0:
            continue
        go_left = X[seg, f] <= thr
        n_left = int(go_left.sum())
        idx[start:end] = np.concatenate((seg[go_left], seg[~go_left]))
        feature[node] = f
        threshold[node] = thr
        decrease[node] = gain
        left[node] = count
        right[node] = count + 1
        count += 2
        stack.append((right[node], start + n_left, end, depth + 1))
        stack.append((left[node], start, start + n_left, depth + 1))

    return (feature[:count], threshold[:count], left[:count], right[:count],
            value[:count], n_node[:count], decrease[:count])


def predict_tree(X, feature, threshold, left, right, value):
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[active]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return value[node]

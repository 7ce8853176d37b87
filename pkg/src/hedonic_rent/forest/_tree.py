"""Compiled regression-tree growth and traversal.

Trees are flat preorder arrays: ``feature[i] == -1`` marks a leaf. Feature
indices refer to the candidate matrix (design columns without the
intercept).
"""

import numpy as np
from numba import njit, uint64

LEAF = -1
UNLIMITED = -1
# scores closer than this (relative) are ties; round-off in the running
# sums otherwise decides between mathematically equal splits
TIE_RTOL = 1e-12

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_MIX1 = uint64(0xBF58476D1CE4E5B9)
_MIX2 = uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def _next_u64(state):
    # splitmix64
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> uint64(30))) * _MIX1
    z = (z ^ (z >> uint64(27))) * _MIX2
    return z ^ (z >> uint64(31))


@njit(cache=True, nogil=True)
def _rand_below(state, k):
    u = (_next_u64(state) >> uint64(11)) * (1.0 / 9007199254740992.0)
    j = int(u * k)
    return j if j < k else k - 1


@njit(cache=True, nogil=True)
def _best_split_on_feature(xf, yv, order, start, end, total, min_leaf):
    """Best split of one node on one feature.

    ``order[start:end]`` lists the node's sample slots sorted by ``xf``.
    Returns ``(score, threshold)``; score is ``sum_L^2/n_L + sum_R^2/n_R``
    (to maximize) and is -inf when no admissible split exists.
    """
    m = end - start
    best = -np.inf
    best_thr = 0.0
    left = 0.0
    for k in range(m - 1):
        a = order[start + k]
        left += yv[a]
        n_left = k + 1
        n_right = m - n_left
        if n_left < min_leaf:
            continue
        if n_right < min_leaf:
            break
        x_here = xf[a]
        x_next = xf[order[start + k + 1]]
        if x_here == x_next:
            continue
        right = total - left
        score = left * left / n_left + right * right / n_right
        if best == -np.inf or score > best + TIE_RTOL * max(1.0, abs(best)):
            best = score
            thr = 0.5 * (x_here + x_next)
            if thr >= x_next:
                thr = x_here
            best_thr = thr
    return best, best_thr


@njit(cache=True, nogil=True)
def grow_tree(X, y, sample, row_order, max_depth, min_samples_split, min_samples_leaf, max_features, seed):
    """Grow one variance-reduction tree on rows ``sample`` (may repeat).

    ``row_order[f]`` is a stable argsort of ``X[:, f]`` over all rows, shared
    by every tree. Each feature's sample slots are laid out in that order
    once; every split partitions all per-feature orders stably, so a node's
    slots stay sorted without re-sorting. Returns ``(feature, threshold, left, right, value, count,
    importance)`` where ``importance[f]`` accumulates the drop in summed
    squared error at splits on ``f``.
    """
    n, p = X.shape
    m_total = sample.size
    cap = 2 * m_total + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)
    importance = np.zeros(p)

    xt = np.empty((p, m_total))
    yv = np.empty(m_total)
    for s in range(m_total):
        yv[s] = y[sample[s]]
        for f in range(p):
            xt[f, s] = X[sample[s], f]
    # group slots by source row (ascending slot within a row)
    row_start = np.zeros(n + 1, dtype=np.int64)
    for s in range(m_total):
        row_start[sample[s] + 1] += 1
    for r in range(n):
        row_start[r + 1] += row_start[r]
    fill = row_start[:n].copy()
    slots_by_row = np.empty(m_total, dtype=np.int32)
    for s in range(m_total):
        r = sample[s]
        slots_by_row[fill[r]] = s
        fill[r] += 1
    orders = np.empty((p, m_total), dtype=np.int32)
    for f in range(p):
        k = 0
        for r in row_order[f]:
            for q in range(row_start[r], row_start[r + 1]):
                orders[f, k] = slots_by_row[q]
                k += 1
    goes_left = np.zeros(m_total, dtype=np.bool_)
    buf = np.empty(m_total, dtype=np.int32)
    feats = np.arange(p)
    state = np.empty(1, dtype=np.uint64)
    state[0] = uint64(seed)

    # stack entries: start, end, depth, parent, is_left
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_parent = np.empty(cap, dtype=np.int64)
    st_left = np.empty(cap, dtype=np.bool_)
    st_start[0] = 0
    st_end[0] = m_total
    st_depth[0] = 0
    st_parent[0] = -1
    st_left[0] = True
    top = 1
    n_nodes = 0

    while top > 0:
        top -= 1
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        parent = st_parent[top]
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if st_left[top]:
                left[parent] = node
            else:
                right[parent] = node

        m = end - start
        # summed in slot order so the node mean is order-independent of features
        total = 0.0
        y_min = np.inf
        y_max = -np.inf
        for s in range(start, end):
            v = yv[orders[0, s]]
            if v < y_min:
                y_min = v
            if v > y_max:
                y_max = v
        for s in range(start, end):
            total += yv[orders[0, s]]
        value[node] = total / m
        count[node] = m

        if (
            (max_depth != UNLIMITED and depth >= max_depth)
            or m < min_samples_split
            or m < 2 * min_samples_leaf
            or y_min == y_max
        ):
            continue

        # visit features in random order until max_features non-constant
        # ones have been evaluated
        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        visited = 0
        i = 0
        while i < p and visited < max_features:
            j = i + _rand_below(state, p - i)
            tmp = feats[i]
            feats[i] = feats[j]
            feats[j] = tmp
            f = feats[i]
            i += 1
            if xt[f, orders[f, start]] == xt[f, orders[f, end - 1]]:
                continue
            visited += 1
            score, thr = _best_split_on_feature(xt[f], yv, orders[f], start, end, total, min_samples_leaf)
            if score == -np.inf:
                continue
            tol = TIE_RTOL * max(1.0, abs(best_score)) if best_f >= 0 else 0.0
            if best_f < 0 or score > best_score + tol or (score >= best_score - tol and f < best_f):
                best_score = score
                best_f = f
                best_thr = thr

        if best_f < 0:
            continue

        n_left = 0
        for s in range(start, end):
            slot = orders[best_f, s]
            is_left = xt[best_f, slot] <= best_thr
            goes_left[slot] = is_left
            if is_left:
                n_left += 1
        for g in range(p):
            og = orders[g]
            nl = start
            nr = 0
            for s in range(start, end):
                slot = og[s]
                if goes_left[slot]:
                    og[nl] = slot
                    nl += 1
                else:
                    buf[nr] = slot
                    nr += 1
            og[nl:end] = buf[:nr]

        gain = best_score - total * total / m
        if gain > 0.0:
            importance[best_f] += gain
        feature[node] = best_f
        threshold[node] = best_thr

        mid = start + n_left
        # push right first so the left child is numbered next (preorder)
        st_start[top] = mid
        st_end[top] = end
        st_depth[top] = depth + 1
        st_parent[top] = node
        st_left[top] = False
        top += 1
        st_start[top] = start
        st_end[top] = mid
        st_depth[top] = depth + 1
        st_parent[top] = node
        st_left[top] = True
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
        importance,
    )


@njit(cache=True, nogil=True)
def apply_tree(feature, threshold, left, right, X):
    """Leaf index reached by each row of ``X``."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        node = 0
        while feature[node] != LEAF:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


@njit(cache=True, nogil=True)
def predict_tree(feature, threshold, left, right, value, X):
    leaves = apply_tree(feature, threshold, left, right, X)
    out = np.empty(leaves.size)
    for r in range(leaves.size):
        out[r] = value[leaves[r]]
    return out

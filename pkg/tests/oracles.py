"""Slow, independent reference implementations used only by the tests."""

import math

import mpmath
import numpy as np

R_EARTH = 6_371_000.0


def floyd_warshall(n, u, v, length):
    """All-pairs shortest paths on an undirected graph given by row positions.

    Paths come from Floyd-Warshall; each distance is then re-added edge by
    edge outward from the source along its path, the same order a
    single-source search accumulates in, so boundary comparisons agree.
    """
    w = np.full((n, n), np.inf)
    for a, b, x in zip(u, v, length):
        if x < w[a, b]:
            w[a, b] = w[b, a] = x
    d = w.copy()
    np.fill_diagonal(d, 0.0)
    # pred[i, j]: node before j on the path from i
    pred = np.where(np.isfinite(w), np.arange(n)[:, None], -1)
    for k in range(n):
        cand = d[:, k : k + 1] + d[k : k + 1, :]
        better = cand < d
        d = np.where(better, cand, d)
        pred = np.where(better, pred[k : k + 1, :], pred)
    out = np.full((n, n), np.inf)
    for s in range(n):
        out[s, s] = 0.0
        # a node's predecessor is strictly closer, so distance order works
        for t in np.argsort(d[s], kind="stable"):
            if t != s and np.isfinite(d[s, t]):
                q = pred[s, t]
                out[s, t] = out[s, q] + w[q, t]
    return out


def aggregate_bruteforce(dist, values, present, radius, agg):
    """Per-source aggregate, accumulating in ascending node position."""
    n = dist.shape[0]
    out = np.zeros(n)
    for s in range(n):
        total, count = 0.0, 0
        for t in range(n):
            if dist[s, t] <= radius and present[t]:
                total += values[t]
                count += 1
        if agg == "sum":
            out[s] = total
        else:
            out[s] = total / count if count else 0.0
    return out


def haversine_scalar(lat1, lon1, lat2, lon2):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * R_EARTH * math.asin(min(1.0, math.sqrt(a)))


def nearest_linear_scan(ids, lats, lons, lat, lon):
    best_id, best_d = None, math.inf
    for i, a, b in sorted(zip(ids, lats, lons)):
        d = haversine_scalar(lat, lon, a, b)
        if d < best_d:
            best_id, best_d = i, d
    return best_id


def normal_equations_mp(X, y, dps=50):
    """beta = (X'X)^-1 X'y in extended precision."""
    with mpmath.workdps(dps):
        A = mpmath.matrix(X.tolist())
        b = mpmath.matrix([[float(v)] for v in y])
        At = A.T
        beta = mpmath.lu_solve(At * A, At * b)
        return np.array([float(beta[i]) for i in range(X.shape[1])])


def best_split_exhaustive(x, y, min_leaf=1):
    """Best (threshold, sse) over all midpoints of distinct sorted values."""
    xs = np.unique(x)
    best = (None, math.inf)
    for lo, hi in zip(xs[:-1], xs[1:]):
        thr = 0.5 * (lo + hi)
        left, right = y[x <= thr], y[x > thr]
        if left.size < min_leaf or right.size < min_leaf:
            continue
        sse = float(((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum())
        if sse < best[1] - 1e-12:
            best = (thr, sse)
    return best


def walk_tree(tree, row):
    """Follow one row from the root of a fitted tree; returns the leaf value."""
    node = 0
    while tree.feature[node] != -1:
        node = tree.left[node] if row[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
    return tree.value[node]


def reference_tree(X, y, min_leaf=1):
    """Plain recursive CART on all features, no bootstrap, same tie rules.

    Returns a nested tuple: ``("leaf", mean)`` or ``("split", f, thr, left, right)``.
    """

    def grow(rows):
        yy = y[rows]
        if rows.size < 2 or rows.size < 2 * min_leaf or np.all(yy == yy[0]):
            return ("leaf", float(np.mean(yy)))
        best = None
        for f in range(X.shape[1]):
            thr, sse = best_split_exhaustive(X[rows, f], yy, min_leaf)
            if thr is None:
                continue
            if best is None or sse < best[2] - 1e-12 * max(1.0, abs(best[2])):
                best = (f, thr, sse)
        if best is None:
            return ("leaf", float(np.mean(yy)))
        f, thr, _ = best
        mask = X[rows, f] <= thr
        return ("split", f, thr, grow(rows[mask]), grow(rows[~mask]))

    return grow(np.arange(y.size))


def tree_as_nested(tree, node=0):
    if tree.feature[node] == -1:
        return ("leaf", float(tree.value[node]))
    return (
        "split",
        int(tree.feature[node]),
        float(tree.threshold[node]),
        tree_as_nested(tree, tree.left[node]),
        tree_as_nested(tree, tree.right[node]),
    )


def morans_i_dense(values, W):
    """Moran's I from an explicit weight matrix."""
    z = np.asarray(values, dtype=float) - np.mean(values)
    n = z.size
    return (n / W.sum()) * float(z @ W @ z) / float(z @ z)

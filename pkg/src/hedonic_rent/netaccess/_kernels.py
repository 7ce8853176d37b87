"""Compiled bounded-radius Dijkstra and range aggregation."""

import numpy as np
from numba import njit, prange


@njit(cache=True, nogil=True)
def _heap_push(keys, items, size, key, item):
    i = size
    keys[i] = key
    items[i] = item
    while i > 0:
        parent = (i - 1) >> 1
        if keys[parent] <= key:
            break
        keys[i] = keys[parent]
        items[i] = items[parent]
        i = parent
    keys[i] = key
    items[i] = item
    return size + 1


@njit(cache=True, nogil=True)
def _heap_pop(keys, items, size):
    top_key = keys[0]
    top_item = items[0]
    size -= 1
    key = keys[size]
    item = items[size]
    i = 0
    while True:
        child = 2 * i + 1
        if child >= size:
            break
        if child + 1 < size and keys[child + 1] < keys[child]:
            child += 1
        if keys[child] >= key:
            break
        keys[i] = keys[child]
        items[i] = items[child]
        i = child
    if size > 0:
        keys[i] = key
        items[i] = item
    return top_key, top_item, size


@njit(cache=True, nogil=True)
def bounded_dijkstra(source, indptr, indices, weights, radius, dist, touched, heap_keys, heap_items):
    """Settle every node within ``radius`` of ``source``.

    ``dist`` must be all-inf on entry. On return ``touched[:count]`` lists the
    reached nodes and ``dist`` holds their distances; the caller resets them.
    """
    count = 0
    dist[source] = 0.0
    touched[count] = source
    count += 1
    size = _heap_push(heap_keys, heap_items, 0, 0.0, source)
    while size > 0:
        d, u, size = _heap_pop(heap_keys, heap_items, size)
        if d > radius:
            break
        if d > dist[u]:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            nd = d + weights[k]
            if nd <= radius and nd < dist[v]:
                if dist[v] == np.inf:
                    touched[count] = v
                    count += 1
                dist[v] = nd
                size = _heap_push(heap_keys, heap_items, size, nd, v)
    return count


@njit(cache=True, parallel=True)
def range_aggregate_kernel(sources, indptr, indices, weights, radius, values, present, is_mean, n_chunks):
    n_nodes = indptr.size - 1
    n_src = sources.size
    n_layers = values.shape[1]
    out = np.zeros((n_src, n_layers))
    chunk = (n_src + n_chunks - 1) // n_chunks
    for c in prange(n_chunks):
        lo = c * chunk
        hi = min(n_src, lo + chunk)
        if lo >= hi:
            continue
        dist = np.full(n_nodes, np.inf)
        touched = np.empty(n_nodes, dtype=np.int64)
        heap_keys = np.empty(indices.size + 1)
        heap_items = np.empty(indices.size + 1, dtype=np.int64)
        for i in range(lo, hi):
            count = bounded_dijkstra(
                sources[i], indptr, indices, weights, radius, dist, touched, heap_keys, heap_items
            )
            reached = np.sort(touched[:count])
            # ascending node order fixes the accumulation order
            for j in range(n_layers):
                total = 0.0
                m = 0
                for v in reached:
                    if present[v, j]:
                        total += values[v, j]
                        m += 1
                if is_mean[j]:
                    out[i, j] = total / m if m > 0 else 0.0
                else:
                    out[i, j] = total
            for t in range(count):
                dist[touched[t]] = np.inf
    return out


@njit(cache=True)
def reachable_kernel(source, indptr, indices, weights, radius):
    n_nodes = indptr.size - 1
    dist = np.full(n_nodes, np.inf)
    touched = np.empty(n_nodes, dtype=np.int64)
    heap_keys = np.empty(indices.size + 1)
    heap_items = np.empty(indices.size + 1, dtype=np.int64)
    count = bounded_dijkstra(source, indptr, indices, weights, radius, dist, touched, heap_keys, heap_items)
    reached = np.sort(touched[:count])
    return reached, dist[reached]

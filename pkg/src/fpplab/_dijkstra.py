"""Numba shortest-path kernels on implicit grids (indexed binary heap)."""
import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _less(dist, a, b):
    da = dist[a]
    db = dist[b]
    return da < db or (da == db and a < b)


@njit(cache=True)
def _sift_up(heap, pos, dist, i):
    node = heap[i]
    while i > 0:
        parent = (i - 1) >> 1
        pn = heap[parent]
        if _less(dist, node, pn):
            heap[i] = pn
            pos[pn] = i
            i = parent
        else:
            break
    heap[i] = node
    pos[node] = i


@njit(cache=True)
def _sift_down(heap, pos, dist, i, size):
    node = heap[i]
    while True:
        child = 2 * i + 1
        if child >= size:
            break
        right = child + 1
        if right < size and _less(dist, heap[right], heap[child]):
            child = right
        cn = heap[child]
        if _less(dist, cn, node):
            heap[i] = cn
            pos[cn] = i
            i = child
        else:
            break
    heap[i] = node
    pos[node] = i


@njit(cache=True)
def _pop(heap, pos, dist, size):
    top = heap[0]
    pos[top] = -1
    size -= 1
    if size > 0:
        heap[0] = heap[size]
        pos[heap[0]] = 0
        _sift_down(heap, pos, dist, 0, size)
    return top, size


@njit(cache=True)
def grid_dijkstra(density, extents, offsets, lengths, allowed, sources, targets):
    """Multi-source Dijkstra on the grid graph of `offsets` (k, d) moves.

    Edge (u, v) costs 0.5 * length * (density[u] + density[v]). Ties in the
    queue are broken by node index. If `targets` is nonempty the search
    stops once all of them are settled; unsettled nodes keep +inf.
    """
    n = density.size
    d = extents.size
    strides = np.empty(d, np.int64)
    s = 1
    for a in range(d - 1, -1, -1):
        strides[a] = s
        s *= extents[a]
    k = offsets.shape[0]
    delta = np.zeros(k, np.int64)
    for j in range(k):
        for a in range(d):
            delta[j] += offsets[j, a] * strides[a]

    dist = np.full(n, np.inf)
    tent = np.full(n, np.inf)
    done = np.zeros(n, np.bool_)
    pos = np.full(n, -1, np.int64)
    heap = np.empty(n, np.int64)
    size = 0
    is_target = np.zeros(n, np.bool_)
    remaining = 0
    for t in targets:
        if not is_target[t]:
            is_target[t] = True
            remaining += 1
    stop = remaining > 0

    for src in sources:
        if allowed[src] and pos[src] < 0 and tent[src] != 0.0:
            tent[src] = 0.0
            heap[size] = src
            pos[src] = size
            size += 1
            _sift_up(heap, pos, tent, size - 1)

    coord = np.empty(d, np.int64)
    while size > 0:
        u, size = _pop(heap, pos, tent, size)
        done[u] = True
        du = tent[u]
        dist[u] = du
        if is_target[u]:
            remaining -= 1
            if stop and remaining == 0:
                break
        rem = u
        for a in range(d):
            coord[a] = rem // strides[a]
            rem -= coord[a] * strides[a]
        su = density[u]
        for j in range(k):
            ok = True
            for a in range(d):
                c = coord[a] + offsets[j, a]
                if c < 0 or c >= extents[a]:
                    ok = False
                    break
            if not ok:
                continue
            v = u + delta[j]
            if done[v] or not allowed[v]:
                continue
            nd = du + 0.5 * lengths[j] * (su + density[v])
            if nd < tent[v]:
                tent[v] = nd
                if pos[v] < 0:
                    heap[size] = v
                    pos[v] = size
                    size += 1
                _sift_up(heap, pos, tent, pos[v])
    return dist


@njit(cache=True)
def lattice_dijkstra(wplus, extents, allowed, sources, targets):
    """Multi-source Dijkstra on the hypercubic lattice.

    wplus[a, u] is the weight of the edge u -> u + e_a (ignored on the
    upper face of axis a).
    """
    n = wplus.shape[1]
    d = extents.size
    strides = np.empty(d, np.int64)
    s = 1
    for a in range(d - 1, -1, -1):
        strides[a] = s
        s *= extents[a]
    dist = np.full(n, np.inf)
    tent = np.full(n, np.inf)
    done = np.zeros(n, np.bool_)
    pos = np.full(n, -1, np.int64)
    heap = np.empty(n, np.int64)
    size = 0
    is_target = np.zeros(n, np.bool_)
    remaining = 0
    for t in targets:
        if not is_target[t]:
            is_target[t] = True
            remaining += 1
    stop = remaining > 0
    for src in sources:
        if allowed[src] and pos[src] < 0 and tent[src] != 0.0:
            tent[src] = 0.0
            heap[size] = src
            pos[src] = size
            size += 1
            _sift_up(heap, pos, tent, size - 1)

    while size > 0:
        u, size = _pop(heap, pos, tent, size)
        done[u] = True
        du = tent[u]
        dist[u] = du
        if is_target[u]:
            remaining -= 1
            if stop and remaining == 0:
                break
        for a in range(d):
            c = (u // strides[a]) % extents[a]
            for sgn in (-1, 1):
                if sgn > 0:
                    if c + 1 >= extents[a]:
                        continue
                    v = u + strides[a]
                    w = wplus[a, u]
                else:
                    if c == 0:
                        continue
                    v = u - strides[a]
                    w = wplus[a, v]
                if done[v] or not allowed[v]:
                    continue
                nd = du + w
                if nd < tent[v]:
                    tent[v] = nd
                    if pos[v] < 0:
                        heap[size] = v
                        pos[v] = size
                        size += 1
                    _sift_up(heap, pos, tent, pos[v])
    return dist

"""Numba kernels for the hot loops.

All distance arithmetic happens in int64. Matrices and returned rows use
uint32 with ``INF`` as the unreachable sentinel.
"""

import numpy as np
from numba import njit

INF = 4294967295  # uint32 max, reserved

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def bfs_into(ptr, idx, src_ptr, src_idx, src, cap, dist, queue):
    """BFS from ``src``; the source scans ``src_ptr/src_idx``, all other
    vertices scan ``ptr/idx``. ``dist`` must be INF-filled on entry.

    Vertices at distance ``cap`` are not expanded. Returns (visited, scans);
    ``queue[:visited]`` lists the reached vertices in BFS order.
    """
    dist[src] = 0
    queue[0] = src
    head = 0
    tail = 1
    scans = 0
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        if du >= cap:
            continue
        if u == src:
            a = src_ptr[u]
            b = src_ptr[u + 1]
            nbrs = src_idx
        else:
            a = ptr[u]
            b = ptr[u + 1]
            nbrs = idx
        scans += b - a
        for e in range(a, b):
            v = nbrs[e]
            if dist[v] == INF:
                dist[v] = du + 1
                queue[tail] = v
                tail += 1
    return tail, scans


@njit(**_JIT)
def bfs_row(ptr, idx, src, cap):
    n = ptr.shape[0] - 1
    dist = np.full(n, INF, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    _, scans = bfs_into(ptr, idx, ptr, idx, src, cap, dist, queue)
    return dist.astype(np.uint32), scans


@njit(**_JIT)
def apsp_bfs(ptr, idx, sources, out):
    """Write one exact BFS row per source into ``out`` (uint32)."""
    n = ptr.shape[0] - 1
    dist = np.full(n, INF, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    scans = 0
    for k in range(sources.shape[0]):
        s = sources[k]
        cnt, sc = bfs_into(ptr, idx, ptr, idx, s, INF, dist, queue)
        scans += sc
        row = out[k]
        for j in range(n):
            row[j] = INF
        for j in range(cnt):
            v = queue[j]
            row[v] = dist[v]
            dist[v] = INF
    return scans


@njit(**_JIT)
def fast_pivots(full_ptr, full_idx, ptr, idx, sources):
    """For each source w (ascending ids), BFS in the graph made of ``ptr/idx``
    plus all edges at w; every vertex keeps the nearest w, ties to smaller id.
    """
    n = ptr.shape[0] - 1
    best_d = np.full(n, INF, dtype=np.int64)
    best_w = np.full(n, -1, dtype=np.int64)
    dist = np.full(n, INF, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    scans = 0
    for k in range(sources.shape[0]):
        w = sources[k]
        cnt, sc = bfs_into(ptr, idx, full_ptr, full_idx, w, INF, dist, queue)
        scans += sc
        for j in range(cnt):
            v = queue[j]
            if dist[v] < best_d[v]:
                best_d[v] = dist[v]
                best_w[v] = w
            dist[v] = INF
    return best_d, best_w, scans


@njit(**_JIT)
def multi_source_bfs(ptr, idx, sources):
    """Exact nearest-source labels; among equidistant sources the smallest id
    wins. ``sources`` need not be sorted."""
    n = ptr.shape[0] - 1
    dist = np.full(n, INF, dtype=np.int64)
    label = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    tail = 0
    for k in range(sources.shape[0]):
        s = sources[k]
        if dist[s] == INF:
            dist[s] = 0
            label[s] = s
            queue[tail] = s
            tail += 1
    head = 0
    scans = 0
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        scans += ptr[u + 1] - ptr[u]
        for e in range(ptr[u], ptr[u + 1]):
            v = idx[e]
            if dist[v] == INF:
                dist[v] = du + 1
                label[v] = label[u]
                queue[tail] = v
                tail += 1
            elif dist[v] == du + 1 and label[u] < label[v]:
                label[v] = label[u]
    return dist, label, scans


@njit(**_JIT)
def capped_balls(ptr, idx, radius):
    """Per vertex s with finite radius r: all vertices at distance <= r - 1,
    found by expanding only vertices at distance <= r - 2.

    Returns CSR (bptr, bvtx, bdist) ordered by BFS discovery, plus scans.
    """
    n = ptr.shape[0] - 1
    dist = np.full(n, INF, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    bptr = np.zeros(n + 1, dtype=np.int64)
    cap_buf = 1024
    bvtx = np.empty(cap_buf, dtype=np.int64)
    bdist = np.empty(cap_buf, dtype=np.int64)
    used = 0
    scans = 0
    for s in range(n):
        r = radius[s]
        if r == INF or r == 0:
            bptr[s + 1] = used
            continue
        cnt, sc = bfs_into(ptr, idx, ptr, idx, s, r - 1, dist, queue)
        scans += sc
        if used + cnt > cap_buf:
            while used + cnt > cap_buf:
                cap_buf *= 2
            nv = np.empty(cap_buf, dtype=np.int64)
            nd = np.empty(cap_buf, dtype=np.int64)
            nv[:used] = bvtx[:used]
            nd[:used] = bdist[:used]
            bvtx = nv
            bdist = nd
        for j in range(cnt):
            v = queue[j]
            bvtx[used] = v
            bdist[used] = dist[v]
            used += 1
            dist[v] = INF
        bptr[s + 1] = used
    return bptr, bvtx[:used].copy(), bdist[:used].copy(), scans


@njit(**_JIT)
def dial_sssp(init, ptr, idx, wptr, widx, wval, dist):
    """Dijkstra with a circular bucket queue over unit edges (ptr/idx) and
    weighted edges (wptr/widx/wval). ``init`` gives starting tentative
    distances (uint32, INF = absent); results go into ``dist`` (int64).

    Returns the number of edges scanned.
    """
    n = ptr.shape[0] - 1
    width = 1
    for e in range(wval.shape[0]):
        if wval[e] > width:
            width = wval[e]
    for v in range(n):
        d = np.int64(init[v])
        dist[v] = d
        if d != INF and d > width:
            width = d
    width += 1
    pool_size = n + idx.shape[0] + widx.shape[0] + 1
    head = np.full(width, -1, dtype=np.int64)
    nxt = np.empty(pool_size, dtype=np.int64)
    node = np.empty(pool_size, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    used = 0
    for v in range(n):
        d = dist[v]
        if d != INF:
            node[used] = v
            nxt[used] = head[d]
            head[d] = used
            used += 1
    popped = 0
    scans = 0
    key = 0
    while popped < used:
        slot = key % width
        while head[slot] != -1:
            ent = head[slot]
            head[slot] = nxt[ent]
            popped += 1
            u = node[ent]
            if done[u] or dist[u] != key:
                continue
            done[u] = True
            nd = key + 1
            scans += ptr[u + 1] - ptr[u]
            for e in range(ptr[u], ptr[u + 1]):
                v = idx[e]
                if nd < dist[v]:
                    dist[v] = nd
                    s2 = nd % width
                    node[used] = v
                    nxt[used] = head[s2]
                    head[s2] = used
                    used += 1
            scans += wptr[u + 1] - wptr[u]
            for e in range(wptr[u], wptr[u + 1]):
                v = widx[e]
                nd2 = key + wval[e]
                if nd2 < dist[v]:
                    dist[v] = nd2
                    s2 = nd2 % width
                    node[used] = v
                    nxt[used] = head[s2]
                    head[s2] = used
                    used += 1
        key += 1
    return scans


@njit(**_JIT)
def overlay_rows(snap, ws, ptr, idx, wptr, widx, wval, out):
    """Shortest distances from each w in ``ws`` in the overlay whose star
    edges are ``snap[w]``; row k of ``out`` receives the result for ws[k]."""
    n = ptr.shape[0] - 1
    dist = np.empty(n, dtype=np.int64)
    scans = 0
    for k in range(ws.shape[0]):
        w = ws[k]
        star = snap[w].copy()
        star[w] = 0
        scans += n + dial_sssp(star, ptr, idx, wptr, widx, wval, dist)
        row = out[k]
        for v in range(n):
            row[v] = dist[v]
    return scans


@njit(**_JIT)
def merge_rows(est, ws, rows):
    """est[w, :] and est[:, w] = min(old, row) for each w; diagonal pinned."""
    n = est.shape[0]
    improved = 0
    for k in range(ws.shape[0]):
        w = ws[k]
        row = rows[k]
        for v in range(n):
            if v == w:
                continue
            val = row[v]
            if val < est[w, v]:
                est[w, v] = val
                est[v, w] = val
                improved += 1
    return improved


@njit(**_JIT)
def triangulate_rows(snap, sources, piv, pdist, out):
    """out[k, t] = pdist[s] + snap[piv[s], t] for s = sources[k]."""
    n = snap.shape[0]
    attempts = 0
    for k in range(sources.shape[0]):
        s = sources[k]
        row = out[k]
        for t in range(n):
            row[t] = INF
        p = piv[s]
        if p < 0:
            continue
        ds = np.int64(pdist[s])
        src = snap[p]
        attempts += n
        for t in range(n):
            b = np.int64(src[t])
            if b != INF:
                row[t] = ds + b
    return attempts


@njit(**_JIT)
def triple_rows(snap, xs, cptr, cidx, piv_next, ys, out):
    """out[k, y] = min over candidates w of x = xs[k] of
    snap(x, w) + snap(w, piv_next[w]) + snap(piv_next[w], y), y in ys."""
    n = snap.shape[0]
    attempts = 0
    ny = ys.shape[0]
    best = np.empty(n, dtype=np.int64)
    for k in range(xs.shape[0]):
        x = xs[k]
        for j in range(ny):
            best[ys[j]] = INF
        for e in range(cptr[k], cptr[k + 1]):
            w = cidx[e]
            pw = piv_next[w]
            if pw < 0:
                continue
            a = np.int64(snap[x, w])
            b = np.int64(snap[w, pw])
            if a == INF or b == INF:
                continue
            base = a + b
            attempts += ny
            src = snap[pw]
            for j in range(ny):
                y = ys[j]
                c = np.int64(src[y])
                if c == INF:
                    continue
                val = base + c
                if val < best[y]:
                    best[y] = val
        row = out[k]
        for v in range(n):
            row[v] = INF
        for j in range(ny):
            y = ys[j]
            row[y] = best[y]
    return attempts


@njit(**_JIT)
def base_case_kernel(est, full_ptr, full_idx, ptr, idx, ws, tops):
    """Sequentially for each w: BFS from w in (edges at w) + (ptr/idx),
    relax est(w, .), then est(x, y) <- est(x, w) + est(w, y) on tops x tops."""
    n = ptr.shape[0] - 1
    dist = np.full(n, INF, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    nt = tops.shape[0]
    scans = 0
    attempts = 0
    improved = 0
    for k in range(ws.shape[0]):
        w = ws[k]
        cnt, sc = bfs_into(ptr, idx, full_ptr, full_idx, w, INF, dist, queue)
        scans += sc
        attempts += cnt
        for j in range(cnt):
            v = queue[j]
            d = dist[v]
            if v != w and d < est[w, v]:
                est[w, v] = d
                est[v, w] = d
                improved += 1
            dist[v] = INF
        attempts += nt * nt
        for a in range(nt):
            x = tops[a]
            dxw = np.int64(est[x, w])
            if dxw == INF:
                continue
            for b in range(nt):
                y = tops[b]
                if y == x:
                    continue
                dwy = np.int64(est[w, y])
                if dwy == INF:
                    continue
                val = dxw + dwy
                if val < est[x, y]:
                    est[x, y] = val
                    est[y, x] = val
                    improved += 1
    return scans, attempts, improved


@njit(**_JIT)
def relax_via_inverse_balls(est, cptr, cu, cd, ptr, idx):
    """Given inverse balls C(m) = {(u, d(u, m))} in CSR form, relax
    est(u, v) with d(u, m) + d(v, m) for u, v in C(m), and with
    d(u, m1) + 1 + d(v, m2) for every edge (m1, m2)."""
    n = ptr.shape[0] - 1
    attempts = 0
    improved = 0
    for m in range(n):
        a0 = cptr[m]
        a1 = cptr[m + 1]
        attempts += (a1 - a0) * (a1 - a0)
        for i in range(a0, a1):
            u = cu[i]
            du = cd[i]
            for j in range(a0, a1):
                v = cu[j]
                if v == u:
                    continue
                val = du + cd[j]
                if val < est[u, v]:
                    est[u, v] = val
                    est[v, u] = val
                    improved += 1
        for e in range(ptr[m], ptr[m + 1]):
            m2 = idx[e]
            b0 = cptr[m2]
            b1 = cptr[m2 + 1]
            attempts += (a1 - a0) * (b1 - b0)
            for i in range(a0, a1):
                u = cu[i]
                du = cd[i] + 1
                for j in range(b0, b1):
                    v = cu[j]
                    if v == u:
                        continue
                    val = du + cd[j]
                    if val < est[u, v]:
                        est[u, v] = val
                        est[v, u] = val
                        improved += 1
    return attempts, improved


@njit(**_JIT)
def canonical_parents(ptr, idx, row):
    """BFS-tree parents for a source whose exact distances are ``row``:
    the smallest-id neighbour one step closer; -1 for the source and for
    unreachable vertices."""
    n = ptr.shape[0] - 1
    parent = np.full(n, -1, dtype=np.int64)
    for v in range(n):
        dv = np.int64(row[v])
        if dv == INF or dv == 0:
            continue
        for e in range(ptr[v], ptr[v + 1]):
            u = idx[e]
            if np.int64(row[u]) == dv - 1:
                parent[v] = u
                break
    return parent

"""Numba kernels for the layered proximity graph.

Flat-array layout only: adjacency rows padded with -1, degrees tracked
separately, inner-product distance stored negated so smaller is closer.
Heaps are hand-rolled (dist, id) binary heaps over parallel arrays; the id
participates in comparisons so traversal order is fully deterministic.

Imported lazily; the pure-numpy twin lives in hnsw.py.
"""
import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _dot(a, b, dim):
    s = 0.0
    for x in range(dim):
        s += np.float64(a[x]) * np.float64(b[x])
    return s


@njit(cache=True, inline="always")
def _less(d1, i1, d2, i2):
    return d1 < d2 or (d1 == d2 and i1 < i2)


@njit(cache=True)
def _hpush(hd, hi, size, d, i):
    hd[size] = d
    hi[size] = i
    size += 1
    j = size - 1
    while j > 0:
        p = (j - 1) >> 1
        if _less(hd[j], hi[j], hd[p], hi[p]):
            hd[j], hd[p] = hd[p], hd[j]
            hi[j], hi[p] = hi[p], hi[j]
            j = p
        else:
            break
    return size


@njit(cache=True)
def _hpop(hd, hi, size):
    size -= 1
    hd[0] = hd[size]
    hi[0] = hi[size]
    j = 0
    while True:
        l = 2 * j + 1
        r = l + 1
        small = j
        if l < size and _less(hd[l], hi[l], hd[small], hi[small]):
            small = l
        if r < size and _less(hd[r], hi[r], hd[small], hi[small]):
            small = r
        if small == j:
            break
        hd[j], hd[small] = hd[small], hd[j]
        hi[j], hi[small] = hi[small], hi[j]
        j = small
    return size


@njit(cache=True)
def _search_layer(vectors, adj, deg, q, eps_i, eps_d, n_eps, ef,
                  visited, epoch, cand_d, cand_i, out_d, out_i):
    """Best-first expansion at one layer.

    out_* is used as a max-heap (negated dists) during the walk, then
    rewritten in place sorted ascending by (dist, id). Returns the count.
    """
    dim = vectors.shape[1]
    csize = 0
    rsize = 0
    for k in range(n_eps):
        e = eps_i[k]
        if visited[e] == epoch:
            continue
        visited[e] = epoch
        d = eps_d[k]
        csize = _hpush(cand_d, cand_i, csize, d, e)
        rsize = _hpush(out_d, out_i, rsize, -d, e)
        if rsize > ef:
            rsize = _hpop(out_d, out_i, rsize)
    while csize > 0:
        d = cand_d[0]
        c = cand_i[0]
        csize = _hpop(cand_d, cand_i, csize)
        if rsize >= ef and d > -out_d[0]:
            break
        for t in range(deg[c]):
            nb = adj[c, t]
            if visited[nb] == epoch:
                continue
            visited[nb] = epoch
            dnb = -_dot(q, vectors[nb], dim)
            if rsize < ef or dnb < -out_d[0]:
                csize = _hpush(cand_d, cand_i, csize, dnb, nb)
                rsize = _hpush(out_d, out_i, rsize, -dnb, nb)
                if rsize > ef:
                    rsize = _hpop(out_d, out_i, rsize)
    for k in range(rsize):
        out_d[k] = -out_d[k]
    for a in range(1, rsize):
        db = out_d[a]
        ib = out_i[a]
        b = a - 1
        while b >= 0 and not _less(out_d[b], out_i[b], db, ib):
            out_d[b + 1] = out_d[b]
            out_i[b + 1] = out_i[b]
            b -= 1
        out_d[b + 1] = db
        out_i[b + 1] = ib
    return rsize


@njit(cache=True)
def _select_heuristic(vectors, cand_d, cand_i, n_cand, cap,
                      sel_d, sel_i, pr_d, pr_i):
    """Diversity-aware neighbour pick: keep a candidate only when it is
    closer to the query than to anything already kept, then backfill from
    the pruned pool. Candidates must arrive sorted ascending."""
    if n_cand <= cap:
        for k in range(n_cand):
            sel_d[k] = cand_d[k]
            sel_i[k] = cand_i[k]
        return n_cand
    dim = vectors.shape[1]
    ns = 0
    npr = 0
    for k in range(n_cand):
        if ns == cap:
            break
        d = cand_d[k]
        c = cand_i[k]
        keep = True
        for s in range(ns):
            dd = -_dot(vectors[c], vectors[sel_i[s]], dim)
            if dd < d:
                keep = False
                break
        if keep:
            sel_d[ns] = d
            sel_i[ns] = c
            ns += 1
        else:
            pr_d[npr] = d
            pr_i[npr] = c
            npr += 1
    k = 0
    while ns < cap and k < npr:
        sel_d[ns] = pr_d[k]
        sel_i[ns] = pr_i[k]
        ns += 1
        k += 1
    return ns


@njit(cache=True)
def _greedy_descent(vectors, adj, deg, q, cur, cur_d):
    dim = vectors.shape[1]
    moved = True
    while moved:
        moved = False
        best = cur
        best_d = cur_d
        for t in range(deg[cur]):
            nb = adj[cur, t]
            dnb = -_dot(q, vectors[nb], dim)
            if dnb < best_d:
                best_d = dnb
                best = nb
        if best != cur:
            cur = best
            cur_d = best_d
            moved = True
    return cur, cur_d


@njit(cache=True)
def build_kernel(vectors, levels, m, m0, efc, adj0, deg0, adj_up, deg_up):
    n = vectors.shape[0]
    dim = vectors.shape[1]
    visited = np.zeros(n, dtype=np.int64)
    epoch = 0
    cand_d = np.empty(n + 2, dtype=np.float64)
    cand_i = np.empty(n + 2, dtype=np.int32)
    out_d = np.empty(efc + 3, dtype=np.float64)
    out_i = np.empty(efc + 3, dtype=np.int32)
    eps_d = np.empty(efc + 3, dtype=np.float64)
    eps_i = np.empty(efc + 3, dtype=np.int32)
    cap_max = m0 if m0 > m else m
    sel_d = np.empty(cap_max + 2, dtype=np.float64)
    sel_i = np.empty(cap_max + 2, dtype=np.int32)
    pr_d = np.empty(efc + 3, dtype=np.float64)
    pr_i = np.empty(efc + 3, dtype=np.int32)
    pc_d = np.empty(cap_max + 2, dtype=np.float64)
    pc_i = np.empty(cap_max + 2, dtype=np.int32)

    entry = 0
    top = levels[0]
    for i in range(1, n):
        q = vectors[i]
        lvl = levels[i]
        cur = entry
        cur_d = -_dot(q, vectors[entry], dim)
        layer = top
        while layer > lvl:
            cur, cur_d = _greedy_descent(vectors, adj_up[layer - 1],
                                         deg_up[layer - 1], q, cur, cur_d)
            layer -= 1
        n_eps = 1
        eps_i[0] = cur
        eps_d[0] = cur_d
        start = lvl if lvl < top else top
        for layer in range(start, -1, -1):
            if layer == 0:
                adj = adj0
                deg = deg0
                cap = m0
            else:
                adj = adj_up[layer - 1]
                deg = deg_up[layer - 1]
                cap = m
            epoch += 1
            nres = _search_layer(vectors, adj, deg, q, eps_i, eps_d, n_eps,
                                 efc, visited, epoch, cand_d, cand_i,
                                 out_d, out_i)
            nsel = _select_heuristic(vectors, out_d, out_i, nres, m,
                                     sel_d, sel_i, pr_d, pr_i)
            for s in range(nsel):
                nb = sel_i[s]
                adj[i, deg[i]] = nb
                deg[i] += 1
                if deg[nb] < cap:
                    adj[nb, deg[nb]] = i
                    deg[nb] += 1
                else:
                    # overflow: keep the nearest cap links; diversification
                    # already happened on the out-link side
                    ncand = deg[nb]
                    for t in range(ncand):
                        pc_i[t] = adj[nb, t]
                        pc_d[t] = -_dot(vectors[nb], vectors[adj[nb, t]], dim)
                    pc_i[ncand] = i
                    pc_d[ncand] = -_dot(vectors[nb], vectors[i], dim)
                    ncand += 1
                    for a in range(1, ncand):
                        db = pc_d[a]
                        ib = pc_i[a]
                        b = a - 1
                        while b >= 0 and not _less(pc_d[b], pc_i[b], db, ib):
                            pc_d[b + 1] = pc_d[b]
                            pc_i[b + 1] = pc_i[b]
                            b -= 1
                        pc_d[b + 1] = db
                        pc_i[b + 1] = ib
                    for t in range(cap):
                        adj[nb, t] = pc_i[t]
                    deg[nb] = cap
            for t in range(nres):
                eps_i[t] = out_i[t]
                eps_d[t] = out_d[t]
            n_eps = nres
        if lvl > top:
            entry = i
            top = lvl
    return entry


@njit(cache=True)
def search_kernel(vectors, adj0, deg0, adj_up, deg_up, entry, top,
                  q, k, ef):
    n = vectors.shape[0]
    dim = vectors.shape[1]
    visited = np.zeros(n, dtype=np.int64)
    cand_d = np.empty(n + 2, dtype=np.float64)
    cand_i = np.empty(n + 2, dtype=np.int32)
    out_d = np.empty(ef + 3, dtype=np.float64)
    out_i = np.empty(ef + 3, dtype=np.int32)
    eps_d = np.empty(1, dtype=np.float64)
    eps_i = np.empty(1, dtype=np.int32)
    cur = entry
    cur_d = -_dot(q, vectors[entry], dim)
    layer = top
    while layer > 0:
        cur, cur_d = _greedy_descent(vectors, adj_up[layer - 1],
                                     deg_up[layer - 1], q, cur, cur_d)
        layer -= 1
    eps_i[0] = cur
    eps_d[0] = cur_d
    nres = _search_layer(vectors, adj0, deg0, q, eps_i, eps_d, 1, ef,
                         visited, 1, cand_d, cand_i, out_d, out_i)
    kk = k if k < nres else nres
    return out_d[:kk].copy(), out_i[:kk].copy()

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contract as ``_core_py``."""

from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free
import time

import numpy as np

cdef long CHECK_EVERY = 1024
cdef double PRUNE_EPS = 1e-12


cdef struct Ctx:
    int K
    int n
    int gaussian
    double capacity
    double safety
    double *values
    double *sizes
    double *variances
    long *caps
    long *counts
    # best-n buffer, sorted by decreasing value
    int nbest
    double *best_val
    long *best_counts
    long nodes
    int timed_out
    double deadline


cdef double now():
    return time.perf_counter()


cdef inline double threshold(Ctx *c):
    cdef double t, u
    if c.nbest == 0:
        return -1e300
    t = c.best_val[0]
    if c.nbest >= c.n:
        u = c.best_val[c.nbest - 1]
        if u < 1.0:
            u = 1.0
    else:
        u = 1.0
    return t if t < u else u


cdef void insert(Ctx *c, double val):
    cdef int i, k, slot
    cdef double tv
    cdef long tc
    if c.nbest < c.n:
        slot = c.nbest
        c.nbest += 1
    elif val > c.best_val[c.nbest - 1]:
        slot = c.nbest - 1
    else:
        return
    c.best_val[slot] = val
    for k in range(c.K):
        c.best_counts[slot * c.K + k] = c.counts[k]
    i = slot
    while i > 0 and c.best_val[i - 1] < c.best_val[i]:
        tv = c.best_val[i - 1]
        c.best_val[i - 1] = c.best_val[i]
        c.best_val[i] = tv
        for k in range(c.K):
            tc = c.best_counts[(i - 1) * c.K + k]
            c.best_counts[(i - 1) * c.K + k] = c.best_counts[i * c.K + k]
            c.best_counts[i * c.K + k] = tc
        i -= 1


cdef double frac_bound(Ctx *c, int depth, double room):
    cdef double bound = 0.0, take
    cdef int k
    for k in range(depth, c.K):
        if room <= 0.0 or c.values[k] <= 0.0:
            break
        take = room / c.sizes[k]
        if take > c.caps[k]:
            take = c.caps[k]
        bound += take * c.values[k]
        room -= take * c.sizes[k]
    return bound


cdef void dfs(Ctx *c, int depth, double val, double lin, double var):
    cdef double room, size, vk
    cdef long cnt, m
    c.nodes += 1
    if c.nodes % CHECK_EVERY == 0 and now() > c.deadline:
        c.timed_out = 1
    if c.timed_out:
        return
    if depth == c.K:
        if lin > 0.0:
            insert(c, val)
        return
    room = c.capacity - lin
    if c.gaussian:
        room -= c.safety * sqrt(var)
    if c.nbest > 0 and val + frac_bound(c, depth, room) <= threshold(c) + PRUNE_EPS:
        return
    size = c.sizes[depth]
    vk = c.variances[depth]
    if room > 0:
        m = <long>(room / size)
    else:
        m = 0
    if m > c.caps[depth]:
        m = c.caps[depth]
    if c.gaussian:
        while m > 0 and lin + m * size + c.safety * sqrt(var + m * vk) > c.capacity:
            m -= 1
    cnt = m
    while cnt >= 0:
        c.counts[depth] = cnt
        if c.gaussian:
            dfs(c, depth + 1, val + cnt * c.values[depth], lin + cnt * size, var + cnt * vk)
        else:
            dfs(c, depth + 1, val + cnt * c.values[depth], lin + cnt * size, 0.0)
        if c.timed_out:
            break
        cnt -= 1
    c.counts[depth] = 0


def search(values, sizes, variances, caps, double capacity, double safety, int n,
           double time_limit):
    cdef Ctx c
    cdef int K = len(values), i, k
    c.K = K
    c.n = n
    c.gaussian = 1 if safety > 0.0 else 0
    c.capacity = capacity
    c.safety = safety
    c.nbest = 0
    c.nodes = 0
    c.timed_out = 0
    c.deadline = now() + time_limit
    c.values = <double *>malloc(K * sizeof(double))
    c.sizes = <double *>malloc(K * sizeof(double))
    c.variances = <double *>malloc(K * sizeof(double))
    c.caps = <long *>malloc(K * sizeof(long))
    c.counts = <long *>malloc(K * sizeof(long))
    c.best_val = <double *>malloc(n * sizeof(double))
    c.best_counts = <long *>malloc(n * K * sizeof(long))
    try:
        for k in range(K):
            c.values[k] = values[k]
            c.sizes[k] = sizes[k]
            c.variances[k] = variances[k]
            c.caps[k] = caps[k]
            c.counts[k] = 0
        dfs(&c, 0, 0.0, 0.0, 0.0)
        leaves = []
        for i in range(c.nbest):
            leaves.append(
                (c.best_val[i], tuple([c.best_counts[i * K + k] for k in range(K)]))
            )
        return leaves, bool(c.timed_out), c.nodes
    finally:
        free(c.values)
        free(c.sizes)
        free(c.variances)
        free(c.caps)
        free(c.counts)
        free(c.best_val)
        free(c.best_counts)


def dp_topn(values, int_sizes, int capacity, int n):
    cdef int K = len(values), keep = n + 1, C1 = capacity + 1
    cdef int L, k, c, cnt, r, s, j, nb, depth, rank
    cdef double add, cand
    cdef double *vals = <double *>malloc(K * sizeof(double))
    cdef int *sz = <int *>malloc(K * sizeof(int))
    # layer L decides item K-1-L; cell (L, c) holds up to `keep` entries
    cdef double *tv = <double *>malloc(K * C1 * keep * sizeof(double))
    cdef int *tc = <int *>malloc(K * C1 * keep * sizeof(int))
    cdef int *tr = <int *>malloc(K * C1 * keep * sizeof(int))
    cdef int *tn = <int *>malloc(K * C1 * sizeof(int))
    cdef double bv
    cdef int bc, br, pos, base, pbase, plen
    try:
        for k in range(K):
            vals[k] = values[k]
            sz[k] = int_sizes[k]
        for L in range(K):
            k = K - 1 - L
            s = sz[k]
            for c in range(C1):
                base = (L * C1 + c) * keep
                nb = 0
                cnt = 0
                while cnt * s <= c:
                    add = cnt * vals[k]
                    if L == 0:
                        plen = 1
                    else:
                        plen = tn[(L - 1) * C1 + c - cnt * s]
                        pbase = ((L - 1) * C1 + c - cnt * s) * keep
                    for r in range(plen):
                        if L == 0:
                            cand = add
                        else:
                            cand = tv[pbase + r] + add
                        # insertion keeping order (-value, -cnt, rank)
                        if nb == keep and not (cand > tv[base + nb - 1] or (cand == tv[base + nb - 1] and (cnt > tc[base + nb - 1] or (cnt == tc[base + nb - 1] and r < tr[base + nb - 1])))):
                            continue
                        pos = nb if nb < keep else keep - 1
                        while pos > 0 and (cand > tv[base + pos - 1] or (cand == tv[base + pos - 1] and (cnt > tc[base + pos - 1] or (cnt == tc[base + pos - 1] and r < tr[base + pos - 1])))):
                            if pos < keep:
                                tv[base + pos] = tv[base + pos - 1]
                                tc[base + pos] = tc[base + pos - 1]
                                tr[base + pos] = tr[base + pos - 1]
                            pos -= 1
                        tv[base + pos] = cand
                        tc[base + pos] = cnt
                        tr[base + pos] = r
                        if nb < keep:
                            nb += 1
                    cnt += 1
                tn[L * C1 + c] = nb
        out = []
        L = K - 1
        for rank in range(tn[L * C1 + capacity]):
            counts = [0] * K
            c = capacity
            r = rank
            for depth in range(K):
                L = K - 1 - depth
                base = (L * C1 + c) * keep
                cnt = tc[base + r]
                counts[depth] = cnt
                r = tr[base + r]
                c -= cnt * sz[depth]
            L = K - 1
            if any(counts):
                out.append((tv[(L * C1 + capacity) * keep + rank], tuple(counts)))
        return out[:n]
    finally:
        free(vals)
        free(sz)
        free(tv)
        free(tc)
        free(tr)
        free(tn)


def cover_swap(long[:, ::1] A, long[::1] b, v_start, long max_moves, long tabu_len,
               double time_limit):
    cdef Py_ssize_t K = A.shape[0], P = A.shape[1]
    cdef Py_ssize_t i, j, k, r, t, bi, bj
    cdef long it
    v_np = np.array(v_start, dtype=np.int64)
    cdef long[::1] v = v_np
    cdef long[::1] c = np.zeros(K, dtype=np.int64)
    cdef double[::1] w = np.ones(K)
    cdef long[::1] tabu = np.full(P, -1, dtype=np.int64)
    cdef double[::1] G = np.zeros(P)
    cdef double[::1] corr = np.zeros(P)
    cdef long[::1] cand = np.zeros(P, dtype=np.int64)
    cdef Py_ssize_t nc, q
    Anp = np.asarray(A)
    col_nz = [np.flatnonzero(Anp[:, j]) for j in range(P)]
    row_nz = [np.flatnonzero(Anp[k]) for k in range(K)]
    cdef long[::1] col_ptr = np.cumsum([0] + [len(x) for x in col_nz]).astype(np.int64)
    cdef long[::1] row_ptr = np.cumsum([0] + [len(x) for x in row_nz]).astype(np.int64)
    cdef long[::1] col_rows = np.concatenate(col_nz + [np.zeros(0, np.int64)]).astype(np.int64)
    cdef long[::1] row_cols = np.concatenate(row_nz + [np.zeros(0, np.int64)]).astype(np.int64)
    cdef double deadline = now() + time_limit
    cdef double best, d, Ri, ek, a, pe, aj, hi
    cdef bint deficit
    for j in range(P):
        if v[j]:
            for t in range(col_ptr[j], col_ptr[j + 1]):
                c[col_rows[t]] += v[j] * A[col_rows[t], j]
    for it in range(max_moves):
        deficit = False
        for k in range(K):
            if b[k] > c[k]:
                deficit = True
                break
        if not deficit:
            return v_np, it, False
        if it % CHECK_EVERY == CHECK_EVERY - 1 and now() > deadline:
            return None, it, True
        nc = 0
        for j in range(P):
            d = 0.0
            for t in range(col_ptr[j], col_ptr[j + 1]):
                k = col_rows[t]
                ek = b[k] - c[k]
                if ek > 0:
                    aj = A[k, j]
                    d -= w[k] * (ek if aj >= ek else aj)
            G[j] = d
            if d < 0.0:
                cand[nc] = j
                nc += 1
        if nc == 0:
            return None, it, False
        best = INFINITY
        bi = -1
        bj = -1
        for i in range(P):
            if v[i] <= 0:
                continue
            Ri = 0.0
            for t in range(col_ptr[i], col_ptr[i + 1]):
                k = col_rows[t]
                ek = b[k] - c[k]
                a = A[k, i]
                pe = ek if ek > 0 else 0.0
                hi = ek + a if ek + a > 0 else 0.0
                Ri += w[k] * (hi - pe)
                for r in range(row_ptr[k], row_ptr[k + 1]):
                    j = row_cols[r]
                    aj = A[k, j]
                    corr[j] += w[k] * ((ek + a - aj if ek + a - aj > 0 else 0.0) - hi
                                       - (ek - aj if ek - aj > 0 else 0.0) + pe)
            for q in range(nc):
                j = cand[q]
                if j != i and tabu[j] <= it:
                    d = Ri + G[j] + corr[j]
                    if d < best - 1e-12:
                        best = d
                        bi = i
                        bj = j
            for t in range(col_ptr[i], col_ptr[i + 1]):
                k = col_rows[t]
                for r in range(row_ptr[k], row_ptr[k + 1]):
                    corr[row_cols[r]] = 0.0
        if bi < 0 or best >= -1e-12:
            # local minimum: raise the weight of every uncovered row
            for k in range(K):
                if b[k] > c[k]:
                    w[k] += 1.0
            if bi < 0 or best > 1e-12:
                continue
        v[bi] -= 1
        v[bj] += 1
        for t in range(col_ptr[bi], col_ptr[bi + 1]):
            c[col_rows[t]] -= A[col_rows[t], bi]
        for t in range(col_ptr[bj], col_ptr[bj + 1]):
            c[col_rows[t]] += A[col_rows[t], bj]
        tabu[bi] = it + tabu_len
    return None, max_moves, False

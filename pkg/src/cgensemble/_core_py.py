"""Pure-Python kernels (fallback for the compiled ``_core``).

The knapsack entry points work on items already sorted by decreasing
value/size ratio. Capacities passed in already include the feasibility
tolerance.
"""

from __future__ import annotations

import math
import time

import numpy as np

CHECK_EVERY = 1024
PRUNE_EPS = 1e-12


def search(values, sizes, variances, caps, capacity, safety, n, time_limit):
    """Depth-first branch and bound keeping the ``n`` best distinct leaves.

    Returns ``(leaves, timed_out, nodes)`` where ``leaves`` is a list of
    ``(value, counts)`` sorted by decreasing value. A leaf is kept only if
    it can still appear in the output: it beats the incumbent best, or it
    has value above 1 (negative reduced cost) and beats the n-th best.
    """
    K = len(values)
    gaussian = safety > 0.0
    counts = [0] * K
    best: list[tuple[float, tuple[int, ...]]] = []
    deadline = time.perf_counter() + time_limit
    state = {"nodes": 0, "timed_out": False}

    def threshold():
        if not best:
            return -math.inf
        t = best[0][0]
        u = max(1.0, best[-1][0]) if len(best) >= n else 1.0
        return min(t, u)

    def insert(val):
        leaf = (val, tuple(counts))
        if len(best) < n:
            best.append(leaf)
        elif val > best[-1][0]:
            best[-1] = leaf
        else:
            return
        i = len(best) - 1
        while i > 0 and best[i - 1][0] < best[i][0]:
            best[i - 1], best[i] = best[i], best[i - 1]
            i -= 1

    def frac_bound(depth, room):
        bound = 0.0
        for k in range(depth, K):
            if room <= 0.0 or values[k] <= 0.0:
                break
            take = room / sizes[k]
            if take > caps[k]:
                take = caps[k]
            bound += take * values[k]
            room -= take * sizes[k]
        return bound

    def dfs(depth, val, lin, var):
        state["nodes"] += 1
        if state["nodes"] % CHECK_EVERY == 0 and time.perf_counter() > deadline:
            state["timed_out"] = True
        if state["timed_out"]:
            return
        if depth == K:
            if lin > 0.0:
                insert(val)
            return
        room = capacity - lin
        if gaussian:
            room -= safety * math.sqrt(var)
        if best and val + frac_bound(depth, room) <= threshold() + PRUNE_EPS:
            return
        size = sizes[depth]
        c = int(room / size) if room > 0 else 0
        if c > caps[depth]:
            c = caps[depth]
        if gaussian:
            vk = variances[depth]
            while c > 0 and lin + c * size + safety * math.sqrt(var + c * vk) > capacity:
                c -= 1
        for cnt in range(c, -1, -1):
            counts[depth] = cnt
            if gaussian:
                dfs(depth + 1, val + cnt * values[depth], lin + cnt * size, var + cnt * variances[depth])
            else:
                dfs(depth + 1, val + cnt * values[depth], lin + cnt * size, 0.0)
            if state["timed_out"]:
                break
        counts[depth] = 0

    dfs(0, 0.0, 0.0, 0.0)
    return best, state["timed_out"], state["nodes"]


def dp_topn(values, int_sizes, capacity, n):
    """Top-``n`` distinct nonzero patterns by dynamic programming.

    Items are decided one at a time (last item first), each cell keeping
    the ``n + 1`` best partial patterns of total size at most ``c``; one
    extra slot absorbs the empty pattern. Returns ``(value, counts)``
    pairs sorted by decreasing value.
    """
    K = len(values)
    keep = n + 1
    prev = [[(0.0, 0, 0)] for _ in range(capacity + 1)]
    layers = []
    for k in range(K - 1, -1, -1):
        s, v = int_sizes[k], values[k]
        cur = []
        for c in range(capacity + 1):
            cands = []
            cnt = 0
            while cnt * s <= c:
                add = cnt * v
                for r, entry in enumerate(prev[c - cnt * s]):
                    cands.append((entry[0] + add, cnt, r))
                cnt += 1
            cands.sort(key=lambda e: (-e[0], -e[1], e[2]))
            cur.append(cands[:keep])
        layers.append(cur)
        prev = cur
    out = []
    for rank, entry in enumerate(prev[capacity]):
        counts = [0] * K
        c, r = capacity, rank
        for depth in range(K):
            k = depth  # layers[-1] decided item 0
            value, cnt, r_prev = layers[K - 1 - depth][c][r]
            counts[k] = cnt
            c -= cnt * int_sizes[k]
            r = r_prev
        if any(counts):
            out.append((entry[0], tuple(counts)))
    return out[:n]


def cover_swap(A, b, v_start, max_moves, tabu_len, time_limit):
    """Weighted local search for ``A v >= b`` with ``sum(v)`` held fixed.

    Each move shifts one unit from a used column ``i`` to a column ``j``,
    choosing the move that most reduces the weighted uncovered demand.
    At a local minimum the weights of uncovered rows grow by one.
    A column just emptied may not be re-added for ``tabu_len`` moves.
    Returns ``(v, moves, timed_out)`` with ``v`` None on failure.
    """
    A = np.asarray(A, dtype=np.int64)
    K, P = A.shape
    Af = A.astype(float)
    bf = np.asarray(b, dtype=float)
    v = np.array(v_start, dtype=np.int64)
    c = Af @ v
    w = np.ones(K)
    tabu = np.full(P, -1, dtype=np.int64)
    rows_of = [np.flatnonzero(A[:, j]) for j in range(P)]
    deadline = time.perf_counter() + time_limit
    for it in range(max_moves):
        e = bf - c
        pe = np.maximum(e, 0.0)
        if not pe.any():
            return v, it, False
        if it % CHECK_EVERY == CHECK_EVERY - 1 and time.perf_counter() > deadline:
            return None, it, True
        sup = np.flatnonzero(v > 0)
        gain = w @ (np.maximum(e[:, None] - Af, 0.0) - pe[:, None])
        # only columns covering some uncovered row can help
        cand = np.flatnonzero(gain < 0)
        if len(cand) == 0:
            return None, it, False
        gain = gain[cand]
        loss = np.array([w[r] @ (np.maximum(e[r] + Af[r, i], 0.0) - pe[r]) for i in sup for r in [rows_of[i]]])
        # rows shared by the removed and the added column need a correction
        owner = np.concatenate([np.full(len(rows_of[i]), s) for s, i in enumerate(sup)])
        ks = np.concatenate([rows_of[i] for i in sup])
        a = Af[ks, sup[owner]][:, None]
        ek = e[ks][:, None]
        Ak = Af[np.ix_(ks, cand)]
        corr = w[ks][:, None] * (
            np.maximum(ek + a - Ak, 0.0) - np.maximum(ek + a, 0.0) - np.maximum(ek - Ak, 0.0) + np.maximum(ek, 0.0)
        )
        starts = np.flatnonzero(np.r_[True, owner[1:] != owner[:-1]])
        delta = loss[:, None] + gain[None, :] + np.add.reduceat(corr, starts, axis=0)
        delta[sup[:, None] == cand[None, :]] = np.inf
        delta[:, tabu[cand] > it] = np.inf
        flat = int(np.argmin(delta))
        si, q = divmod(flat, len(cand))
        j = cand[q]
        best = delta[si, q]
        if not best < -1e-12:
            w += pe > 0
            if not best <= 1e-12:
                continue
        i = sup[si]
        v[i] -= 1
        v[j] += 1
        c += Af[:, j] - Af[:, i]
        tabu[i] = it + tabu_len
    return None, max_moves, False

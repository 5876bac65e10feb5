"""Compiled CART growth loop (numba).

Every row of ``order`` holds the sample indices sorted by one feature.
Each node owns the same column range ``[start, end)`` in every row;
splitting a node stable-partitions that range in each row, so child
ranges stay sorted and nothing is re-sorted below the root.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _score(nl, ones, n, tot1):
    zeros = nl - ones
    nr = n - nl
    r1 = tot1 - ones
    r0 = nr - r1
    return (nl - (zeros * zeros + ones * ones) / nl) + (nr - (r0 * r0 + r1 * r1) / nr)


@njit(cache=True)
def _find_split(XT, y, order, s, e, msl, tie_tol, feat_best):
    # pass 1: best score per feature; pass 2 rescans only the first feature
    # reaching the global minimum (within tie_tol) for its lowest threshold
    n_feat = order.shape[0]
    m = e - s
    tot1 = 0.0
    for j in range(s, e):
        tot1 += y[order[0, j]]
    best = np.inf
    for f in range(n_feat):
        fb = np.inf
        ones = 0.0
        for i in range(m - 1):
            idx = order[f, s + i]
            ones += y[idx]
            nl = i + 1
            if nl < msl or m - nl < msl:
                continue
            if XT[f, idx] == XT[f, order[f, s + i + 1]]:
                continue
            sc = _score(float(nl), ones, float(m), tot1)
            if sc < fb:
                fb = sc
        feat_best[f] = fb
        if fb < best:
            best = fb
    if best == np.inf:
        return -1, 0.0, best
    limit = best + tie_tol * max(1.0, abs(best))
    for f in range(n_feat):
        if feat_best[f] > limit:
            continue
        ones = 0.0
        for i in range(m - 1):
            idx = order[f, s + i]
            ones += y[idx]
            nl = i + 1
            if nl < msl or m - nl < msl:
                continue
            lo = XT[f, idx]
            hi = XT[f, order[f, s + i + 1]]
            if lo == hi:
                continue
            sc = _score(float(nl), ones, float(m), tot1)
            if sc <= limit:
                thr = (lo + hi) / 2.0
                if thr >= hi:
                    thr = lo
                return f, thr, sc
    return -1, 0.0, best


@njit(cache=True)
def grow(XT, y, order, msl, max_depth, tie_tol, feat, thr, left, right, counts):
    """Grow a tree in pre-order; returns the node count. ``max_depth < 0`` means unlimited."""
    n_feat, n = order.shape
    goes_left = np.zeros(XT.shape[1], dtype=np.bool_)
    tmp = np.empty(n, dtype=np.int64)
    feat_best = np.empty(n_feat)
    st_s = np.empty(n + 1, dtype=np.int64)
    st_e = np.empty(n + 1, dtype=np.int64)
    st_d = np.empty(n + 1, dtype=np.int64)
    st_p = np.empty(n + 1, dtype=np.int64)
    st_l = np.empty(n + 1, dtype=np.bool_)
    top = 0
    st_s[0] = 0
    st_e[0] = n
    st_d[0] = 0
    st_p[0] = -1
    st_l[0] = False
    top = 1
    n_nodes = 0
    while top > 0:
        top -= 1
        s = st_s[top]
        e = st_e[top]
        depth = st_d[top]
        parent = st_p[top]
        i = n_nodes
        n_nodes += 1
        if parent >= 0:
            if st_l[top]:
                left[parent] = i
            else:
                right[parent] = i
        m = e - s
        c1 = 0
        for j in range(s, e):
            c1 += y[order[0, j]]
        counts[i, 0] = m - c1
        counts[i, 1] = c1
        feat[i] = -1
        left[i] = -1
        right[i] = -1
        thr[i] = 0.0
        if c1 == 0 or c1 == m or (max_depth >= 0 and depth >= max_depth):
            continue
        f, t, sc = _find_split(XT, y, order, s, e, msl, tie_tol, feat_best)
        if f < 0:
            continue
        feat[i] = f
        thr[i] = t
        n_l = 0
        for j in range(s, e):
            idx = order[f, j]
            gl = XT[f, idx] <= t
            goes_left[idx] = gl
            if gl:
                n_l += 1
        for g in range(n_feat):
            a = s
            b = 0
            for j in range(s, e):
                idx = order[g, j]
                if goes_left[idx]:
                    order[g, a] = idx
                    a += 1
                else:
                    tmp[b] = idx
                    b += 1
            for j in range(b):
                order[g, a + j] = tmp[j]
        st_s[top] = s + n_l
        st_e[top] = e
        st_d[top] = depth + 1
        st_p[top] = i
        st_l[top] = False
        top += 1
        st_s[top] = s
        st_e[top] = s + n_l
        st_d[top] = depth + 1
        st_p[top] = i
        st_l[top] = True
        top += 1
    return n_nodes

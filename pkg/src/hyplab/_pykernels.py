"""Pure Python / numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_ckernels`` module; used when
the extension is not built or when ``HYPLAB_PURE=1``.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

LADDER_LIMIT = None  # no fast path: Python ints never overflow


def farey_ladder(p: int, q: int) -> int:
    """Farey distance from 1/0 to canonical p/q with q >= 2."""
    a0 = p // q
    b = p - q * a0
    a = q * (a0 + 1) - p
    dl = dr = 1
    while True:
        if b < a:
            j, rem = divmod(a, b)
            if rem == 0:
                return min(dl + 1, dr + j)
            dl, dr = min(dl + 1, dr + j + 1), min(dl + 1, dr + j)
            a, b = rem, b - rem
        elif a < b:
            j, rem = divmod(b, a)
            if rem == 0:
                return min(dr + 1, dl + j)
            dl, dr = min(dr + 1, dl + j), min(dr + 1, dl + j + 1)
            a, b = a - rem, rem
        else:
            return min(dl, dr) + 1


def bfs_all_pairs(n: int, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    adj = csr_matrix((np.ones(len(indices), dtype=np.int8), indices, indptr), shape=(n, n))
    dist = shortest_path(adj, method="D", unweighted=True, directed=False)
    dist[np.isinf(dist)] = -1
    return dist.astype(np.int32)


def canonical_predecessors(D: np.ndarray, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    n = D.shape[0]
    adj = np.zeros((n, n), dtype=bool)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    adj[rows, indices] = True
    pred = np.full((n, n), -1, dtype=np.int32)
    for x in range(n):
        dx = D[x]
        cand = adj & (dx[None, :] == dx[:, None] - 1)
        has = cand.any(axis=1)
        pred[x, has] = np.argmax(cand[has], axis=1)
    return pred


def delta_four_point(D: np.ndarray) -> float:
    n = D.shape[0]
    D = D.astype(np.int64)
    best = 0
    for x in range(n):
        for y in range(x + 1, n):
            s1 = D[x, y] + D
            s2 = D[x][:, None] + D[y][None, :]
            s3 = s2.T
            hi = np.maximum(np.maximum(s1, s2), s3)
            lo = np.minimum(np.minimum(s1, s2), s3)
            gap = (2 * hi - (s1 + s2 + s3 - lo)).max()  # largest - median
            if gap > best:
                best = gap
    return best / 2.0


def interval_distance_table(D: np.ndarray) -> np.ndarray:
    """``T[x, y, v] = d(v, I(x, y))`` where I is the geodesic interval."""
    n = D.shape[0]
    T = np.zeros((n, n, n), dtype=np.int16)
    for x in range(n):
        for y in range(x, n):
            members = D[x] + D[y] == D[x, y]
            T[x, y] = T[y, x] = D[members].min(axis=0)
    return T


def delta_interval_slim(D: np.ndarray, T: np.ndarray) -> float:
    n = D.shape[0]
    best = 0
    for x in range(n):
        for y in range(x + 1, n):
            vs = np.flatnonzero(D[x] + D[y] == D[x, y])
            val = np.minimum(T[x][:, vs], T[y][:, vs]).max()
            if val > best:
                best = int(val)
    return float(best)


def _ext_gcd_vec(a: np.ndarray, b: np.ndarray):
    old_r, r = a.copy(), b.copy()
    old_s, s = np.ones_like(a), np.zeros_like(a)
    old_t, t = np.zeros_like(a), np.ones_like(a)
    while np.any(r != 0):
        nz = r != 0
        k = np.zeros_like(r)
        k[nz] = np.floor_divide(old_r[nz], r[nz])
        old_r, r = np.where(nz, r, old_r), np.where(nz, old_r - k * r, r)
        old_s, s = np.where(nz, s, old_s), np.where(nz, old_s - k * s, s)
        old_t, t = np.where(nz, t, old_t), np.where(nz, old_t - k * t, t)
    sign = np.where(old_r < 0, -1, 1)
    return old_s * sign, old_t * sign


def _k_range(c, e, n):
    """Integer k with |c + k e| <= n, as [lo, hi] arrays (empty when lo > hi)."""
    big = np.int64(4 * n + 4)
    lo = np.full_like(c, -big)
    hi = np.full_like(c, big)
    pos, neg, zero = e > 0, e < 0, e == 0
    lo[pos] = -np.floor_divide(c[pos] + n, e[pos])  # ceil((-n - c)/e)
    hi[pos] = np.floor_divide(n - c[pos], e[pos])
    lo[neg] = -np.floor_divide(n - c[neg], -e[neg])  # ceil((n - c)/e) with e < 0
    hi[neg] = np.floor_divide(c[neg] + n, -e[neg])
    bad = zero & (np.abs(c) > n)
    lo[bad], hi[bad] = 1, 0
    return lo, hi


def farey_box_bfs(p0: int, q0: int, n: int) -> np.ndarray:
    """BFS distances from p0/q0 in the Farey graph restricted to |p| <= n, 0 <= q <= n.

    Index of slope p/q is ``(p + n) * (n + 1) + q``; unreachable entries are -1.
    """
    width = n + 1
    dist = np.full((2 * n + 1) * width, -1, dtype=np.int32)
    dist[(p0 + n) * width + q0] = 0
    fp = np.array([p0], dtype=np.int64)
    fq = np.array([q0], dtype=np.int64)
    level = 0
    while fp.size:
        x, y = _ext_gcd_vec(fp, fq)  # fp*x + fq*y == 1
        r0, s0 = -y, x
        lo1, hi1 = _k_range(r0, fp, n)
        lo2, hi2 = _k_range(s0, fq, n)
        lo = np.maximum(lo1, lo2)
        hi = np.minimum(hi1, hi2)
        counts = np.maximum(hi - lo + 1, 0)
        total = int(counts.sum())
        if total == 0:
            break
        owner = np.repeat(np.arange(fp.size), counts)
        starts = np.cumsum(counts) - counts
        k = lo[owner] + (np.arange(total) - starts[owner])
        np_ = r0[owner] + k * fp[owner]
        nq = s0[owner] + k * fq[owner]
        flip = (nq < 0) | ((nq == 0) & (np_ < 0))
        np_ = np.where(flip, -np_, np_)
        nq = np.where(flip, -nq, nq)
        idx = (np_ + n) * width + nq
        idx = np.unique(idx[dist[idx] < 0])
        level += 1
        dist[idx] = level
        fp = idx // width - n
        fq = idx % width
    return dist

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; mirrors ``hyplab._pykernels`` one for one."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

LADDER_LIMIT = 1 << 61


cdef inline long long _floordiv(long long a, long long b) nogil:
    cdef long long q = a / b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


cdef inline long long _min(long long a, long long b) nogil:
    return a if a < b else b


def farey_ladder(long long p, long long q):
    """Farey distance from 1/0 to canonical p/q, 2 <= q and |p|, q < 2**61."""
    cdef long long a0 = _floordiv(p, q)
    cdef long long b = p - q * a0
    cdef long long a = q * (a0 + 1) - p
    cdef long long dl = 1, dr = 1, j, rem, ndl, ndr
    while True:
        if b < a:
            j = a / b
            rem = a - j * b
            if rem == 0:
                return _min(dl + 1, dr + j)
            ndl = _min(dl + 1, dr + j + 1)
            ndr = _min(dl + 1, dr + j)
            dl, dr = ndl, ndr
            a, b = rem, b - rem
        elif a < b:
            j = b / a
            rem = b - j * a
            if rem == 0:
                return _min(dr + 1, dl + j)
            ndl = _min(dr + 1, dl + j)
            ndr = _min(dr + 1, dl + j + 1)
            dl, dr = ndl, ndr
            a, b = a - rem, rem
        else:
            return _min(dl, dr) + 1


def bfs_all_pairs(int n, const int[:] indptr, const int[:] indices):
    cdef cnp.ndarray[cnp.int32_t, ndim=2] D = np.full((n, n), -1, dtype=np.int32)
    cdef int[:, :] Dv = D
    cdef int *queue = <int *> malloc(n * sizeof(int))
    cdef int s, head, tail, u, v, k
    try:
        for s in range(n):
            Dv[s, s] = 0
            queue[0] = s
            head, tail = 0, 1
            while head < tail:
                u = queue[head]
                head += 1
                for k in range(indptr[u], indptr[u + 1]):
                    v = indices[k]
                    if Dv[s, v] < 0:
                        Dv[s, v] = Dv[s, u] + 1
                        queue[tail] = v
                        tail += 1
    finally:
        free(queue)
    return D


def canonical_predecessors(const int[:, :] D, const int[:] indptr, const int[:] indices):
    cdef int n = D.shape[0]
    cdef cnp.ndarray[cnp.int32_t, ndim=2] pred = np.full((n, n), -1, dtype=np.int32)
    cdef int[:, :] P = pred
    cdef int x, v, k, u, best
    for x in range(n):
        for v in range(n):
            if v == x:
                continue
            best = -1
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if D[x, u] == D[x, v] - 1 and (best < 0 or u < best):
                    best = u
            P[x, v] = best
    return pred


def delta_four_point(const int[:, :] D):
    cdef int n = D.shape[0]
    cdef int x, y, z, w
    cdef int s1, s2, s3, hi, md, best = 0
    for x in range(n):
        for y in range(x + 1, n):
            for z in range(y + 1, n):
                for w in range(z + 1, n):
                    s1 = D[x, y] + D[z, w]
                    s2 = D[x, z] + D[y, w]
                    s3 = D[x, w] + D[y, z]
                    if s1 >= s2:
                        if s2 >= s3:
                            hi, md = s1, s2
                        elif s1 >= s3:
                            hi, md = s1, s3
                        else:
                            hi, md = s3, s1
                    else:
                        if s1 >= s3:
                            hi, md = s2, s1
                        elif s2 >= s3:
                            hi, md = s2, s3
                        else:
                            hi, md = s3, s2
                    if hi - md > best:
                        best = hi - md
    return best / 2.0


def interval_distance_table(const int[:, :] D):
    cdef int n = D.shape[0]
    cdef cnp.ndarray[cnp.int16_t, ndim=3] T = np.zeros((n, n, n), dtype=np.int16)
    cdef short[:, :, :] Tv = T
    cdef int *members = <int *> malloc(n * sizeof(int))
    cdef int x, y, v, m, cnt, best, d
    try:
        for x in range(n):
            for y in range(x, n):
                cnt = 0
                for v in range(n):
                    if D[x, v] + D[v, y] == D[x, y]:
                        members[cnt] = v
                        cnt += 1
                for v in range(n):
                    best = D[v, members[0]]
                    for m in range(1, cnt):
                        d = D[v, members[m]]
                        if d < best:
                            best = d
                    Tv[x, y, v] = best
                    Tv[y, x, v] = best
    finally:
        free(members)
    return T


def delta_interval_slim(const int[:, :] D, const short[:, :, :] T):
    cdef int n = D.shape[0]
    cdef int x, y, z, v, a, b, val, best = 0
    for x in range(n):
        for y in range(x + 1, n):
            for v in range(n):
                if D[x, v] + D[v, y] != D[x, y]:
                    continue
                for z in range(n):
                    a = T[x, z, v]
                    b = T[y, z, v]
                    val = a if a < b else b
                    if val > best:
                        best = val
    return float(best)


cdef inline void _ext_gcd(long long a, long long b, long long *xo, long long *yo) nogil:
    cdef long long old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1, k, tmp
    while r != 0:
        k = _floordiv(old_r, r)
        tmp = old_r - k * r
        old_r = r
        r = tmp
        tmp = old_s - k * s
        old_s = s
        s = tmp
        tmp = old_t - k * t
        old_t = t
        t = tmp
    if old_r < 0:
        old_s = -old_s
        old_t = -old_t
    xo[0] = old_s
    yo[0] = old_t


cdef inline void _k_range(long long c, long long e, long long n, long long *lo, long long *hi) nogil:
    if e > 0:
        lo[0] = -_floordiv(c + n, e)
        hi[0] = _floordiv(n - c, e)
    elif e < 0:
        lo[0] = -_floordiv(n - c, -e)
        hi[0] = _floordiv(c + n, -e)
    else:
        if c > n or c < -n:
            lo[0] = 1
            hi[0] = 0
        else:
            lo[0] = -4 * n - 4
            hi[0] = 4 * n + 4


def farey_box_bfs(long long p0, long long q0, long long n):
    cdef long long width = n + 1
    cdef long long size = (2 * n + 1) * width
    cdef cnp.ndarray[cnp.int32_t, ndim=1] dist = np.full(size, -1, dtype=np.int32)
    cdef int[:] dv = dist
    cdef long long *queue = <long long *> malloc(size * sizeof(long long))
    cdef long long head = 0, tail = 0, u, p, q, x, y, r0, s0
    cdef long long lo1, hi1, lo2, hi2, lo, hi, k, np_, nq, idx
    try:
        idx = (p0 + n) * width + q0
        dv[idx] = 0
        queue[tail] = idx
        tail += 1
        while head < tail:
            u = queue[head]
            head += 1
            p = u / width - n
            q = u % width
            _ext_gcd(p, q, &x, &y)
            r0 = -y
            s0 = x
            _k_range(r0, p, n, &lo1, &hi1)
            _k_range(s0, q, n, &lo2, &hi2)
            lo = lo1 if lo1 > lo2 else lo2
            hi = hi1 if hi1 < hi2 else hi2
            k = lo
            while k <= hi:
                np_ = r0 + k * p
                nq = s0 + k * q
                if nq < 0 or (nq == 0 and np_ < 0):
                    np_ = -np_
                    nq = -nq
                idx = (np_ + n) * width + nq
                if dv[idx] < 0:
                    dv[idx] = dv[u] + 1
                    queue[tail] = idx
                    tail += 1
                k += 1
    finally:
        free(queue)
    return dist

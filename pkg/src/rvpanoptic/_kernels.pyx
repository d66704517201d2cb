# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled single-pass versions of the hot per-pixel kernels.

Semantics (accumulation order, tie breaking) match ``_kernels_py`` exactly;
the two backends must return bit-identical arrays.
"""

import numpy as np

from libc.math cimport exp, fabs, INFINITY

COMPILED = True


def directional_fill_core(double[:, ::1] depth, unsigned char[:, ::1] occ,
                          double[::1] weights, int axis, bint wrap):
    cdef Py_ssize_t h = depth.shape[0]
    cdef Py_ssize_t w = depth.shape[1]
    cdef Py_ssize_t k = weights.shape[0]
    cdef Py_ssize_t half = k // 2
    fill = np.zeros((h, w), dtype=np.float64)
    valid = np.zeros((h, w), dtype=np.uint8)
    cdef double[:, ::1] fill_v = fill
    cdef unsigned char[:, ::1] valid_v = valid
    cdef Py_ssize_t i, j, idx, jj, ii
    cdef double num, den, wv

    if axis == 1:
        for i in range(h):
            for j in range(w):
                num = 0.0
                den = 0.0
                for idx in range(k):
                    jj = j + idx - half
                    if wrap:
                        jj %= w
                        if jj < 0:
                            jj += w
                    elif jj < 0 or jj >= w:
                        continue
                    if occ[i, jj]:
                        wv = weights[idx]
                        num += wv * depth[i, jj]
                        den += wv
                if den > 0.0:
                    fill_v[i, j] = num / den
                    valid_v[i, j] = 1
    else:
        for i in range(h):
            for j in range(w):
                num = 0.0
                den = 0.0
                for idx in range(k):
                    ii = i + idx - half
                    if ii < 0 or ii >= h:
                        continue
                    if occ[ii, j]:
                        wv = weights[idx]
                        num += wv * depth[ii, j]
                        den += wv
                if den > 0.0:
                    fill_v[i, j] = num / den
                    valid_v[i, j] = 1
    return fill, valid


def scatter_nearest_core(long long[::1] rows, long long[::1] cols,
                         double[::1] depth, int height, int width):
    cdef Py_ssize_t n = rows.shape[0]
    pixel_to_point = np.full((height, width), -1, dtype=np.int64)
    cdef long long[:, ::1] p2p = pixel_to_point
    cdef Py_ssize_t idx
    cdef long long cur
    for idx in range(n):
        cur = p2p[rows[idx], cols[idx]]
        # smallest depth wins; ascending idx keeps the earlier point on ties
        if cur < 0 or depth[idx] < depth[cur]:
            p2p[rows[idx], cols[idx]] = idx
    return pixel_to_point


def knn_vote_core(long long[::1] prow, long long[::1] pcol, double[::1] prange,
                  double[:, ::1] pix_range, unsigned char[:, ::1] occ,
                  int[:, ::1] pix_class, int num_classes,
                  int k, int window, double cutoff, double sigma):
    cdef Py_ssize_t n = prow.shape[0]
    cdef Py_ssize_t h = pix_range.shape[0]
    cdef Py_ssize_t w = pix_range.shape[1]
    cdef int half = window // 2
    refined = np.empty(n, dtype=np.int32)
    cdef int[::1] out = refined

    cand_d = np.empty(k, dtype=np.float64)
    cand_c = np.empty(k, dtype=np.int32)
    cand_w = np.empty(k, dtype=np.float64)
    votes = np.zeros(num_classes, dtype=np.float64)
    cdef double[::1] cd = cand_d
    cdef int[::1] cc = cand_c
    cdef double[::1] cw = cand_w
    cdef double[::1] vt = votes

    cdef Py_ssize_t p, s, t, count
    cdef int di, dj, best_c
    cdef Py_ssize_t ii, jj
    cdef double d, spatial, best_w
    cdef double inv2s2 = 1.0 / (2.0 * sigma * sigma)

    for p in range(n):
        count = 0
        for di in range(-half, half + 1):
            ii = prow[p] + di
            if ii < 0 or ii >= h:
                continue
            for dj in range(-half, half + 1):
                jj = pcol[p] + dj
                if jj < 0 or jj >= w:
                    continue
                if not occ[ii, jj]:
                    continue
                d = fabs(prange[p] - pix_range[ii, jj])
                if count == k and d >= cd[k - 1]:
                    continue
                # stable insertion: equal distances keep window scan order
                s = count if count < k else k - 1
                while s > 0 and cd[s - 1] > d:
                    cd[s] = cd[s - 1]
                    cc[s] = cc[s - 1]
                    cw[s] = cw[s - 1]
                    s -= 1
                cd[s] = d
                cc[s] = pix_class[ii, jj]
                cw[s] = exp(-(<double> (di * di + dj * dj)) * inv2s2)
                if count < k:
                    count += 1
        best_c = -1
        best_w = 0.0
        for s in range(count):
            if cd[s] <= cutoff:
                vt[cc[s]] += cw[s]
        for t in range(num_classes):
            if vt[t] > best_w:
                best_w = vt[t]
                best_c = t
        for s in range(count):
            vt[cc[s]] = 0.0
        if best_c < 0:
            out[p] = pix_class[prow[p], pcol[p]]
        else:
            out[p] = best_c
    return refined


def connected_components_core(unsigned char[:, ::1] adj):
    cdef Py_ssize_t m = adj.shape[0]
    parent_arr = np.arange(m, dtype=np.int64)
    cdef long long[::1] parent = parent_arr
    cdef Py_ssize_t i, j
    cdef long long ri, rj

    for i in range(m):
        for j in range(i + 1, m):
            if not adj[i, j]:
                continue
            ri = i
            while parent[ri] != ri:
                parent[ri] = parent[parent[ri]]
                ri = parent[ri]
            rj = j
            while parent[rj] != rj:
                parent[rj] = parent[parent[rj]]
                rj = parent[rj]
            if ri < rj:
                parent[rj] = ri
            elif rj < ri:
                parent[ri] = rj
    for i in range(m):
        ri = i
        while parent[ri] != ri:
            ri = parent[ri]
        parent[i] = ri
    return parent_arr

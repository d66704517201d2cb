"""Vectorized NumPy implementations of the hot per-pixel kernels.

These mirror the compiled extension in ``_kernels.pyx`` bit for bit:
accumulation order, tie breaking and float arithmetic are arranged so both
backends return identical arrays. Keep the two files in sync.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def _shifted(arr: np.ndarray, off: int, axis: int, wrap: bool) -> np.ndarray:
    """Return S with S[i, j] = arr at index offset ``off`` along ``axis``.

    Out-of-bounds entries are zero unless ``wrap`` is set (azimuth axis only).
    """
    if off == 0:
        return arr
    if wrap and axis == 1:
        return np.roll(arr, -off, axis=1)
    out = np.zeros_like(arr)
    if axis == 1:
        if off > 0:
            out[:, :-off] = arr[:, off:]
        else:
            out[:, -off:] = arr[:, :off]
    else:
        if off > 0:
            out[:-off, :] = arr[off:, :]
        else:
            out[-off:, :] = arr[:off, :]
    return out


def directional_fill_core(depth, occ, weights, axis, wrap):
    """Weighted occupancy-gated mean over a 1D window along ``axis``.

    Returns (fill, valid) where valid marks pixels whose window contained at
    least one occupied neighbor. Accumulates window offsets in ascending
    order to stay bit-identical with the compiled loop.
    """
    k = weights.shape[0]
    half = k // 2
    occf = occ.astype(np.float64)
    masked = depth * occf
    num = np.zeros_like(masked)
    den = np.zeros_like(masked)
    for idx in range(k):
        off = idx - half
        num += weights[idx] * _shifted(masked, off, axis, wrap)
        den += weights[idx] * _shifted(occf, off, axis, wrap)
    valid = den > 0.0
    fill = np.zeros_like(num)
    np.divide(num, den, out=fill, where=valid)
    return fill, valid.astype(np.uint8)


def scatter_nearest_core(rows, cols, depth, height, width):
    """Per-pixel winner index: smallest depth, ties to the smallest index."""
    n = rows.shape[0]
    order = np.lexsort((np.arange(n), depth))[::-1]
    pixel_to_point = np.full((height, width), -1, dtype=np.int64)
    pixel_to_point[rows[order], cols[order]] = order
    return pixel_to_point


def knn_vote_core(prow, pcol, prange, pix_range, occ, pix_class,
                  num_classes, k, window, cutoff, sigma):
    """Range-gated KNN class vote in a window around each point's pixel.

    Candidates are the occupied pixels of the window ranked by absolute
    range difference (stable order on ties). The k nearest survive if their
    difference is within ``cutoff``; votes are weighted by a Gaussian of the
    pixel offset. No survivors falls back to the point's own pixel class.
    """
    n = prow.shape[0]
    h, w = pix_range.shape
    half = window // 2
    di = np.repeat(np.arange(-half, half + 1), window)
    dj = np.tile(np.arange(-half, half + 1), window)
    spatial = np.exp(-(di.astype(np.float64) ** 2 + dj.astype(np.float64) ** 2)
                     / (2.0 * sigma * sigma))

    rows = prow[:, None] + di[None, :]
    cols = pcol[:, None] + dj[None, :]
    inb = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    rc = np.clip(rows, 0, h - 1)
    cc = np.clip(cols, 0, w - 1)
    usable = occ[rc, cc].astype(bool) & inb

    dist = np.abs(prange[:, None] - pix_range[rc, cc])
    dist[~usable] = np.inf

    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    rsel = np.arange(n)[:, None]
    dsel = dist[rsel, order]
    csel = pix_class[rc, cc][rsel, order]
    wsel = np.broadcast_to(spatial[None, :], dist.shape)[rsel, order]
    alive = np.isfinite(dsel) & (dsel <= cutoff)

    votes = np.zeros(n * num_classes, dtype=np.float64)
    flat = (rsel * num_classes + csel)[alive]
    np.add.at(votes, flat, wsel[alive])
    votes = votes.reshape(n, num_classes)

    refined = np.argmax(votes, axis=1).astype(np.int32)
    none_alive = ~alive.any(axis=1)
    if none_alive.any():
        refined[none_alive] = pix_class[prow[none_alive], pcol[none_alive]]
    return refined


def connected_components_core(adj):
    """Component root per node of a symmetric adjacency matrix.

    Vectorized hooking variant of union-find: every edge repeatedly hooks
    the larger root onto the smaller one, with pointer jumping in between.
    The returned root of each node is the smallest index in its component.
    """
    m = adj.shape[0]
    parent = np.arange(m, dtype=np.int64)
    ei, ej = np.nonzero(np.triu(adj, 1))
    if ei.size == 0:
        return parent
    while True:
        pi = parent[ei]
        pj = parent[ej]
        hi = np.maximum(pi, pj)
        lo = np.minimum(pi, pj)
        diff = hi != lo
        if not diff.any():
            break
        np.minimum.at(parent, hi[diff], lo[diff])
        while True:
            hopped = parent[parent]
            if np.array_equal(hopped, parent):
                break
            parent = hopped
    return parent

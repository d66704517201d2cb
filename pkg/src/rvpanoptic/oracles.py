"""Independent brute-force references used to validate the fast paths.

Everything here trades speed for obviousness: BFS clustering over the full
pairwise-distance graph, transitive closure by boolean matrix powering, and
PCA plane fitting over 3D nearest neighbors. Test-scale only.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParams, OracleScaleError
from .projection import PointCloud

REACHABILITY_LIMIT = 256


def bfs_cluster_oracle(points: np.ndarray, radius: float) -> np.ndarray:
    """Connected components of the distance-threshold graph via BFS.

    Points are linked when their pairwise distance is at most ``radius``.
    O(N^2); labels are 1..K in order of the smallest member index.
    """
    if radius <= 0:
        raise InvalidParams("radius must be positive")
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    labels = np.zeros(n, dtype=np.int32)
    if n == 0:
        return labels
    delta = pts[:, None, :] - pts[None, :, :]
    linked = np.sqrt(np.sum(delta * delta, axis=2)) <= radius
    current = 0
    for seed in range(n):
        if labels[seed]:
            continue
        current += 1
        queue = [seed]
        labels[seed] = current
        while queue:
            node = queue.pop(0)
            for neighbor in np.nonzero(linked[node])[0]:
                if not labels[neighbor]:
                    labels[neighbor] = current
                    queue.append(neighbor)
    return labels


def reachability_oracle(adjacency: np.ndarray) -> np.ndarray:
    """Component labels from the transitive closure of the adjacency matrix.

    The closure is computed by repeated boolean matrix multiplication.
    Labels are 1..K in order of the smallest member index, matching the
    production labeling convention.

    Raises:
        OracleScaleError: matrix larger than the test-scale limit.
    """
    adj = np.asarray(adjacency, dtype=bool)
    m = adj.shape[0]
    if m > REACHABILITY_LIMIT:
        raise OracleScaleError(f"oracle limited to M <= {REACHABILITY_LIMIT}, got {m}")
    if m == 0:
        return np.empty(0, dtype=np.int32)
    reach = adj | np.eye(m, dtype=bool)
    while True:
        expanded = reach | (reach @ reach)
        if np.array_equal(expanded, reach):
            break
        reach = expanded
    # equivalence classes keyed by the smallest reachable index
    smallest = np.argmax(reach, axis=1)  # first True per row
    _, labels = np.unique(smallest, return_inverse=True)
    return (labels + 1).astype(np.int32)


def normals_oracle(cloud: PointCloud, knn: int = 12,
                   query: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """PCA plane-fit normals over 3D k-nearest neighborhoods.

    The normal is the eigenvector of the neighborhood covariance with the
    smallest eigenvalue, oriented toward the sensor. Neighborhoods whose
    second eigenvalue is degenerate (collinear points) are flagged invalid.
    Distances are computed brute force in chunks; ``query`` restricts the
    evaluation to a subset of point indices.

    Returns:
        (normals, valid) for the queried points.
    """
    if knn < 3:
        raise InvalidParams("knn must be at least 3")
    pts = cloud.xyz
    n = pts.shape[0]
    if query is None:
        query = np.arange(n)
    query = np.asarray(query, dtype=np.int64)
    normals = np.zeros((query.size, 3))
    valid = np.zeros(query.size, dtype=bool)

    chunk = max(1, int(5e6) // max(n, 1))
    for start in range(0, query.size, chunk):
        q = query[start:start + chunk]
        d2 = np.sum((pts[q][:, None, :] - pts[None, :, :]) ** 2, axis=2)
        neighbors = np.argpartition(d2, min(knn, n - 1), axis=1)[:, :knn]
        for row, qi in enumerate(q):
            nb = pts[neighbors[row]]
            centered = nb - nb.mean(axis=0)
            cov = centered.T @ centered
            eigvals, eigvecs = np.linalg.eigh(cov)
            if eigvals[1] <= 1e-10 * max(eigvals[2], 1e-30):
                continue
            normal = eigvecs[:, 0]
            if np.dot(normal, pts[qi]) > 0:
                normal = -normal
            normals[start + row] = normal
            valid[start + row] = True
    return normals, valid


def rand_index(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """Partition Rand index: fraction of point pairs on which two labelings
    agree (together in both, or separated in both)."""
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape != b.shape:
        raise InvalidParams("labelings must have equal length")
    n = a.size
    if n < 2:
        return 1.0
    _, a_ids = np.unique(a, return_inverse=True)
    _, b_ids = np.unique(b, return_inverse=True)
    joint = a_ids * (b_ids.max() + 1) + b_ids
    nij = np.bincount(joint).astype(np.float64)
    ai = np.bincount(a_ids).astype(np.float64)
    bj = np.bincount(b_ids).astype(np.float64)
    sum_nij = np.sum(nij * (nij - 1)) / 2.0
    sum_ai = np.sum(ai * (ai - 1)) / 2.0
    sum_bj = np.sum(bj * (bj - 1)) / 2.0
    total = n * (n - 1) / 2.0
    return float((total + 2.0 * sum_nij - sum_ai - sum_bj) / total)

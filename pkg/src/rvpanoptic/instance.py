"""Cluster-free instance segmentation over 2D instance embeddings.

Foreground pixels carry a predicted BEV location of their object's
centroid. Points are grouped into grid pillars over that embedding space,
pillars are compared pairwise with a distance kernel, the thresholded
connectivity matrix is treated as a graph adjacency, and its connected
components become the instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import InvalidParams, ShapeError


@dataclass(frozen=True)
class EmbeddingMap:
    """Per-pixel 2D embedding plus the foreground mask that selects it."""

    embedding: np.ndarray  # (H, W, 2) meters, BEV xy
    mask: np.ndarray       # (H, W) bool, True on foreground pixels

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=np.float64)
        msk = np.asarray(self.mask, dtype=bool)
        if emb.ndim != 3 or emb.shape[2] != 2:
            raise ShapeError(f"embedding must be (H, W, 2), got {emb.shape}")
        if msk.shape != emb.shape[:2]:
            raise ShapeError("mask shape does not match embedding")
        object.__setattr__(self, "embedding", emb)
        object.__setattr__(self, "mask", msk)

    @classmethod
    def from_offsets(cls, bev_xy: np.ndarray, offsets: np.ndarray,
                     mask: np.ndarray) -> "EmbeddingMap":
        """Compose embedding = pixel BEV coordinates + predicted offsets."""
        return cls(np.asarray(bev_xy, dtype=np.float64) + np.asarray(offsets), mask)

    def offsets(self, bev_xy: np.ndarray) -> np.ndarray:
        return self.embedding - np.asarray(bev_xy, dtype=np.float64)

    @property
    def foreground_pixels(self) -> np.ndarray:
        """(N_fg, 2) row/col of foreground pixels, row-major order."""
        return np.argwhere(self.mask)

    @property
    def foreground_embeddings(self) -> np.ndarray:
        return self.embedding[self.mask]


@dataclass(frozen=True)
class InstanceParams:
    """Pillar grid size, connectivity threshold and kernel decay.

    ``alpha`` may be pinned to a constant; left as None it is derived from
    the threshold and grid size so that pillars within two grid cells stay
    connected.
    """

    grid_size: float = 0.15
    threshold: float = 0.5
    alpha: float | None = None

    def __post_init__(self):
        if self.grid_size <= 0:
            raise InvalidParams(f"grid_size must be positive, got {self.grid_size}")
        if not 0.0 < self.threshold < 1.0:
            raise InvalidParams(f"threshold must be in (0, 1), got {self.threshold}")
        if self.alpha is not None and self.alpha <= 0:
            raise InvalidParams(f"fixed alpha must be positive, got {self.alpha}")

    def resolve_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return derive_alpha(self.threshold, self.grid_size)


@dataclass(frozen=True)
class PillarSet:
    """Nonempty embedding-grid cells with their member foreground points."""

    means: np.ndarray         # (M, 2) average embedding per pillar
    point_pillar: np.ndarray  # (N_fg,) pillar index of each foreground point

    @property
    def count(self) -> int:
        return self.means.shape[0]

    def memberships(self) -> list[np.ndarray]:
        order = np.argsort(self.point_pillar, kind="stable")
        bounds = np.searchsorted(self.point_pillar[order], np.arange(self.count + 1))
        return [order[bounds[i]:bounds[i + 1]] for i in range(self.count)]


@dataclass(frozen=True)
class PillarGraph:
    """Pillars plus the pairwise connectivity products of one segmentation."""

    pillars: PillarSet
    pairwise: np.ndarray   # (M, M) connectivity probabilities
    adjacency: np.ndarray  # (M, M) bool
    labels: np.ndarray     # (M,) component id per pillar, 1..K

    @property
    def count(self) -> int:
        return self.pillars.count


def foreground_mask(semantic: np.ndarray, thing_classes) -> np.ndarray:
    """Binary mask of pixels whose class belongs to the thing set."""
    semantic = np.asarray(semantic)
    return np.isin(semantic, np.fromiter(thing_classes, dtype=semantic.dtype,
                                         count=-1)).reshape(semantic.shape)


def pillarize(fg_embeddings: np.ndarray, grid_size: float) -> PillarSet:
    """Group points into grid cells over their embedding coordinates.

    Cell ids are floor(e / grid_size) per axis; the pillar embedding is the
    arithmetic mean of its members. An empty input yields zero pillars.
    """
    if grid_size <= 0:
        raise InvalidParams(f"grid_size must be positive, got {grid_size}")
    fg = np.asarray(fg_embeddings, dtype=np.float64).reshape(-1, 2)
    if fg.shape[0] == 0:
        return PillarSet(means=np.empty((0, 2)), point_pillar=np.empty(0, dtype=np.int64))
    cells = np.floor(fg / grid_size).astype(np.int64)
    _, inverse, counts = np.unique(cells, axis=0, return_inverse=True,
                                   return_counts=True)
    sums = np.zeros((counts.shape[0], 2))
    np.add.at(sums, inverse, fg)
    return PillarSet(means=sums / counts[:, None], point_pillar=inverse.astype(np.int64))


def pairwise_matrix(means: np.ndarray, alpha: float) -> np.ndarray:
    """Connectivity probabilities exp(-alpha * ||m_i - m_j||).

    Unit diagonal, symmetric, entries in (0, 1].
    """
    if alpha <= 0:
        raise InvalidParams(f"alpha must be positive, got {alpha}")
    means = np.asarray(means, dtype=np.float64)
    delta = means[:, None, :] - means[None, :, :]
    dist = np.sqrt(np.sum(delta * delta, axis=2))
    pairwise = np.exp(-alpha * dist)
    np.fill_diagonal(pairwise, 1.0)
    return pairwise


def derive_alpha(threshold: float, grid_size: float) -> float:
    """Kernel decay -ln(T) / (2 d): pillars within two cells stay connected.

    Raises:
        InvalidParams: threshold outside (0, 1) or non-positive grid size.
    """
    if not 0.0 < threshold < 1.0:
        raise InvalidParams(f"threshold must be in (0, 1), got {threshold}")
    if grid_size <= 0:
        raise InvalidParams(f"grid_size must be positive, got {grid_size}")
    return -np.log(threshold) / (2.0 * grid_size)


def threshold_adjacency(pairwise: np.ndarray, threshold: float) -> np.ndarray:
    """Binary adjacency (pairwise > T), strict, with a forced true diagonal."""
    adjacency = np.asarray(pairwise) > threshold
    np.fill_diagonal(adjacency, True)
    return adjacency


def connected_components(adjacency: np.ndarray) -> np.ndarray:
    """Label pillars 1..K by graph reachability.

    Components are numbered in order of their smallest member pillar index,
    which makes the labeling deterministic across backends.
    """
    adjacency = np.ascontiguousarray(np.asarray(adjacency), dtype=np.uint8)
    m = adjacency.shape[0]
    if m == 0:
        return np.empty(0, dtype=np.int32)
    roots = backend.kernels().connected_components_core(adjacency)
    # roots are component minima; rank them to get 1..K in first-member order
    uniq, inverse = np.unique(roots, return_inverse=True)
    return (inverse + 1).astype(np.int32)


def assign_instance_ids(labels: np.ndarray, pillars: PillarSet,
                        mask: np.ndarray) -> np.ndarray:
    """Spread pillar component labels back to pixels; background stays 0."""
    ids = np.zeros(mask.shape, dtype=np.int32)
    if pillars.count:
        ids[mask] = labels[pillars.point_pillar]
    return ids


def segment_instances(emap: EmbeddingMap,
                      params: InstanceParams) -> tuple[np.ndarray, PillarGraph]:
    """Full cluster-free pass: pillarize, compare, threshold, label, map back.

    Returns the per-pixel instance id map (0 = background) and the
    intermediate PillarGraph for diagnostics.
    """
    pillars = pillarize(emap.foreground_embeddings, params.grid_size)
    if pillars.count == 0:
        graph = PillarGraph(pillars=pillars,
                            pairwise=np.empty((0, 0)),
                            adjacency=np.empty((0, 0), dtype=bool),
                            labels=np.empty(0, dtype=np.int32))
        return np.zeros(emap.mask.shape, dtype=np.int32), graph
    pairwise = pairwise_matrix(pillars.means, params.resolve_alpha())
    adjacency = threshold_adjacency(pairwise, params.threshold)
    labels = connected_components(adjacency)
    ids = assign_instance_ids(labels, pillars, emap.mask)
    return ids, PillarGraph(pillars=pillars, pairwise=pairwise,
                            adjacency=adjacency, labels=labels)

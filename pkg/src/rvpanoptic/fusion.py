"""Back-projection post-processing: KNN label refinement and semantic /
instance reconciliation into final per-point panoptic labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import InvalidParams, ShapeError
from .projection import PointCloud, RangeImage


@dataclass(frozen=True)
class KnnParams:
    """Range-gated KNN vote settings (published post-processing defaults)."""

    k: int = 5
    window: int = 5
    range_cutoff: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.window % 2 == 0 or self.window < 1:
            raise InvalidParams(f"window must be odd, got {self.window}")
        if not 1 <= self.k <= self.window ** 2:
            raise InvalidParams(f"k must be in [1, window^2], got {self.k}")
        if self.range_cutoff <= 0 or self.sigma <= 0:
            raise InvalidParams("range_cutoff and sigma must be positive")


@dataclass(frozen=True)
class PanopticLabeling:
    """Per-point semantic class and instance id (0 = stuff / no instance)."""

    semantic: np.ndarray
    instance: np.ndarray
    thing_classes: frozenset[int]

    def __post_init__(self):
        sem = np.ascontiguousarray(np.asarray(self.semantic, dtype=np.int32))
        ins = np.ascontiguousarray(np.asarray(self.instance, dtype=np.int32))
        if sem.shape != ins.shape or sem.ndim != 1:
            raise ShapeError("semantic and instance must be equal-length 1-D arrays")
        object.__setattr__(self, "semantic", sem)
        object.__setattr__(self, "instance", ins)
        object.__setattr__(self, "thing_classes", frozenset(int(c) for c in self.thing_classes))

    def __len__(self) -> int:
        return self.semantic.shape[0]

    def validate(self) -> None:
        """Check the panoptic invariants, raising LabelError on violation."""
        from .errors import LabelError

        with_id = self.instance > 0
        things = np.isin(self.semantic, sorted(self.thing_classes))
        if np.any(with_id & ~things):
            raise LabelError("instance id set on a non-thing point")
        for iid in np.unique(self.instance[with_id]):
            classes = np.unique(self.semantic[self.instance == iid])
            if classes.size > 1:
                raise LabelError(f"instance {iid} spans classes {classes.tolist()}")


def knn_refine(cloud: PointCloud, ri: RangeImage, pixel_semantics: np.ndarray,
               params: KnnParams | None = None) -> np.ndarray:
    """Refine re-projected per-point classes with a range-gated window vote.

    For every point, the occupied pixels in the window around its pixel are
    ranked by |point range - pixel range|; the k closest survive if within
    range_cutoff and vote with Gaussian pixel-distance weights (ties go to
    the smaller class id). A point with no survivors keeps its own pixel's
    class. The result never contains a class absent from the inspected
    neighborhood.
    """
    params = params or KnnParams()
    pixel_semantics = np.ascontiguousarray(pixel_semantics, dtype=np.int32)
    if pixel_semantics.shape != ri.shape:
        raise ShapeError(f"semantic map {pixel_semantics.shape} does not match "
                         f"image {ri.shape}")
    num_classes = int(pixel_semantics.max()) + 1 if pixel_semantics.size else 1
    rows = np.ascontiguousarray(ri.point_to_pixel[:, 0])
    cols = np.ascontiguousarray(ri.point_to_pixel[:, 1])
    return backend.kernels().knn_vote_core(
        rows, cols, np.ascontiguousarray(cloud.depth),
        np.ascontiguousarray(ri.depth, dtype=np.float64),
        np.ascontiguousarray(ri.occupancy, dtype=np.uint8),
        pixel_semantics, num_classes,
        params.k, params.window, params.range_cutoff, params.sigma)


def _modal_class_per_instance(instance: np.ndarray,
                              semantic: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(instance ids, modal class per id); ties resolve to the smallest class."""
    with_id = instance > 0
    pairs = np.stack([instance[with_id], semantic[with_id]], axis=1)
    uniq, counts = np.unique(pairs, axis=0, return_counts=True)
    # sort by (instance asc, count desc, class asc) and keep the first row
    order = np.lexsort((uniq[:, 1], -counts, uniq[:, 0]))
    uniq = uniq[order]
    first = np.ones(uniq.shape[0], dtype=bool)
    first[1:] = uniq[1:, 0] != uniq[:-1, 0]
    return uniq[first, 0], uniq[first, 1]


def majority_vote(labeling: PanopticLabeling) -> PanopticLabeling:
    """Force one semantic class per instance: the modal class of its members."""
    if not np.any(labeling.instance > 0):
        return labeling
    ids, modal = _modal_class_per_instance(labeling.instance, labeling.semantic)
    lookup = np.zeros(int(ids.max()) + 1, dtype=np.int32)
    lookup[ids] = modal
    semantic = labeling.semantic.copy()
    voted = labeling.instance > 0
    semantic[voted] = lookup[labeling.instance[voted]]
    return PanopticLabeling(semantic=semantic, instance=labeling.instance,
                            thing_classes=labeling.thing_classes)


def fuse(semantic: np.ndarray, instance: np.ndarray,
         thing_classes) -> PanopticLabeling:
    """Combine per-point semantics and instance ids into a valid labeling.

    Instance ids on non-thing points are cleared, then majority voting
    unifies the class within each surviving instance.

    Raises:
        ShapeError: inputs differ in length.
    """
    semantic = np.asarray(semantic, dtype=np.int32)
    instance = np.asarray(instance, dtype=np.int32)
    if semantic.shape != instance.shape:
        raise ShapeError("semantic and instance lengths differ")
    things = frozenset(int(c) for c in thing_classes)
    keep = np.isin(semantic, sorted(things))
    cleaned = np.where(keep, instance, 0).astype(np.int32)
    return majority_vote(PanopticLabeling(semantic=semantic, instance=cleaned,
                                          thing_classes=things))

"""End-to-end orchestration: scan in, per-point panoptic labels out.

Stages run in a fixed order (project, optional depth completion + normals,
foreground masking, cluster-free instance segmentation, re-projection,
optional KNN refinement, fusion) with per-stage wall-clock timings in
microseconds. The whole run is a pure function of config and inputs.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kitti_io
from .config import PipelineConfig
from .depth import DepthMaps, NormalMap, build_depth_maps, compute_normals
from .errors import IoError, PipelineError, ShapeError
from .fusion import PanopticLabeling, fuse, knn_refine
from .instance import EmbeddingMap, PillarGraph, foreground_mask, segment_instances
from .projection import PointCloud, RangeImage, project_to_range_view, reproject_labels


@dataclass
class PipelineInputs:
    """Sources for one frame; file paths or in-memory arrays.

    When ``semantic_map`` is None the per-pixel classes come from the
    projected ground-truth labels; when ``embedding_map`` is None the ideal
    embedding (each instance's BEV point centroid) is built from them.
    """

    scan: object
    labels: object | None = None
    semantic_map: object | None = None
    embedding_map: object | None = None


@dataclass
class PipelineResult:
    labeling: PanopticLabeling
    timings_us: dict[str, int]
    range_image: RangeImage
    semantic_map: np.ndarray
    instance_map: np.ndarray
    graph: PillarGraph
    depth_maps: DepthMaps | None = None
    normals: NormalMap | None = None

    @property
    def total_us(self) -> int:
        return sum(self.timings_us.values())


class _Stopwatch:
    def __init__(self):
        self.timings_us: dict[str, int] = {}

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter_ns()
        try:
            yield
        except PipelineError as exc:
            raise type(exc)(f"[stage {name}] {exc}") from exc
        finally:
            self.timings_us[name] = (time.perf_counter_ns() - start) // 1000


def _load_cloud(source, labels) -> PointCloud:
    if isinstance(source, PointCloud):
        cloud = source
    else:
        cloud = kitti_io.read_scan_bin(source)
    if labels is None:
        return cloud
    if isinstance(labels, (str, Path)):
        semantic, instance = kitti_io.read_labels(labels, expected_count=len(cloud))
    else:
        semantic, instance = labels
    return PointCloud(xyz=cloud.xyz, remission=cloud.remission,
                      semantic=semantic, instance=instance)


def _load_map(source, reader, shape, channels) -> np.ndarray:
    if isinstance(source, (str, Path)):
        data = reader(source)
    else:
        data = np.asarray(source)
        if data.ndim == 2:
            data = data[..., None]
    if data.shape[0] != shape[0] or data.shape[1] != shape[1] or data.shape[2] != channels:
        raise ShapeError(f"map shape {data.shape} does not match "
                         f"expected {shape + (channels,)}")
    return data[..., 0] if channels == 1 else data


def _semantic_from_gt(cloud: PointCloud, ri: RangeImage, ignore_class: int) -> np.ndarray:
    if cloud.semantic is None:
        raise IoError("no semantic source: provide a map file or GT labels")
    winner = np.where(ri.occupancy, ri.pixel_to_point, 0)
    sem = np.where(ri.occupancy, cloud.semantic[winner], ignore_class)
    return sem.astype(np.int32)


def _ideal_embedding(cloud: PointCloud, ri: RangeImage) -> np.ndarray:
    """Instance BEV point centroids spread over each instance's pixels."""
    if cloud.instance is None:
        raise IoError("no embedding source: provide a map file or GT labels")
    embedding = ri.xyz[..., :2].copy()
    winner = np.where(ri.occupancy, ri.pixel_to_point, 0)
    pixel_instance = np.where(ri.occupancy, cloud.instance[winner], 0)
    for iid in np.unique(cloud.instance):
        if iid <= 0:
            continue
        centroid = cloud.xyz[cloud.instance == iid, :2].mean(axis=0)
        embedding[pixel_instance == iid] = centroid
    return embedding


def run_pipeline(cfg: PipelineConfig, inputs: PipelineInputs) -> PipelineResult:
    """Run every enabled stage on one frame.

    Errors are re-raised with the failing stage prefixed to the message.
    """
    watch = _Stopwatch()

    with watch.stage("load"):
        cloud = _load_cloud(inputs.scan, inputs.labels)

    with watch.stage("project"):
        ri = project_to_range_view(cloud, cfg.projection)

    depth_maps = None
    normals = None
    if cfg.run_depth_normals:
        with watch.stage("depth_normals"):
            depth_maps = build_depth_maps(cloud, ri, cfg.completion)
            normals = compute_normals(depth_maps.completed, cfg.projection)

    with watch.stage("semantics"):
        if inputs.semantic_map is not None:
            sem_map = _load_map(inputs.semantic_map, kitti_io.read_map_u16,
                                ri.shape, 1).astype(np.int32)
        else:
            sem_map = _semantic_from_gt(cloud, ri, cfg.ignore_class)

    with watch.stage("foreground"):
        # only real points can form instances
        mask = foreground_mask(sem_map, cfg.thing_classes) & ri.occupancy

    with watch.stage("embedding"):
        if inputs.embedding_map is not None:
            emb = _load_map(inputs.embedding_map, kitti_io.read_map_f32, ri.shape, 2)
        else:
            emb = _ideal_embedding(cloud, ri)
        emap = EmbeddingMap(embedding=emb, mask=mask)

    with watch.stage("instances"):
        instance_map, graph = segment_instances(emap, cfg.instance)

    with watch.stage("reproject"):
        point_semantic = reproject_labels(ri, sem_map)
        point_instance = reproject_labels(ri, instance_map)

    if cfg.run_knn:
        with watch.stage("knn"):
            point_semantic = knn_refine(cloud, ri, sem_map, cfg.knn)

    with watch.stage("fuse"):
        labeling = fuse(point_semantic, point_instance, cfg.thing_classes)

    return PipelineResult(labeling=labeling, timings_us=watch.timings_us,
                          range_image=ri, semantic_map=sem_map,
                          instance_map=instance_map, graph=graph,
                          depth_maps=depth_maps, normals=normals)

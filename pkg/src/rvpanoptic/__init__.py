"""Real-time cluster-free panoptic segmentation for LiDAR range views."""

from .backend import active_backend, compiled_available, set_backend
from .config import PipelineConfig, load_config
from .depth import (CompletionConfig, DepthMaps, NormalMap, build_depth_maps,
                    compute_normals, gaussian_weights)
from .errors import PipelineError
from .fusion import KnnParams, PanopticLabeling, fuse, knn_refine, majority_vote
from .instance import (EmbeddingMap, InstanceParams, PillarGraph, PillarSet,
                       derive_alpha, segment_instances)
from .losses import LossWeights, semantic_loss, total_loss
from .metrics import PQReport, evaluate, match_segments, mean_iou, panoptic_quality
from .pipeline import PipelineInputs, PipelineResult, run_pipeline
from .projection import (PointCloud, ProjectionConfig, RangeImage,
                         build_dense_depth_map, project_to_range_view,
                         reproject_labels)
from .synthetic import SceneSpec, generate_scene

__version__ = "0.1.0"

__all__ = [
    "CompletionConfig", "DepthMaps", "EmbeddingMap", "InstanceParams",
    "KnnParams", "LossWeights", "NormalMap", "PQReport", "PanopticLabeling",
    "PillarGraph", "PillarSet", "PipelineConfig", "PipelineError",
    "PipelineInputs", "PipelineResult", "PointCloud", "ProjectionConfig",
    "RangeImage", "SceneSpec", "active_backend", "build_dense_depth_map",
    "build_depth_maps", "compiled_available", "compute_normals",
    "derive_alpha", "evaluate", "fuse", "gaussian_weights", "generate_scene",
    "knn_refine", "load_config", "majority_vote", "match_segments",
    "mean_iou", "panoptic_quality", "project_to_range_view",
    "reproject_labels", "run_pipeline", "segment_instances", "semantic_loss",
    "set_backend", "total_loss",
]

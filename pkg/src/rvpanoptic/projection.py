"""Spherical range-view projection of LiDAR point clouds.

Converts between unordered 3D points and a dense H x W grid indexed by
azimuth (columns) and elevation (rows), including the half-resolution depth
map used to guide depth completion, and the inverse label re-projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import DegeneratePoint, EmptyInput, ShapeError

PIXEL_EMPTY = -1


@dataclass(frozen=True)
class PointCloud:
    """Raw scan: per-point position/remission plus optional panoptic labels.

    Args:
        xyz: (N, 3) Cartesian coordinates in meters, sensor at the origin.
        remission: (N,) reflectance in [0, 1].
        semantic: optional (N,) class ids.
        instance: optional (N,) instance ids, 0 for stuff / unlabeled.
    """

    xyz: np.ndarray
    remission: np.ndarray
    semantic: np.ndarray | None = None
    instance: np.ndarray | None = None

    def __post_init__(self):
        xyz = np.ascontiguousarray(np.asarray(self.xyz, dtype=np.float64))
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise ShapeError(f"xyz must be (N, 3), got {xyz.shape}")
        rem = np.ascontiguousarray(np.asarray(self.remission, dtype=np.float64))
        if rem.shape != (xyz.shape[0],):
            raise ShapeError(f"remission must be (N,), got {rem.shape}")
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "remission", rem)
        for name in ("semantic", "instance"):
            val = getattr(self, name)
            if val is not None:
                val = np.ascontiguousarray(np.asarray(val, dtype=np.int32))
                if val.shape != (xyz.shape[0],):
                    raise ShapeError(f"{name} must be (N,), got {val.shape}")
                object.__setattr__(self, name, val)

    def __len__(self) -> int:
        return self.xyz.shape[0]

    @property
    def depth(self) -> np.ndarray:
        return np.linalg.norm(self.xyz, axis=1)


@dataclass(frozen=True)
class ProjectionConfig:
    """Grid geometry of the range view.

    fov_up_deg / fov_down_deg bound the elevation span; defaults match a
    64-beam sensor. Collisions always keep the nearest point.
    """

    height: int = 64
    width: int = 2048
    fov_up_deg: float = 3.0
    fov_down_deg: float = -25.0

    def __post_init__(self):
        if self.height < 2 or self.width < 2:
            raise ShapeError("projection grid must be at least 2 x 2")
        if not self.fov_up_deg > self.fov_down_deg:
            raise ShapeError("fov_up must exceed fov_down")

    @property
    def fov_up(self) -> float:
        return np.deg2rad(self.fov_up_deg)

    @property
    def fov_down(self) -> float:
        return np.deg2rad(self.fov_down_deg)

    @property
    def fov(self) -> float:
        return self.fov_up - self.fov_down

    @property
    def azimuth_step(self) -> float:
        """Angular column step in radians."""
        return 2.0 * np.pi / self.width

    @property
    def elevation_step(self) -> float:
        """Angular row step in radians."""
        return self.fov / self.height

    def half_resolution(self) -> "ProjectionConfig":
        return ProjectionConfig(max(2, self.height // 2), max(2, self.width // 2),
                                self.fov_up_deg, self.fov_down_deg)


@dataclass(frozen=True)
class RangeImage:
    """Projected scan: per-pixel channels plus both index maps.

    ``pixel_to_point`` holds the retained (nearest) point per pixel or
    PIXEL_EMPTY; ``point_to_pixel`` records (row, col) for every input point,
    including points that lost a collision.
    """

    config: ProjectionConfig
    depth: np.ndarray
    xyz: np.ndarray
    remission: np.ndarray
    occupancy: np.ndarray
    pixel_to_point: np.ndarray
    point_to_pixel: np.ndarray
    point_depth: np.ndarray
    point_azimuth: np.ndarray
    point_elevation: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape

    @property
    def num_points(self) -> int:
        return self.point_to_pixel.shape[0]

    @property
    def occupied_fraction(self) -> float:
        return float(self.occupancy.mean())


def _spherical(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    depth = np.linalg.norm(xyz, axis=1)
    if np.any(depth == 0.0):
        raise DegeneratePoint("point at sensor origin has no direction")
    azimuth = np.arctan2(xyz[:, 1], xyz[:, 0])
    elevation = np.arcsin(xyz[:, 2] / depth)
    return depth, azimuth, elevation


def _grid_cells(azimuth, elevation, cfg: ProjectionConfig):
    col = np.floor(0.5 * (1.0 - azimuth / np.pi) * cfg.width)
    row = np.floor((1.0 - (elevation - cfg.fov_down) / cfg.fov) * cfg.height)
    col = np.clip(col, 0, cfg.width - 1).astype(np.int64)
    row = np.clip(row, 0, cfg.height - 1).astype(np.int64)
    return row, col


def pixel_coordinates(xyz: np.ndarray, cfg: ProjectionConfig) -> tuple[np.ndarray, np.ndarray]:
    """Map points to (row, col) via the standard spherical grid.

    col = floor(0.5 * (1 - azimuth/pi) * W), row scales elevation across the
    field of view; both computed in double precision, floored, then clamped.
    """
    _, azimuth, elevation = _spherical(xyz)
    return _grid_cells(azimuth, elevation, cfg)


def _assemble(cloud: PointCloud, cfg: ProjectionConfig, depth, azimuth,
              elevation) -> RangeImage:
    row, col = _grid_cells(azimuth, elevation, cfg)
    pixel_to_point = backend.kernels().scatter_nearest_core(
        row, col, np.ascontiguousarray(depth), cfg.height, cfg.width)

    occupancy = pixel_to_point >= 0
    winner = np.where(occupancy, pixel_to_point, 0)
    depth_map = np.where(occupancy, depth[winner], 0.0)
    xyz_map = np.where(occupancy[..., None], cloud.xyz[winner], 0.0)
    rem_map = np.where(occupancy, cloud.remission[winner], 0.0)

    return RangeImage(
        config=cfg,
        depth=depth_map,
        xyz=xyz_map,
        remission=rem_map,
        occupancy=occupancy,
        pixel_to_point=pixel_to_point,
        point_to_pixel=np.stack([row, col], axis=1),
        point_depth=depth,
        point_azimuth=azimuth,
        point_elevation=elevation,
    )


def project_to_range_view(cloud: PointCloud, cfg: ProjectionConfig) -> RangeImage:
    """Project a cloud onto the range-view grid, keeping the nearest point
    per pixel (ties broken by smallest point index).

    Raises:
        EmptyInput: the cloud has no points.
        DegeneratePoint: a point sits exactly at the origin.
    """
    if len(cloud) == 0:
        raise EmptyInput("cannot project an empty cloud")
    depth, azimuth, elevation = _spherical(cloud.xyz)
    return _assemble(cloud, cfg, depth, azimuth, elevation)


def build_dense_depth_map(cloud: PointCloud, cfg: ProjectionConfig,
                          reuse: RangeImage | None = None) -> RangeImage:
    """Project at half resolution; the coarser grid is strictly denser.

    ``reuse`` lets a full-resolution projection of the same cloud donate its
    per-point spherical coordinates instead of recomputing them.
    """
    if len(cloud) == 0:
        raise EmptyInput("cannot project an empty cloud")
    half_cfg = cfg.half_resolution()
    if reuse is not None and reuse.num_points == len(cloud):
        return _assemble(cloud, half_cfg, reuse.point_depth,
                         reuse.point_azimuth, reuse.point_elevation)
    return project_to_range_view(cloud, half_cfg)


def reproject_labels(ri: RangeImage, pixel_labels: np.ndarray) -> np.ndarray:
    """Read back a per-pixel map at every point's recorded pixel.

    ``pixel_labels`` may be (H, W) or (H, W, C); output is (N,) or (N, C).
    """
    pixel_labels = np.asarray(pixel_labels)
    if pixel_labels.shape[:2] != ri.shape:
        raise ShapeError(
            f"label map {pixel_labels.shape[:2]} does not match image {ri.shape}")
    rows = ri.point_to_pixel[:, 0]
    cols = ri.point_to_pixel[:, 1]
    return pixel_labels[rows, cols]

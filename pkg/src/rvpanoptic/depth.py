"""Deterministic depth completion and range-gradient surface normals.

Empty range-image pixels are filled from Gaussian-weighted row or column
neighbors; a coarse dense map (bilinear upsample of the half-resolution
projection) supplies gradient guidance that picks the fill direction per
pixel. Normals come from the angular gradients of the completed map,
transformed into the sensor Cartesian frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import EmptyInput, InvalidWindow
from .projection import PointCloud, ProjectionConfig, RangeImage, build_dense_depth_map

ROW = 1
COL = 0

# fill provenance per pixel of the completed map
SOURCE_MEASURED = 0
SOURCE_ROW = 1
SOURCE_COL = 2
SOURCE_UPSAMPLED = 3


@dataclass(frozen=True)
class CompletionConfig:
    """Window length and Gaussian weight parameters for directional fill."""

    window: int = 7
    weight_scale: float = 1.0   # peak weight at the window center
    weight_width: float = 1.0   # Gaussian sigma in pixels
    wrap_azimuth: bool = False  # treat columns as cyclic when filling rows

    def __post_init__(self):
        if self.window % 2 == 0 or self.window < 3:
            raise InvalidWindow(f"window must be odd and >= 3, got {self.window}")
        if self.weight_scale <= 0 or self.weight_width <= 0:
            raise InvalidWindow("weight parameters must be positive")


@dataclass(frozen=True)
class DepthMaps:
    """All intermediate and final products of one completion run."""

    sparse: np.ndarray
    occupancy: np.ndarray
    dense_half: np.ndarray
    dense_half_occupancy: np.ndarray
    upsampled: np.ndarray
    row_fill: np.ndarray
    row_valid: np.ndarray
    col_fill: np.ndarray
    col_valid: np.ndarray
    guidance_theta: np.ndarray
    guidance_phi: np.ndarray
    completed: np.ndarray
    fill_source: np.ndarray


@dataclass(frozen=True)
class NormalMap:
    """Per-pixel unit normals in the sensor frame, oriented toward it."""

    normals: np.ndarray
    valid: np.ndarray


def gaussian_weights(window: int, scale: float = 1.0, width: float = 1.0) -> np.ndarray:
    """Symmetric window weights w(v) = scale * exp(-v^2 / (2 width^2)).

    Raises:
        InvalidWindow: window is even or below 3.
    """
    if window % 2 == 0 or window < 3:
        raise InvalidWindow(f"window must be odd and >= 3, got {window}")
    offsets = np.arange(window, dtype=np.float64) - window // 2
    return scale * np.exp(-(offsets ** 2) / (2.0 * width * width))


def directional_fill(depth: np.ndarray, occupancy: np.ndarray, weights: np.ndarray,
                     axis: int, wrap: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Occupancy-gated weighted average over a 1D window.

    axis=ROW averages along each row (column neighbors j+v), axis=COL along
    each column. Out-of-bounds neighbors count as unoccupied; pixels whose
    window holds no occupied neighbor are returned invalid rather than
    raising.

    Returns:
        (fill, valid) both (H, W); fill is 0 where valid is False.
    """
    depth = np.ascontiguousarray(depth, dtype=np.float64)
    occ = np.ascontiguousarray(occupancy, dtype=np.uint8)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    fill, valid = backend.kernels().directional_fill_core(
        depth, occ, weights, axis, bool(wrap and axis == ROW))
    return fill, valid.astype(bool)


def _prefill_rows(depth: np.ndarray, occupancy: np.ndarray) -> np.ndarray:
    """Nearest-occupied fill inside each row, scanning left then right.

    Rows without any occupied pixel are then filled per column the same way
    so the result is dense whenever the map has at least one occupied pixel.
    """
    h, w = depth.shape
    out = np.where(occupancy, depth, np.nan)

    def _sweep(values, along_cols):
        arr = values if along_cols else values.T
        n = arr.shape[1]
        idx = np.where(~np.isnan(arr), np.arange(n)[None, :], 0)
        np.maximum.accumulate(idx, axis=1, out=idx)
        fwd = arr[np.arange(arr.shape[0])[:, None], idx]
        # backward pass fills the gaps before the first occupied pixel
        rev = fwd[:, ::-1]
        idx = np.where(~np.isnan(rev), np.arange(n)[None, :], 0)
        np.maximum.accumulate(idx, axis=1, out=idx)
        back = rev[np.arange(arr.shape[0])[:, None], idx][:, ::-1]
        return back if along_cols else back.T

    out = _sweep(out, True)
    if np.isnan(out).any():
        out = _sweep(out, False)
    return out


def bilinear_upsample(dense_half: np.ndarray, occupancy: np.ndarray,
                      out_shape: tuple[int, int] | None = None) -> np.ndarray:
    """Upsample the half-resolution depth map to full resolution.

    Residual holes are pre-filled with the nearest occupied value in the
    same row before standard bilinear interpolation (align-corners-false).

    Raises:
        EmptyInput: the half-resolution map has no occupied pixel.
    """
    if not np.any(occupancy):
        raise EmptyInput("half-resolution depth map is empty")
    filled = _prefill_rows(np.asarray(dense_half, dtype=np.float64),
                           np.asarray(occupancy, dtype=bool))
    h2, w2 = filled.shape
    if out_shape is None:
        out_shape = (2 * h2, 2 * w2)
    h, w = out_shape

    def _axis(n_out, n_in):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = src - lo
        return lo, hi, frac

    r0, r1, fr = _axis(h, h2)
    c0, c1, fc = _axis(w, w2)
    top = filled[r0][:, c0] * (1.0 - fc)[None, :] + filled[r0][:, c1] * fc[None, :]
    bot = filled[r1][:, c0] * (1.0 - fc)[None, :] + filled[r1][:, c1] * fc[None, :]
    return top * (1.0 - fr)[:, None] + bot * fr[:, None]


def guidance_gradients(upsampled: np.ndarray,
                       cfg: ProjectionConfig) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference depth gradients per radian of azimuth / elevation.

    Central differences in the interior, one-sided at the borders, divided
    by the per-axis angular step.
    """
    if upsampled.shape[0] >= 2:
        d_phi = np.gradient(upsampled, axis=0) / cfg.elevation_step
    else:
        d_phi = np.zeros_like(upsampled)
    if upsampled.shape[1] >= 2:
        d_theta = np.gradient(upsampled, axis=1) / cfg.azimuth_step
    else:
        d_theta = np.zeros_like(upsampled)
    return d_theta, d_phi


def complete_depth(sparse: np.ndarray, occupancy: np.ndarray,
                   row_fill: np.ndarray, row_valid: np.ndarray,
                   col_fill: np.ndarray, col_valid: np.ndarray,
                   guidance_theta: np.ndarray, guidance_phi: np.ndarray,
                   upsampled: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Select the completed value per pixel.

    Measured pixels pass through untouched (bit-exact). Empty pixels take
    the row fill when the azimuthal guidance gradient does not exceed the
    elevational one (ties go to the row fill), otherwise the column fill;
    an invalid selection falls back to the other direction, then to the
    upsampled coarse map.

    Returns:
        (completed, fill_source) with fill_source in {SOURCE_MEASURED,
        SOURCE_ROW, SOURCE_COL, SOURCE_UPSAMPLED}.
    """
    occupancy = occupancy.astype(bool)
    prefer_row = np.abs(guidance_theta) <= np.abs(guidance_phi)

    primary = np.where(prefer_row, row_fill, col_fill)
    primary_ok = np.where(prefer_row, row_valid, col_valid)
    secondary = np.where(prefer_row, col_fill, row_fill)
    secondary_ok = np.where(prefer_row, col_valid, row_valid)

    filled = np.where(primary_ok, primary, np.where(secondary_ok, secondary, upsampled))
    completed = np.where(occupancy, sparse, filled)

    source = np.full(sparse.shape, SOURCE_UPSAMPLED, dtype=np.uint8)
    source[secondary_ok] = np.where(prefer_row[secondary_ok], SOURCE_COL, SOURCE_ROW)
    source[primary_ok] = np.where(prefer_row[primary_ok], SOURCE_ROW, SOURCE_COL)
    source[occupancy] = SOURCE_MEASURED
    return completed, source


def build_depth_maps(cloud: PointCloud, ri: RangeImage,
                     completion: CompletionConfig | None = None) -> DepthMaps:
    """Run the full completion pipeline for one projected scan."""
    completion = completion or CompletionConfig()
    cfg = ri.config
    weights = gaussian_weights(completion.window, completion.weight_scale,
                               completion.weight_width)
    row_fill, row_valid = directional_fill(ri.depth, ri.occupancy, weights,
                                           ROW, completion.wrap_azimuth)
    col_fill, col_valid = directional_fill(ri.depth, ri.occupancy, weights, COL)

    half = build_dense_depth_map(cloud, cfg)
    upsampled = bilinear_upsample(half.depth, half.occupancy, ri.shape)
    g_theta, g_phi = guidance_gradients(upsampled, cfg)

    completed, source = complete_depth(ri.depth, ri.occupancy,
                                       row_fill, row_valid, col_fill, col_valid,
                                       g_theta, g_phi, upsampled)
    return DepthMaps(
        sparse=ri.depth, occupancy=ri.occupancy,
        dense_half=half.depth, dense_half_occupancy=half.occupancy,
        upsampled=upsampled,
        row_fill=row_fill, row_valid=row_valid,
        col_fill=col_fill, col_valid=col_valid,
        guidance_theta=g_theta, guidance_phi=g_phi,
        completed=completed, fill_source=source,
    )


def pixel_angles(cfg: ProjectionConfig) -> tuple[np.ndarray, np.ndarray]:
    """Azimuth per column and elevation per row at pixel centers."""
    theta = np.pi * (1.0 - 2.0 * (np.arange(cfg.width) + 0.5) / cfg.width)
    phi = cfg.fov_down + (1.0 - (np.arange(cfg.height) + 0.5) / cfg.height) * cfg.fov
    return theta, phi


def compute_normals(completed: np.ndarray, cfg: ProjectionConfig) -> NormalMap:
    """Surface normals from the angular gradients of a dense depth map.

    The surface point is p = r * v(theta, phi) with v the unit viewing ray;
    the normal is the cross product of the two tangents dp/dcol and dp/drow
    (each combining the range gradient with the ray derivative), normalized
    and flipped to face the sensor. Pixels where the tangents are parallel
    (norm < 1e-9) are flagged invalid. Component arithmetic throughout: this
    sits on the real-time path.
    """
    completed = np.asarray(completed, dtype=np.float64)
    h, w = completed.shape
    theta, phi = pixel_angles(cfg)
    cos_t, sin_t = np.cos(theta)[None, :], np.sin(theta)[None, :]
    cos_p, sin_p = np.cos(phi)[:, None], np.sin(phi)[:, None]

    vx = cos_p * cos_t
    vy = cos_p * sin_t
    vz = np.broadcast_to(sin_p, (h, w))

    dr_drow = np.gradient(completed, axis=0) if h >= 2 else np.zeros_like(completed)
    dr_dcol = np.gradient(completed, axis=1) if w >= 2 else np.zeros_like(completed)

    # tangents dp/dcol and dp/drow; theta and phi decrease with the index
    a = -cfg.azimuth_step * completed
    tcx = dr_dcol * vx - a * (cos_p * sin_t)
    tcy = dr_dcol * vy + a * (cos_p * cos_t)
    tcz = dr_dcol * vz
    b = -cfg.elevation_step * completed
    trx = dr_drow * vx - b * (sin_p * cos_t)
    try_ = dr_drow * vy - b * (sin_p * sin_t)
    trz = dr_drow * vz + b * cos_p

    nx = tcy * trz - tcz * try_
    ny = tcz * trx - tcx * trz
    nz = tcx * try_ - tcy * trx

    norm = np.sqrt(nx * nx + ny * ny + nz * nz)
    valid = norm >= 1e-9
    scale = np.zeros_like(norm)
    np.divide(1.0, norm, out=scale, where=valid)
    # orient toward the sensor: flip where the normal points along the ray
    scale = np.where(nx * vx + ny * vy + nz * vz > 0, -scale, scale)

    normal = np.empty((h, w, 3))
    normal[..., 0] = nx * scale
    normal[..., 1] = ny * scale
    normal[..., 2] = nz * scale
    return NormalMap(normals=normal, valid=valid)

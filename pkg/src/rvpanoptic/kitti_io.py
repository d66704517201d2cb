"""Bit-exact readers and writers for scan, label and debug-map files.

Scans are little-endian float32 (x, y, z, remission) quadruples; labels are
little-endian uint32 words with the semantic class in the low 16 bits and
the instance id in the high 16 bits. Debug maps (depth, normals, embedding,
semantic predictions) use a 16-byte header: 4-byte magic, then uint32
height, width and channel count.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, FormatError, IoError, RangeError
from .fusion import PanopticLabeling
from .projection import PointCloud

MAGIC_F32 = b"RVMF"
MAGIC_U16 = b"RVMU"
_HEADER = struct.Struct("<4sIII")


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def read_scan_bin(path) -> PointCloud:
    """Load a point cloud from a raw .bin scan file.

    Raises:
        IoError: unreadable file.
        FormatError: size not a multiple of 16 bytes.
    """
    raw = _read_bytes(path)
    if len(raw) % 16 != 0:
        raise FormatError(f"{path}: size {len(raw)} is not a multiple of 16")
    data = np.frombuffer(raw, dtype="<f4").reshape(-1, 4)
    return PointCloud(xyz=data[:, :3].astype(np.float64),
                      remission=data[:, 3].astype(np.float64))


def write_scan_bin(path, cloud: PointCloud) -> None:
    data = np.empty((len(cloud), 4), dtype="<f4")
    data[:, :3] = cloud.xyz
    data[:, 3] = cloud.remission
    try:
        Path(path).write_bytes(data.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_labels(path, expected_count: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Load per-point (semantic, instance) from a .label file.

    Raises:
        FormatError: size not a multiple of 4 bytes.
        ConsistencyError: count differs from the paired scan.
    """
    raw = _read_bytes(path)
    if len(raw) % 4 != 0:
        raise FormatError(f"{path}: size {len(raw)} is not a multiple of 4")
    words = np.frombuffer(raw, dtype="<u4")
    if expected_count is not None and words.size != expected_count:
        raise ConsistencyError(
            f"{path}: {words.size} labels for {expected_count} points")
    semantic = (words & 0xFFFF).astype(np.int32)
    instance = (words >> 16).astype(np.int32)
    return semantic, instance


def write_panoptic(path, labeling: PanopticLabeling) -> None:
    """Pack (semantic, instance) back into label words; inverse of read_labels.

    Raises:
        RangeError: a class or instance id does not fit in 16 bits.
    """
    semantic = labeling.semantic
    instance = labeling.instance
    if semantic.size and (semantic.min() < 0 or semantic.max() >= 1 << 16):
        raise RangeError("semantic class outside [0, 65535]")
    if instance.size and (instance.min() < 0 or instance.max() >= 1 << 16):
        raise RangeError("instance id outside [0, 65535]")
    words = (instance.astype(np.uint32) << 16) | semantic.astype(np.uint32)
    try:
        Path(path).write_bytes(words.astype("<u4").tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _write_map(path, array: np.ndarray, magic: bytes, dtype: str) -> None:
    if array.ndim == 2:
        array = array[..., None]
    if array.ndim != 3:
        raise FormatError(f"map must be (H, W) or (H, W, C), got {array.shape}")
    h, w, c = array.shape
    payload = np.ascontiguousarray(array, dtype=dtype).tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(magic, h, w, c))
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _read_map(path, magic: bytes, dtype: str, itemsize: int) -> np.ndarray:
    raw = _read_bytes(path)
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    got_magic, h, w, c = _HEADER.unpack_from(raw)
    if got_magic != magic:
        raise FormatError(f"{path}: bad magic {got_magic!r}, expected {magic!r}")
    expected = _HEADER.size + h * w * c * itemsize
    if len(raw) != expected:
        raise FormatError(f"{path}: size {len(raw)} does not match header "
                          f"({h}x{w}x{c}, expected {expected})")
    data = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size)
    return data.reshape(h, w, c)


def write_map_f32(path, array: np.ndarray) -> None:
    """Row-major float32 map dump with the 16-byte header."""
    _write_map(path, np.asarray(array), MAGIC_F32, "<f4")


def read_map_f32(path) -> np.ndarray:
    return _read_map(path, MAGIC_F32, "<f4", 4).astype(np.float64)


def write_map_u16(path, array: np.ndarray) -> None:
    """Row-major uint16 map dump (class predictions) with the 16-byte header."""
    arr = np.asarray(array)
    if arr.size and (arr.min() < 0 or arr.max() >= 1 << 16):
        raise RangeError("uint16 map values outside [0, 65535]")
    _write_map(path, arr, MAGIC_U16, "<u2")


def read_map_u16(path) -> np.ndarray:
    return _read_map(path, MAGIC_U16, "<u2", 2).astype(np.int32)

"""Pinhole back-projection, rigid transforms, soft-mask weighting, BEV binning.

Conventions: camera frame is +x right, +y down, +z forward (optical axis);
world frame is +z up. Pixel (u, v) refers to the continuous image plane;
integer pixel indices sample at their centers (u + 0.5, v + 0.5). The
bird's-eye view projects world (x, y) onto the ground plane.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np


class InvalidDepthError(ValueError):
    """Depth value is non-positive; the point carries no range information."""


class DepthFormatError(IOError):
    """Depth file does not follow the DORODPTH layout."""


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the frame")

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0, self.cx], [0, self.fy, self.cy], [0, 0, 1.0]])


@dataclass(frozen=True, eq=False)
class Pose:
    """Camera-to-world rigid transform: p_world = rotation @ p_cam + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if R.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-6:
            raise ValueError("rotation is not orthonormal within 1e-6")
        if abs(np.linalg.det(R) - 1.0) > 1e-6:
            raise ValueError("rotation must be proper (det +1)")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError("pose matrix must be 4x4")
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


@dataclass(frozen=True)
class BoundingBox:
    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self):
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise ValueError(f"degenerate bounding box {self!r}")

    @property
    def width(self) -> float:
        return self.u_max - self.u_min

    @property
    def height(self) -> float:
        return self.v_max - self.v_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.u_min + self.u_max), 0.5 * (self.v_min + self.v_max))

    def clamp(self, width: int, height: int) -> "BoundingBox | None":
        """Clip to the frame; None when nothing remains."""
        u0, v0 = max(self.u_min, 0.0), max(self.v_min, 0.0)
        u1, v1 = min(self.u_max, float(width)), min(self.v_max, float(height))
        if u0 >= u1 or v0 >= v1:
            return None
        return BoundingBox(u0, v0, u1, v1)

    def pixel_indices(self, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Integer pixel columns/rows whose centers fall inside the box."""
        us = np.arange(int(np.floor(self.u_min)), int(np.ceil(self.u_max)), stride)
        vs = np.arange(int(np.floor(self.v_min)), int(np.ceil(self.v_max)), stride)
        us = us[(us + 0.5 >= self.u_min) & (us + 0.5 < self.u_max)]
        vs = vs[(vs + 0.5 >= self.v_min) & (vs + 0.5 < self.v_max)]
        return us, vs


@dataclass(frozen=True, eq=False)
class DepthFrame:
    """Row-major z-depth in meters; 0.0 marks invalid (no return)."""

    width: int
    height: int
    depth: np.ndarray
    max_range: float = 10.0

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=np.float32).reshape(self.height, self.width)
        if not np.all(np.isfinite(d)):
            raise ValueError("depth frame contains non-finite values")
        if d.min() < 0 or d.max() > self.max_range:
            raise ValueError(f"depth values must lie in [0, {self.max_range}]")
        object.__setattr__(self, "depth", d)


@dataclass(frozen=True)
class WeightedPoint:
    x: float
    y: float
    z: float
    weight: float

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("point weight must be positive")


@dataclass(frozen=True)
class GridSpec:
    """2D occupancy grid: d1 cells along x, d2 along y, cell_size meters each."""

    origin_x: float
    origin_y: float
    cell_size: float
    d1: int
    d2: int

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError("grid dimensions must be >= 1")

    def cell_center(self, cell: tuple[int, int]) -> tuple[float, float]:
        return (
            self.origin_x + (cell[0] + 0.5) * self.cell_size,
            self.origin_y + (cell[1] + 0.5) * self.cell_size,
        )


class CellObservation(NamedTuple):
    """One frame's evidence for a grid cell: mean point weight and point count."""

    cell: tuple[int, int]
    weight: float
    count: int


class BevCells(NamedTuple):
    cells: tuple[CellObservation, ...]
    dropped: int


def backproject(u: float, v: float, d: float, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Image point (u, v) with depth d to camera-space (x, y, z); z equals d."""
    if d <= 0:
        raise InvalidDepthError(f"depth must be positive, got {d}")
    return np.array(
        [(u - intrinsics.cx) * d / intrinsics.fx, (v - intrinsics.cy) * d / intrinsics.fy, d]
    )


def to_world(p_cam: np.ndarray, pose: Pose) -> np.ndarray:
    """Apply the rigid transform; accepts a single (3,) point or an (N, 3) batch."""
    p = np.asarray(p_cam, dtype=np.float64)
    return p @ pose.rotation.T + pose.translation


def soft_mask_weight(u, v, bbox: BoundingBox, sigma_u: float, sigma_v: float):
    """2D Gaussian soft mask centered on the box, peak value 1/(2*sigma_u*sigma_v).

    Emphasizes box centers over boundaries and background. Accepts scalars
    or arrays for u, v.
    """
    if sigma_u <= 0 or sigma_v <= 0:
        raise ValueError("sigma_u and sigma_v must be positive")
    uc, vc = bbox.center
    du = (np.asarray(u, dtype=np.float64) - uc) / sigma_u
    dv = (np.asarray(v, dtype=np.float64) - vc) / sigma_v
    return (1.0 / (2.0 * sigma_u * sigma_v)) * np.exp(-0.5 * (du * du + dv * dv))


def bbox_cloud_arrays(
    bbox: BoundingBox,
    depth: DepthFrame,
    intrinsics: CameraIntrinsics,
    pose: Pose,
    sigma_frac: float = 0.25,
    stride: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized core of bbox_to_weighted_cloud: (points (N, 3), weights (N,)).

    Pixels with invalid depth are skipped; an all-invalid box yields empty
    arrays (no evidence).
    """
    if sigma_frac <= 0:
        raise ValueError("sigma_frac must be positive")
    box = bbox.clamp(depth.width, depth.height)
    if box is None:
        return np.empty((0, 3)), np.empty(0)
    us, vs = box.pixel_indices(stride)
    if us.size == 0 or vs.size == 0:
        return np.empty((0, 3)), np.empty(0)
    uu, vv = np.meshgrid(us, vs)
    d = depth.depth[vv, uu].astype(np.float64)
    valid = d > 0
    if not np.any(valid):
        return np.empty((0, 3)), np.empty(0)
    ucent = uu[valid] + 0.5
    vcent = vv[valid] + 0.5
    dval = d[valid]
    cam = np.stack(
        [
            (ucent - intrinsics.cx) * dval / intrinsics.fx,
            (vcent - intrinsics.cy) * dval / intrinsics.fy,
            dval,
        ],
        axis=1,
    )
    world = cam @ pose.rotation.T + pose.translation
    weights = soft_mask_weight(ucent, vcent, box, sigma_frac * box.width, sigma_frac * box.height)
    return world, weights


def bbox_to_weighted_cloud(
    bbox: BoundingBox,
    depth: DepthFrame,
    intrinsics: CameraIntrinsics,
    pose: Pose,
    sigma_frac: float = 0.25,
    stride: int = 1,
) -> list[WeightedPoint]:
    """Back-project every valid-depth pixel in the box to a weighted world point."""
    pts, w = bbox_cloud_arrays(bbox, depth, intrinsics, pose, sigma_frac, stride)
    return [WeightedPoint(float(p[0]), float(p[1]), float(p[2]), float(wi)) for p, wi in zip(pts, w)]


def voxelize_bev_arrays(
    points: np.ndarray, weights: np.ndarray, grid: GridSpec
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Bin world points into grid cells: (cells (M, 2), mean weights, counts, dropped).

    Cells are keyed by floor((coord - origin) / cell_size); boundary points
    land in the higher-index cell. Output rows are sorted by (x, y).
    """
    if len(points) == 0:
        return np.empty((0, 2), dtype=np.int64), np.empty(0), np.empty(0, dtype=np.int64), 0
    pts = np.asarray(points, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    ix = np.floor((pts[:, 0] - grid.origin_x) / grid.cell_size).astype(np.int64)
    iy = np.floor((pts[:, 1] - grid.origin_y) / grid.cell_size).astype(np.int64)
    inside = (ix >= 0) & (ix < grid.d1) & (iy >= 0) & (iy < grid.d2)
    dropped = int((~inside).sum())
    if not np.any(inside):
        return np.empty((0, 2), dtype=np.int64), np.empty(0), np.empty(0, dtype=np.int64), dropped
    key = ix[inside] * grid.d2 + iy[inside]
    uniq, inverse = np.unique(key, return_inverse=True)
    counts = np.bincount(inverse)
    sums = np.bincount(inverse, weights=w[inside])
    cells = np.stack([uniq // grid.d2, uniq % grid.d2], axis=1)
    return cells, sums / counts, counts, dropped


def voxelize_bev(points: Sequence[WeightedPoint], grid: GridSpec) -> BevCells:
    """Top-down BEV projection of weighted points onto the occupancy grid.

    Each occupied cell reports the arithmetic mean weight of its member
    points and the point count; out-of-grid points are counted as dropped.
    """
    pts = np.array([[p.x, p.y, p.z] for p in points], dtype=np.float64).reshape(-1, 3)
    w = np.array([p.weight for p in points], dtype=np.float64)
    cells, means, counts, dropped = voxelize_bev_arrays(pts, w, grid)
    obs = tuple(
        CellObservation((int(c[0]), int(c[1])), float(m), int(n))
        for c, m, n in zip(cells, means, counts)
    )
    return BevCells(obs, dropped)


DEPTH_MAGIC = b"DORODPTH"


def write_depth_file(path: str | Path, frame: DepthFrame) -> None:
    """DORODPTH format: magic, uint32 LE width/height, float32 LE row-major data."""
    data = frame.depth.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(DEPTH_MAGIC)
        fh.write(struct.pack("<II", frame.width, frame.height))
        fh.write(data)


def read_depth_file(path: str | Path, max_range: float = 10.0) -> DepthFrame:
    raw = Path(path).read_bytes()
    if raw[:8] != DEPTH_MAGIC:
        raise DepthFormatError(f"{path}: bad magic {raw[:8]!r}")
    if len(raw) < 16:
        raise DepthFormatError(f"{path}: truncated header")
    width, height = struct.unpack("<II", raw[8:16])
    expected = 16 + 4 * width * height
    if len(raw) != expected:
        raise DepthFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    depth = np.frombuffer(raw[16:], dtype="<f4").reshape(height, width)
    return DepthFrame(width, height, depth.copy(), max_range=max_range)

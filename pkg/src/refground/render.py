"""Ray-cast depth rendering of box scenes and ground-truth detections.

Each pixel's ray is intersected with every axis-aligned box (objects plus
floor and walls) by the slab method; the reported value is z-depth along
the optical axis, not ray length, so a frontal wall renders at constant
depth. Visibility for detections comes from the same pass: a pixel belongs
to the object whose intersection is nearest.
"""

from __future__ import annotations

import numpy as np

from .geometry import BoundingBox, CameraIntrinsics, DepthFrame, Pose
from .simulator import Detection, RoomSpec

STRUCTURE_ID = -2  # walls and floor
NO_HIT = -1

_WALL_THICKNESS = 0.2


def scene_boxes(
    room: RoomSpec, include_structure: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mins (B, 3), maxs (B, 3), ids (B,)): objects first, then structure."""
    ex, ey, ez = room.extents
    mins, maxs, ids = [], [], []
    for idx, obj in enumerate(room.objects):
        mins.append(obj.box_min)
        maxs.append(obj.box_max)
        ids.append(idx)
    t = _WALL_THICKNESS
    structure = [
        ((-t, -t, -t), (ex + t, ey + t, 0.0)),  # floor
        ((-t, -t, 0.0), (0.0, ey + t, ez)),  # x = 0 wall
        ((ex, -t, 0.0), (ex + t, ey + t, ez)),  # x = ex wall
        ((-t, -t, 0.0), (ex + t, 0.0, ez)),  # y = 0 wall
        ((-t, ey, 0.0), (ex + t, ey + t, ez)),  # y = ey wall
    ]
    if include_structure:
        for bmin, bmax in structure:
            mins.append(bmin)
            maxs.append(bmax)
            ids.append(STRUCTURE_ID)
    if not mins:
        return np.empty((0, 3)), np.empty((0, 3)), np.empty(0, dtype=np.int64)
    return (
        np.asarray(mins, dtype=np.float64),
        np.asarray(maxs, dtype=np.float64),
        np.asarray(ids, dtype=np.int64),
    )


def render_scene(
    room: RoomSpec,
    pose: Pose,
    intrinsics: CameraIntrinsics,
    max_range: float = 10.0,
    include_structure: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Render (depth (h, w) float32, winner (h, w) int64) for one view.

    winner holds the index of the nearest object per pixel, STRUCTURE_ID for
    walls/floor, NO_HIT where nothing is within max_range. Depth is 0 there.
    """
    w, h = intrinsics.width, intrinsics.height
    us = (np.arange(w) + 0.5 - intrinsics.cx) / intrinsics.fx
    vs = (np.arange(h) + 0.5 - intrinsics.cy) / intrinsics.fy
    uu, vv = np.meshgrid(us, vs)
    dirs_cam = np.stack([uu.ravel(), vv.ravel(), np.ones(w * h)], axis=1)
    dirs = dirs_cam @ pose.rotation.T
    dirs = np.where(np.abs(dirs) < 1e-12, 1e-12, dirs)
    origin = pose.translation

    mins, maxs, ids = scene_boxes(room, include_structure)
    if len(ids) == 0:
        zero = np.zeros((h, w), dtype=np.float32)
        return zero, np.full((h, w), NO_HIT, dtype=np.int64)
    inv = 1.0 / dirs  # (N, 3)
    t1 = (mins[None, :, :] - origin) * inv[:, None, :]
    t2 = (maxs[None, :, :] - origin) * inv[:, None, :]
    tnear = np.minimum(t1, t2).max(axis=2)
    tfar = np.maximum(t1, t2).min(axis=2)
    hit = (tnear <= tfar) & (tfar > 1e-9)
    tval = np.where(tnear > 1e-9, tnear, tfar)  # camera inside a box: exit face
    tval = np.where(hit, tval, np.inf)

    best = np.argmin(tval, axis=1)
    depth = tval[np.arange(tval.shape[0]), best]
    winner = ids[best]
    miss = ~np.isfinite(depth) | (depth > max_range)
    depth = np.where(miss, 0.0, depth)
    winner = np.where(miss, NO_HIT, winner)
    return depth.reshape(h, w).astype(np.float32), winner.reshape(h, w)


def render_depth(
    room: RoomSpec, pose: Pose, intrinsics: CameraIntrinsics, max_range: float = 10.0
) -> DepthFrame:
    depth, _ = render_scene(room, pose, intrinsics, max_range)
    return DepthFrame(intrinsics.width, intrinsics.height, depth, max_range=max_range)


def gt_detections(
    room: RoomSpec,
    pose: Pose,
    intrinsics: CameraIntrinsics,
    captions: dict[int, str],
    min_pixels: int = 25,
    max_range: float = 10.0,
    winner: np.ndarray | None = None,
) -> list[Detection]:
    """Tight boxes around each object's visible pixels, with its caption.

    Visibility is depth-buffer based: occluded objects yield nothing; an
    object clipped by the frame edge gets a clamped box. Pass a precomputed
    winner map to reuse a render.
    """
    if winner is None:
        _, winner = render_scene(room, pose, intrinsics, max_range)
    detections: list[Detection] = []
    for idx, obj in enumerate(room.objects):
        ys, xs = np.nonzero(winner == idx)
        if xs.size < min_pixels:
            continue
        bbox = BoundingBox(
            float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1)
        )
        detections.append(Detection(bbox, captions[obj.id], obj.id))
    return detections

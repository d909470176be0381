"""Observation stream layout: one directory per episode.

    episode_00000/
        room.json            ground-truth scene
        episode.jsonl        one record per frame: index, pose (16 row-major
                             numbers), intrinsics, detections, depth file name
        instructions.jsonl   evaluation labels
        frame_00000.depth    DORODPTH binary depth frames

All JSON is written with sorted keys and plain Python floats so reruns with
the same seed produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import BoundingBox, CameraIntrinsics, DepthFrame, Pose, read_depth_file, write_depth_file
from .render import gt_detections, render_scene
from .simulator import (
    Detection,
    InstructionCase,
    RoomSpec,
    caption_for,
    derive_relations,
    emit_instructions,
    plan_trajectory,
)


class DatasetError(ValueError):
    """Episode directory is missing required files or has malformed records."""


def jsonify(value):
    """Convert numpy scalars/arrays and tuples so json.dumps stays deterministic."""
    if isinstance(value, dict):
        return {k: jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonify(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonify(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def dump_json_line(obj) -> str:
    return json.dumps(jsonify(obj), sort_keys=True)


@dataclass(frozen=True)
class FrameRecord:
    index: int
    pose: Pose
    intrinsics: CameraIntrinsics
    detections: tuple[Detection, ...]
    depth_path: Path

    def load_depth(self, max_range: float = 10.0) -> DepthFrame:
        return read_depth_file(self.depth_path, max_range=max_range)


def _detection_dict(det: Detection) -> dict:
    return {
        "bbox": [det.bbox.u_min, det.bbox.v_min, det.bbox.u_max, det.bbox.v_max],
        "caption": det.caption,
        "gt_id": det.gt_object_id,
    }


def _detection_from_dict(d: dict) -> Detection:
    u0, v0, u1, v1 = (float(x) for x in d["bbox"])
    return Detection(BoundingBox(u0, v0, u1, v1), d["caption"], d.get("gt_id"))


def write_episode(
    out_dir: str | Path,
    room: RoomSpec,
    poses: list[Pose],
    intrinsics: CameraIntrinsics,
    instructions: list[InstructionCase],
    captions: dict[int, str],
    min_pixels: int = 25,
    max_range: float = 10.0,
) -> Path:
    """Render every pose, write depth frames and all episode files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "room.json").write_text(
        json.dumps(jsonify(room.to_dict()), sort_keys=True) + "\n", encoding="utf-8"
    )
    frame_lines = []
    for index, pose in enumerate(poses):
        depth, winner = render_scene(room, pose, intrinsics, max_range)
        detections = gt_detections(
            room, pose, intrinsics, captions, min_pixels, max_range, winner=winner
        )
        depth_name = f"frame_{index:05d}.depth"
        write_depth_file(out / depth_name, DepthFrame(intrinsics.width, intrinsics.height, depth, max_range))
        frame_lines.append(
            dump_json_line(
                {
                    "frame": index,
                    "pose": [float(x) for x in pose.matrix().reshape(-1)],
                    "intrinsics": {
                        "fx": intrinsics.fx,
                        "fy": intrinsics.fy,
                        "cx": intrinsics.cx,
                        "cy": intrinsics.cy,
                        "width": intrinsics.width,
                        "height": intrinsics.height,
                    },
                    "detections": [_detection_dict(d) for d in detections],
                    "depth_file": depth_name,
                }
            )
        )
    (out / "episode.jsonl").write_text("\n".join(frame_lines) + "\n", encoding="utf-8")
    (out / "instructions.jsonl").write_text(
        "\n".join(dump_json_line(case.to_dict()) for case in instructions) + "\n",
        encoding="utf-8",
    )
    return out


def simulate_episode(
    out_dir: str | Path,
    room: RoomSpec,
    intrinsics: CameraIntrinsics,
    n_waypoints: int = 12,
    cam_height: float = 2.2,
    traj_margin: float = 0.45,
    look_height: float = 0.0,
    tau_near: float = 0.75,
    min_pixels: int = 25,
    max_range: float = 2.4,
    look_frac: float = 0.42,
) -> Path:
    """Trajectory + rendering + labels for one generated room."""
    relations = derive_relations(room, tau_near)
    captions = {o.id: caption_for(room, o, relations) for o in room.objects}
    poses = plan_trajectory(room, n_waypoints, cam_height, traj_margin, look_height, look_frac)
    instructions = emit_instructions(room, relations)
    return write_episode(
        out_dir, room, poses, intrinsics, instructions, captions, min_pixels, max_range
    )


def load_room(episode_dir: str | Path) -> RoomSpec:
    path = Path(episode_dir) / "room.json"
    if not path.exists():
        raise DatasetError(f"{episode_dir}: missing room.json")
    return RoomSpec.from_dict(json.loads(path.read_text(encoding="utf-8")))


def load_instructions(episode_dir: str | Path) -> list[InstructionCase]:
    path = Path(episode_dir) / "instructions.jsonl"
    if not path.exists():
        raise DatasetError(f"{episode_dir}: missing instructions.jsonl")
    cases = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            cases.append(InstructionCase.from_dict(json.loads(line)))
    return cases


def load_episode(episode_dir: str | Path) -> list[FrameRecord]:
    episode_dir = Path(episode_dir)
    path = episode_dir / "episode.jsonl"
    if not path.exists():
        raise DatasetError(f"{episode_dir}: missing episode.jsonl")
    frames = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            pose = Pose.from_matrix(np.asarray(rec["pose"], dtype=np.float64).reshape(4, 4))
            k = rec["intrinsics"]
            intrinsics = CameraIntrinsics(
                k["fx"], k["fy"], k["cx"], k["cy"], int(k["width"]), int(k["height"])
            )
            detections = tuple(_detection_from_dict(d) for d in rec["detections"])
            frames.append(
                FrameRecord(
                    int(rec["frame"]), pose, intrinsics, detections, episode_dir / rec["depth_file"]
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DatasetError(f"{path}: line {lineno}: {exc}") from exc
    return frames

"""End-to-end grounding: stream observations into an aggregation session,
fuse instances for the referred class, classify, and phrase the query.

The same entry points also produce the oracle outcome for an episode by
running the discriminator on ground-truth instance graphs, which serves as
the reference for evaluation.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from pathlib import Path

from .aggregation import AggregationSession, InstanceRecord
from .config import PipelineConfig
from .discriminator import DialogueState, GroundingOutcome, classify, generate_query
from .episodes import FrameRecord, load_episode
from .geometry import bbox_cloud_arrays, voxelize_bev_arrays, CellObservation
from .graph import AttributePath, ObjectGraph, canonicalize
from .language import PhraseError, phrase_to_graph, realize
from .lexicon import Lexicon
from .oracle import oracle_classify, oracle_paths
from .simulator import (
    ErrorConfig,
    FrameContext,
    GenerationConfig,
    RoomSpec,
    apply_errors,
    caption_for,
    derive_relations,
    generate_room,
    object_graph,
    plan_trajectory,
)
from .render import gt_detections


def stream_seed_for(name: str) -> int:
    """Stable per-episode noise stream id derived from the directory name."""
    return zlib.crc32(name.encode("utf-8"))


def query_seed_for(base_seed: int, key: str) -> int:
    """Deterministic per-instruction seed shared by pipeline and oracle."""
    return (base_seed * 1000003 + zlib.crc32(key.encode("utf-8"))) & 0x7FFFFFFF


def build_observation_bank(
    config: PipelineConfig, bank_seed: int | None = None, n_frames: int = 10
) -> tuple:
    """Detections from a different seeded room, used by the false-positive model."""
    seed = (config.seed + 9999) if bank_seed is None else bank_seed
    gen = GenerationConfig(
        extents=(max(6.5, config.room_x), max(6.5, config.room_y), config.room_z),
        copies={
            "cup": 1,
            "book": 1,
            "lamp": 1,
            "bowl": 1,
            "laptop": 1,
            "plant": 1,
            "chair": 1,
            "armchair": 1,
            "sofa": 1,
            "table": 1,
            "desk": 1,
            "counter": 1,
        },
        wall_margin=config.wall_margin,
        min_separation=config.min_separation,
        floor_clearance=config.floor_clearance,
        support_inset=config.support_inset,
        max_attempts=config.max_attempts,
    )
    room = generate_room(seed, gen)
    relations = derive_relations(room, config.tau_near)
    captions = {o.id: caption_for(room, o, relations) for o in room.objects}
    intrinsics = config.intrinsics()
    entries = []
    for pose in plan_trajectory(room, max(4, n_frames), config.cam_height, config.traj_margin, config.look_height, config.look_frac):
        for det in gt_detections(room, pose, intrinsics, captions, config.min_pixels, config.max_range):
            entries.append((det.bbox, det.caption))
    return tuple(entries)


@dataclass
class StreamStats:
    frames: int = 0
    detections: int = 0
    skipped_captions: int = 0
    dropped_points: int = 0


def build_session(
    frames: list[FrameRecord],
    config: PipelineConfig,
    lexicon: Lexicon | None = None,
    noise: ErrorConfig | None = None,
    bank: tuple = (),
    stream_seed: int = 0,
) -> tuple[AggregationSession, StreamStats]:
    """Accumulate every detection of every frame into one session.

    Captions are parsed once each (cached); detections whose caption fails
    to parse are skipped and counted.
    """
    lexicon = lexicon or config.lexicon()
    session = AggregationSession(config.grid_spec())
    stats = StreamStats()
    graph_cache: dict[str, ObjectGraph | None] = {}
    for frame in frames:
        detections = list(frame.detections)
        if noise is not None:
            ctx = FrameContext(
                frame.index, frame.intrinsics.width, frame.intrinsics.height, bank, stream_seed
            )
            detections = apply_errors(detections, ctx, noise)
        if not detections:
            stats.frames += 1
            continue
        depth = frame.load_depth(max_range=config.max_range)
        for det in detections:
            graph = graph_cache.get(det.caption, Ellipsis)
            if graph is Ellipsis:
                try:
                    graph = phrase_to_graph(det.caption, lexicon)
                except PhraseError:
                    graph = None
                graph_cache[det.caption] = graph
            if graph is None:
                stats.skipped_captions += 1
                continue
            points, weights = bbox_cloud_arrays(
                det.bbox, depth, frame.intrinsics, frame.pose, config.sigma_frac, config.stride
            )
            cells, means, counts, dropped = voxelize_bev_arrays(points, weights, session.grid)
            stats.dropped_points += dropped
            if len(cells):
                session.observe(
                    graph,
                    [
                        CellObservation((int(c[0]), int(c[1])), float(m), int(n))
                        for c, m, n in zip(cells, means, counts)
                    ],
                )
            stats.detections += 1
        stats.frames += 1
    return session, stats


def _sorted_records(records: list[InstanceRecord]) -> list[InstanceRecord]:
    return sorted(records, key=lambda r: (realize(r.graph), r.centroid))


def ground_in_session(
    session: AggregationSession,
    instruction: str | ObjectGraph,
    config: PipelineConfig,
    lexicon: Lexicon | None = None,
    query_seed: int = 0,
) -> tuple[GroundingOutcome, ObjectGraph]:
    """Parse the instruction, fuse instances of its class, classify, phrase."""
    if isinstance(instruction, ObjectGraph):
        g = canonicalize(instruction)
    else:
        g = phrase_to_graph(instruction, lexicon or config.lexicon())
    records = session.fuse_across_graphs(g.root, config.region_dx, config.region_dy, config.gamma)
    records = _sorted_records(records)
    outcome = classify(g, records)
    outcome = outcome.with_query(generate_query(outcome, query_seed, config.templates()))
    return outcome, g


def ground_episode(
    episode_dir: str | Path,
    instruction: str,
    config: PipelineConfig,
    noise_preset: str = "none",
    lexicon: Lexicon | None = None,
    session: AggregationSession | None = None,
) -> tuple[GroundingOutcome, ObjectGraph]:
    """Full pipeline for one stored episode and one instruction."""
    episode_dir = Path(episode_dir)
    lexicon = lexicon or config.lexicon()
    if session is None:
        session = session_for_episode(episode_dir, config, noise_preset, lexicon)
    seed = query_seed_for(config.seed, f"{episode_dir.name}:{instruction}")
    return ground_in_session(session, instruction, config, lexicon, seed)


def session_for_episode(
    episode_dir: str | Path,
    config: PipelineConfig,
    noise_preset: str = "none",
    lexicon: Lexicon | None = None,
    bank: tuple | None = None,
) -> AggregationSession:
    episode_dir = Path(episode_dir)
    frames = load_episode(episode_dir)
    noise = None if noise_preset == "none" else config.error_config(noise_preset)
    if noise is not None and noise.p_fp > 0 and bank is None:
        bank = build_observation_bank(config)
    session, _ = build_session(
        frames,
        config,
        lexicon=lexicon,
        noise=noise,
        bank=bank or (),
        stream_seed=stream_seed_for(episode_dir.name),
    )
    return session


# -- oracle reference ---------------------------------------------------------


def oracle_records(
    room: RoomSpec, root: str, tau_near: float
) -> list[InstanceRecord]:
    """Ground-truth instance records for one class, ordered like the pipeline."""
    relations = derive_relations(room, tau_near)
    records = []
    for obj in room.objects_of(root):
        g = object_graph(room, obj, relations)
        cx, cy, _ = obj.centroid
        records.append(
            InstanceRecord(
                graph=g,
                regions=frozenset(),
                centroid=(cx, cy),
                score=1.0,
                contributors=((g, 1.0),),
            )
        )
    return _sorted_records(records)


def oracle_outcome(
    room: RoomSpec,
    g: ObjectGraph,
    config: PipelineConfig,
    query_seed: int,
) -> GroundingOutcome:
    """Reference outcome: the discriminator run on oracle instance graphs.

    The state and candidate sets come from the independent subset oracle;
    query phrasing shares the pipeline's templates and seed so a correct
    pipeline reproduces the reference text exactly.
    """
    g = canonicalize(g)
    records = oracle_records(room, g.root, config.tau_near)
    state, indices = oracle_classify(g, [r.graph for r in records])

    def diff_for(record: InstanceRecord) -> frozenset:
        want = oracle_paths(g)
        have = oracle_paths(record.graph)
        return frozenset(AttributePath(p) for p in want - have)

    if state is DialogueState.INFORM_MISSING:
        outcome = GroundingOutcome(state)
    elif state is DialogueState.CONFIRM:
        outcome = GroundingOutcome(state, matched=records[indices[0]])
    else:
        cands = tuple((records[i], diff_for(records[i])) for i in indices)
        outcome = GroundingOutcome(state, candidates=cands)
    return outcome.with_query(generate_query(outcome, query_seed, config.templates()))

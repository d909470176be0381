"""refground: grounds referred objects across multiple RGB-D views and asks
a clarifying question when the grounding is ambiguous, mismatched, or missing.
"""

from .aggregation import AggregationSession, GraphRegistry, InstanceRecord, merge_regions
from .config import PipelineConfig, load_config, save_config
from .discriminator import DialogueState, GroundingOutcome, classify, generate_query, resolve
from .geometry import (
    BoundingBox,
    CameraIntrinsics,
    DepthFrame,
    GridSpec,
    Pose,
    WeightedPoint,
    backproject,
    bbox_to_weighted_cloud,
    soft_mask_weight,
    to_world,
    voxelize_bev,
)
from .graph import (
    AttributeKind,
    AttributePath,
    ObjectGraph,
    attribute_paths,
    canonicalize,
    deserialize,
    graph_difference,
    graph_equal,
    serialize,
)
from .language import ExternalTagger, TagLabel, Token, parse_tags, phrase_to_graph, realize, tag, tokenize
from .lexicon import Lexicon, default_lexicon, load_lexicon, save_lexicon
from .metrics import bleu, corpus_bleu
from .simulator import (
    Detection,
    ErrorConfig,
    GenerationConfig,
    RoomSpec,
    SceneObject,
    apply_errors,
    derive_relations,
    emit_instructions,
    generate_room,
    plan_trajectory,
)
from .render import gt_detections, render_depth

__version__ = "0.1.0"

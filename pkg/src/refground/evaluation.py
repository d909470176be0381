"""Dataset construction and metric evaluation.

Reproduces the experiment protocols at desk scale: a templated parser
corpus with gold labels, counting datasets of seeded rooms per target
instance count, dialogue datasets with oracle-labeled instructions, and an
EvalReport aggregating instance-counting F1, state accuracy, query
accuracy, and corpus BLEU.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .discriminator import DialogueState, GroundingOutcome
from .episodes import DatasetError, dump_json_line, load_instructions, load_room, simulate_episode
from .graph import ObjectGraph, canonicalize, serialize
from .language import phrase_to_graph, tag, tokenize
from .lexicon import COLORS, MATERIALS, Lexicon
from .metrics import binary_f1, corpus_bleu, counting_f1, weighted_label_f1
from .pipeline import (
    build_observation_bank,
    ground_in_session,
    oracle_outcome,
    query_seed_for,
    session_for_episode,
)
from .simulator import PALETTE, GenerationConfig, GenerationError, generate_room

COUNTING_TARGETS = ("cup", "book", "lamp", "bowl", "laptop", "chair", "plant", "armchair")
DIALOGUE_MULTI = ("cup", "book", "lamp", "bowl", "chair")


# -- parser corpus ------------------------------------------------------------


@dataclass(frozen=True)
class CorpusCase:
    text: str
    graph: ObjectGraph
    labels: tuple[str, ...]
    re_type: str


_VERB_LABELS = {
    "bring me": ("O", "O"),
    "bring": ("O",),
    "take": ("O",),
    "fetch": ("O",),
    "pick up": ("O", "O"),
    "grab": ("O",),
    "find": ("O",),
    "get me": ("O", "O"),
    "please bring": ("O", "O"),
}

_CUES = {"is-on": "on", "is-near": "near", "is-at": "at"}


def build_parser_corpus(n: int, seed: int = 0) -> list[CorpusCase]:
    """Templated instructions cycling the three referring-expression types.

    Gold labels follow from the template structure, so the corpus doubles as
    a tagger benchmark with known spans.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 505]))
    verbs = sorted(_VERB_LABELS)
    classes = sorted(PALETTE)
    kinds = ("color", "material")
    cases: list[CorpusCase] = []
    article = lambda w: "an" if w[0] in "aeiou" else "a"

    for i in range(n):
        verb = verbs[int(rng.integers(len(verbs)))]
        cls = classes[int(rng.integers(len(classes)))]
        kind = kinds[int(rng.integers(2))]
        value = (COLORS if kind == "color" else MATERIALS)[
            int(rng.integers(len(COLORS if kind == "color" else MATERIALS)))
        ]
        cls_labels = ["B-r(g)"] + ["I-r(g)"] * (len(cls.split()) - 1)
        re_type = ("self", "self+rel", "bare")[i % 3]

        if re_type == "self":
            text = f"{verb} {article(value)} {value} {cls}"
            labels = list(_VERB_LABELS[verb]) + ["O", f"B-{kind}"] + cls_labels
            g = ObjectGraph.build(cls, [(kind, value)])
        elif re_type == "bare":
            text = f"{verb} {article(cls)} {cls}"
            labels = list(_VERB_LABELS[verb]) + ["O"] + cls_labels
            g = ObjectGraph.build(cls)
        else:
            rel = ("is-on", "is-near", "is-at")[int(rng.integers(3))]
            cue = _CUES[rel]
            landmark = classes[int(rng.integers(len(classes)))]
            if landmark == cls:
                landmark = classes[(classes.index(cls) + 1) % len(classes)]
            lm_labels = ["B-av_R"] + ["I-av_R"] * (len(landmark.split()) - 1)
            text = f"{verb} the {value} {cls} {cue} the {landmark}"
            labels = (
                list(_VERB_LABELS[verb])
                + ["O", f"B-{kind}"]
                + cls_labels
                + [f"B-{rel}", "O"]
                + lm_labels
            )
            g = ObjectGraph.build(cls, [(kind, value)], [(rel, ObjectGraph.build(landmark))])
        cases.append(CorpusCase(text, canonicalize(g), tuple(labels), re_type))
    return cases


def eval_parser_corpus(cases: list[CorpusCase], lexicon: Lexicon):
    """Graph match rate plus weighted tagger F1 against the gold labels."""
    matches = 0
    gold_seqs, pred_seqs = [], []
    for case in cases:
        tokens = tokenize(case.text)
        predicted = tag(tokens, lexicon)
        gold_seqs.append(list(case.labels))
        pred_seqs.append([str(lab) for lab in predicted])
        if phrase_to_graph(case.text, lexicon) == case.graph:
            matches += 1
    weighted, per_label = weighted_label_f1(gold_seqs, pred_seqs)
    return matches / len(cases), weighted, per_label


# -- dataset simulation -------------------------------------------------------


def _counting_generation(target: str, count: int, seed: int, config: PipelineConfig):
    """Room recipe for a counting episode: the target class in `count` copies,
    enough supporters, and a few distractor classes."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 606]))
    copies: dict[str, int] = {target: count}
    supporters = ["table", "desk", "counter", "dining table"]
    needed = count if PALETTE[target].supported else 2
    for sup in supporters[: max(2, needed)]:
        if sup != target:
            copies[sup] = max(copies.get(sup, 0), 1)
    pool = [c for c in sorted(PALETTE) if c not in copies and not PALETTE[c].supporter]
    picks = rng.permutation(len(pool))[:3]
    for i in picks:
        copies[pool[int(i)]] = 1
    return GenerationConfig(
        extents=(config.room_x, config.room_y, config.room_z),
        copies=copies,
        wall_margin=config.wall_margin,
        min_separation=config.min_separation,
        floor_clearance=config.floor_clearance,
        support_inset=config.support_inset,
        max_attempts=config.max_attempts,
    )


def _dialogue_generation(index: int, seed: int, config: PipelineConfig):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 707]))
    multi = DIALOGUE_MULTI[index % len(DIALOGUE_MULTI)]
    count = 2 + (index % 2)
    copies: dict[str, int] = {multi: count}
    supporters = ["table", "desk", "counter", "dining table"]
    needed = count if PALETTE[multi].supported else 2
    for sup in supporters[: max(2, needed)]:
        copies[sup] = 1
    pool = [c for c in sorted(PALETTE) if c not in copies and not PALETTE[c].supporter]
    picks = rng.permutation(len(pool))[:3]
    for i in picks:
        copies[pool[int(i)]] = 1
    return GenerationConfig(
        extents=(config.room_x, config.room_y, config.room_z),
        copies=copies,
        wall_margin=config.wall_margin,
        min_separation=config.min_separation,
        floor_clearance=config.floor_clearance,
        support_inset=config.support_inset,
        max_attempts=config.max_attempts,
    )


def simulate_counting_dataset(
    out_dir: str | Path,
    config: PipelineConfig,
    rooms_per_count: int = 5,
    counts: tuple[int, ...] = (1, 2, 3),
) -> Path:
    """Seeded rooms cycling target classes for each instance count."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    index = 0
    for count in counts:
        for r in range(rooms_per_count):
            target = COUNTING_TARGETS[r % len(COUNTING_TARGETS)]
            seed = config.seed * 100000 + count * 1000 + r
            room = _generate_with_retries(seed, target, count, config)
            name = f"episode_{index:05d}"
            simulate_episode(
                out / name,
                room,
                config.intrinsics(),
                config.n_waypoints,
                config.cam_height,
                config.traj_margin,
                config.look_height,
                config.tau_near,
                config.min_pixels,
                config.max_range,
                config.look_frac,
            )
            manifest.append(
                {"dir": name, "target": target, "count": count, "seed": seed, "kind": "counting"}
            )
            index += 1
    (out / "manifest.jsonl").write_text(
        "\n".join(dump_json_line(m) for m in manifest) + "\n", encoding="utf-8"
    )
    return out


def _generate_with_retries(seed: int, target: str, count: int, config: PipelineConfig):
    last: GenerationError | None = None
    for bump in range(8):
        try:
            return generate_room(seed + bump * 97, _counting_generation(target, count, seed + bump * 97, config))
        except GenerationError as exc:
            last = exc
    raise GenerationError(f"target {target} x{count}: {last}")


def simulate_dialogue_dataset(
    out_dir: str | Path, config: PipelineConfig, n_rooms: int = 12
) -> Path:
    """Rooms with one multi-copy class plus distractors, for end-to-end eval."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for index in range(n_rooms):
        seed = config.seed * 100000 + 50000 + index
        last: GenerationError | None = None
        room = None
        for bump in range(8):
            try:
                room = generate_room(seed + bump * 97, _dialogue_generation(index, seed + bump * 97, config))
                break
            except GenerationError as exc:
                last = exc
        if room is None:
            raise GenerationError(f"dialogue room {index}: {last}")
        name = f"episode_{index:05d}"
        simulate_episode(
            out / name,
            room,
            config.intrinsics(),
            config.n_waypoints,
            config.cam_height,
            config.traj_margin,
            config.look_height,
            config.tau_near,
            config.min_pixels,
            config.max_range,
            config.look_frac,
        )
        manifest.append({"dir": name, "seed": seed, "kind": "dialogue"})
    (out / "manifest.jsonl").write_text(
        "\n".join(dump_json_line(m) for m in manifest) + "\n", encoding="utf-8"
    )
    return out


def load_manifest(dataset_dir: str | Path) -> list[dict]:
    path = Path(dataset_dir) / "manifest.jsonl"
    if not path.exists():
        raise DatasetError(f"{dataset_dir}: missing manifest.jsonl")
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


# -- evaluation ---------------------------------------------------------------


@dataclass
class CountingResult:
    per_count: dict[int, float] = field(default_factory=dict)
    average: float = 0.0
    records: list[dict] = field(default_factory=list)


def eval_counting(
    dataset_dir: str | Path, config: PipelineConfig, noise_preset: str = "none"
) -> CountingResult:
    dataset_dir = Path(dataset_dir)
    manifest = [m for m in load_manifest(dataset_dir) if m.get("kind") == "counting"]
    if not manifest:
        raise DatasetError(f"{dataset_dir}: no counting episodes in manifest")
    lexicon = config.lexicon()
    bank = build_observation_bank(config) if _needs_bank(config, noise_preset) else ()
    result = CountingResult()
    buckets: dict[int, list[tuple[int, int]]] = {}
    for entry in manifest:
        episode_dir = dataset_dir / entry["dir"]
        session = session_for_episode(episode_dir, config, noise_preset, lexicon, bank=bank)
        records = session.fuse_across_graphs(
            entry["target"], config.region_dx, config.region_dy, config.gamma
        )
        predicted = len(records)
        true = int(entry["count"])
        buckets.setdefault(true, []).append((true, predicted))
        result.records.append(
            {
                "episode": entry["dir"],
                "target": entry["target"],
                "true": true,
                "predicted": predicted,
            }
        )
    result.per_count = {count: counting_f1(cases) for count, cases in sorted(buckets.items())}
    result.average = sum(result.per_count.values()) / len(result.per_count)
    return result


def _needs_bank(config: PipelineConfig, noise_preset: str) -> bool:
    return noise_preset != "none" and config.error_config(noise_preset).p_fp > 0


def _candidate_signature(outcome: GroundingOutcome) -> tuple:
    if outcome.state is DialogueState.CONFIRM:
        assert outcome.matched is not None
        return (outcome.state.value, (serialize(outcome.matched.graph),))
    graphs = sorted(serialize(record.graph) for record, _ in outcome.candidates)
    return (outcome.state.value, tuple(graphs))


@dataclass
class DialogueResult:
    aa_f1: float = 0.0
    state_accuracy: float = 0.0
    qa: float = 0.0
    bleu: float = 0.0
    n_pairs: int = 0
    confusion: dict[str, dict[str, int]] = field(default_factory=dict)
    records: list[dict] = field(default_factory=list)


def eval_dialogue(
    dataset_dir: str | Path, config: PipelineConfig, noise_preset: str = "none"
) -> DialogueResult:
    dataset_dir = Path(dataset_dir)
    manifest = [m for m in load_manifest(dataset_dir) if m.get("kind") == "dialogue"]
    if not manifest:
        raise DatasetError(f"{dataset_dir}: no dialogue episodes in manifest")
    lexicon = config.lexicon()
    bank = build_observation_bank(config) if _needs_bank(config, noise_preset) else ()
    result = DialogueResult()
    ambiguity_pairs: list[tuple[bool, bool]] = []
    bleu_pairs: list[tuple[list[str], list[str]]] = []
    state_hits = 0
    qa_hits = 0
    for entry in manifest:
        episode_dir = dataset_dir / entry["dir"]
        room = load_room(episode_dir)
        instructions = load_instructions(episode_dir)
        session = session_for_episode(episode_dir, config, noise_preset, lexicon, bank=bank)
        for case in instructions:
            seed = query_seed_for(config.seed, f"{entry['dir']}:{case.text}")
            predicted, g = ground_in_session(session, case.text, config, lexicon, seed)
            reference = oracle_outcome(room, g, config, seed)
            state_match = predicted.state is reference.state
            qa_match = _candidate_signature(predicted) == _candidate_signature(reference)
            state_hits += int(state_match)
            qa_hits += int(qa_match)
            ambiguity_pairs.append(
                (
                    predicted.state is DialogueState.INFORM_AMBIGUITY,
                    reference.state is DialogueState.INFORM_AMBIGUITY,
                )
            )
            bleu_pairs.append(
                (
                    [t.text for t in tokenize(predicted.query)],
                    [t.text for t in tokenize(reference.query)],
                )
            )
            result.confusion.setdefault(reference.state.value, {}).setdefault(
                predicted.state.value, 0
            )
            result.confusion[reference.state.value][predicted.state.value] += 1
            result.records.append(
                {
                    "episode": entry["dir"],
                    "text": case.text,
                    "predicted_state": predicted.state.value,
                    "oracle_state": reference.state.value,
                    "qa_match": qa_match,
                    "predicted_query": predicted.query,
                    "reference_query": reference.query,
                }
            )
            result.n_pairs += 1
    if result.n_pairs:
        result.state_accuracy = state_hits / result.n_pairs
        result.qa = qa_hits / result.n_pairs
    result.aa_f1 = binary_f1(ambiguity_pairs)
    result.bleu = corpus_bleu(bleu_pairs)
    return result


# -- report -------------------------------------------------------------------


@dataclass
class EvalReport:
    config_echo: dict
    noise_preset: str
    counting: CountingResult | None = None
    dialogue: DialogueResult | None = None

    def to_dict(self) -> dict:
        out: dict = {"config": self.config_echo, "noise": self.noise_preset}
        if self.counting is not None:
            out["counting"] = {
                "per_count_f1": {str(k): v for k, v in self.counting.per_count.items()},
                "average_f1": self.counting.average,
                "records": self.counting.records,
            }
        if self.dialogue is not None:
            out["dialogue"] = {
                "aa_f1": self.dialogue.aa_f1,
                "state_accuracy": self.dialogue.state_accuracy,
                "qa": self.dialogue.qa,
                "bleu": self.dialogue.bleu,
                "n_pairs": self.dialogue.n_pairs,
                "confusion": self.dialogue.confusion,
                "records": self.dialogue.records,
            }
        return out

    def render_table(self) -> str:
        lines = [f"noise preset: {self.noise_preset}"]
        if self.counting is not None:
            lines.append("instance counting F1")
            header = "  count   " + "".join(f"{k:>8}" for k in sorted(self.counting.per_count))
            lines.append(header + "     avg")
            lines.append(
                "  F1      "
                + "".join(f"{self.counting.per_count[k]:>8.3f}" for k in sorted(self.counting.per_count))
                + f"{self.counting.average:>8.3f}"
            )
        if self.dialogue is not None:
            lines.append("dialogue metrics")
            lines.append(f"{'  AA (ambiguity F1)':<28}{self.dialogue.aa_f1:>8.3f}")
            lines.append(f"{'  state accuracy (4-way)':<28}{self.dialogue.state_accuracy:>8.3f}")
            lines.append(f"{'  QA (structural)':<28}{self.dialogue.qa:>8.3f}")
            lines.append(f"{'  BLEU':<28}{self.dialogue.bleu:>8.3f}")
            lines.append(f"{'  pairs':<28}{self.dialogue.n_pairs:>8d}")
        return "\n".join(lines)


def evaluate_dataset(
    dataset_dir: str | Path, config: PipelineConfig, noise_preset: str = "none"
) -> EvalReport:
    manifest = load_manifest(dataset_dir)
    kinds = {m.get("kind") for m in manifest}
    report = EvalReport(config_echo=config.to_dict(), noise_preset=noise_preset)
    if "counting" in kinds:
        report.counting = eval_counting(dataset_dir, config, noise_preset)
    if "dialogue" in kinds:
        report.dialogue = eval_dialogue(dataset_dir, config, noise_preset)
    return report


def write_report(report: EvalReport, out_path: str | Path) -> None:
    out_path = Path(out_path)
    out_path.write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    out_path.with_suffix(".txt").write_text(report.render_table() + "\n", encoding="utf-8")

"""Closed vocabulary shared by the language pipeline and the scene simulator.

One vocabulary file drives both sides: the tagger recognizes exactly the
classes, attribute values, and relation cues listed here, and the simulator
only names objects with the same tokens, so every generated caption and
instruction is parseable by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping


class LexiconError(ValueError):
    """Malformed lexicon definition or file."""


# Default vocabulary. Value sets are disjoint across kinds and from the
# class names (token-level ambiguity would break deterministic tagging).
OBJECT_CLASSES = (
    "cup",
    "book",
    "laptop",
    "bowl",
    "plant",
    "lamp",
    "chair",
    "armchair",
    "sofa",
    "table",
    "dining table",
    "desk",
    "counter",
)
COLORS = ("red", "black", "white", "blue", "green", "yellow", "orange")
MATERIALS = ("plastic", "wooden", "metal", "glass", "ceramic")
RELATION_CUES = {
    "on": "is-on",
    "on top of": "is-on",
    "near": "is-near",
    "beside": "is-near",
    "next to": "is-near",
    "at": "is-at",
}
STOPWORDS = ("a", "an", "the", "please", "me", "my", "your", "some", "that", "this")
VERBS = ("bring", "take", "fetch", "grab", "find", "get", "pick up", "pick", "place", "give")


@dataclass(frozen=True)
class Lexicon:
    """Token tables used by the deterministic tagger."""

    object_classes: frozenset[str]
    self_values: Mapping[str, frozenset[str]]
    relation_cues: Mapping[str, str]
    stopwords: frozenset[str] = frozenset()
    verbs: frozenset[str] = frozenset()

    def __post_init__(self):
        all_values: set[str] = set()
        for kind, values in self.self_values.items():
            if kind != kind.lower() or kind.startswith("is-"):
                raise LexiconError(f"self attribute kind must be lowercase, not relational: {kind!r}")
            overlap = all_values & set(values)
            if overlap:
                raise LexiconError(f"value tokens shared across self kinds: {sorted(overlap)}")
            all_values |= set(values)
        for cue, kind in self.relation_cues.items():
            if cue != cue.lower():
                raise LexiconError(f"relation cue must be lowercase: {cue!r}")
            if not kind.startswith("is-"):
                raise LexiconError(f"relation cue {cue!r} maps to non-relational kind {kind!r}")

    def value_kind(self, token: str) -> str | None:
        for kind, values in self.self_values.items():
            if token in values:
                return kind
        return None


def default_lexicon() -> Lexicon:
    return Lexicon(
        object_classes=frozenset(OBJECT_CLASSES),
        self_values={"color": frozenset(COLORS), "material": frozenset(MATERIALS)},
        relation_cues=dict(RELATION_CUES),
        stopwords=frozenset(STOPWORDS),
        verbs=frozenset(VERBS),
    )


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    """Write the key-value lexicon file (comma-separated token lists)."""
    lines = ["# refground lexicon", f"object_classes = {', '.join(sorted(lexicon.object_classes))}"]
    for kind in sorted(lexicon.self_values):
        lines.append(f"self.{kind} = {', '.join(sorted(lexicon.self_values[kind]))}")
    by_kind: dict[str, list[str]] = {}
    for cue, kind in lexicon.relation_cues.items():
        by_kind.setdefault(kind, []).append(cue)
    for kind in sorted(by_kind):
        lines.append(f"rel.{kind} = {', '.join(sorted(by_kind[kind]))}")
    lines.append(f"stopwords = {', '.join(sorted(lexicon.stopwords))}")
    lines.append(f"verbs = {', '.join(sorted(lexicon.verbs))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_lexicon(path: str | Path) -> Lexicon:
    """Read a lexicon file written by save_lexicon (or by hand)."""
    object_classes: set[str] = set()
    self_values: dict[str, frozenset[str]] = {}
    relation_cues: dict[str, str] = {}
    stopwords: set[str] = set()
    verbs: set[str] = set()
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise LexiconError(f"{path}: line {lineno}: expected 'key = tokens'")
        key, _, value = line.partition("=")
        key = key.strip()
        tokens = [t.strip().lower() for t in value.split(",") if t.strip()]
        if key == "object_classes":
            object_classes.update(tokens)
        elif key.startswith("self."):
            self_values[key[5:]] = frozenset(tokens)
        elif key.startswith("rel."):
            kind = key[4:]
            for cue in tokens:
                relation_cues[cue] = kind
        elif key == "stopwords":
            stopwords.update(tokens)
        elif key == "verbs":
            verbs.update(tokens)
        else:
            raise LexiconError(f"{path}: line {lineno}: unknown key {key!r}")
    if not object_classes:
        raise LexiconError(f"{path}: no object_classes defined")
    return Lexicon(
        object_classes=frozenset(object_classes),
        self_values=self_values,
        relation_cues=relation_cues,
        stopwords=frozenset(stopwords),
        verbs=frozenset(verbs),
    )

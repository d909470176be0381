"""Grounding outcome classification and disambiguation query generation.

Given the input graph parsed from the instruction and the unique instance
records produced by aggregation, classify the situation into one of four
dialogue states and fill the matching question template:

    confirm           [random acknowledgement phrase]
    inform-mismatch   I found one [description] [random mismatch-suffix]
    inform-ambiguity  I found one [description]+ [, and]+ [random wh-suffix]
    inform-missing    I could not find that.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .aggregation import InstanceRecord
from .graph import (
    AttributePath,
    GraphStructureError,
    ObjectGraph,
    canonicalize,
    graph_difference,
    to_dict,
)
from .language import realize

MISSING_QUERY = "I could not find that."

DEFAULT_MISMATCH_SUFFIXES = ("— is that okay?", "— should I take it instead?")
DEFAULT_WH_SUFFIXES = ("Which one did you mean?", "Which one should I take?")
DEFAULT_ACKNOWLEDGEMENTS = ("Okay.", "Sure.", "On it.")


class DialogueState(Enum):
    CONFIRM = "confirm"
    INFORM_MISMATCH = "inform-mismatch"
    INFORM_AMBIGUITY = "inform-ambiguity"
    INFORM_MISSING = "inform-missing"


@dataclass(frozen=True)
class QueryTemplates:
    mismatch_suffixes: tuple[str, ...] = DEFAULT_MISMATCH_SUFFIXES
    wh_suffixes: tuple[str, ...] = DEFAULT_WH_SUFFIXES
    acknowledgements: tuple[str, ...] = DEFAULT_ACKNOWLEDGEMENTS


@dataclass(frozen=True)
class GroundingOutcome:
    state: DialogueState
    matched: InstanceRecord | None = None
    candidates: tuple[tuple[InstanceRecord, frozenset[AttributePath]], ...] = ()
    query: str = ""

    def __post_init__(self):
        if self.state is DialogueState.CONFIRM and self.matched is None:
            raise ValueError("confirm outcome requires a matched instance")
        if self.state is DialogueState.INFORM_MISSING and self.candidates:
            raise ValueError("missing outcome carries no candidates")

    def with_query(self, query: str) -> "GroundingOutcome":
        return GroundingOutcome(self.state, self.matched, self.candidates, query)


def classify(g: ObjectGraph, instances: list[InstanceRecord]) -> GroundingOutcome:
    """Decide the dialogue state from the per-instance difference sets.

    The difference of the input graph against each instance graph lists the
    requested attributes that instance lacks. Exactly one empty difference
    grounds the instruction (confirm); several empty differences are
    ambiguous among the exact matches; no empty difference means mismatch
    when a single instance exists and ambiguity otherwise; no instance at
    all is the missing state.
    """
    g = canonicalize(g)
    for record in instances:
        if record.graph.root != g.root:
            raise GraphStructureError(
                f"instance root {record.graph.root!r} does not match input root {g.root!r}"
            )
    if not instances:
        return GroundingOutcome(DialogueState.INFORM_MISSING)

    diffs = [graph_difference(g, record.graph) for record in instances]
    exact = [i for i, d in enumerate(diffs) if not d]

    if len(exact) == 1:
        idx = exact[0]
        return GroundingOutcome(DialogueState.CONFIRM, matched=instances[idx])
    if len(exact) >= 2:
        cands = tuple((instances[i], diffs[i]) for i in exact)
        return GroundingOutcome(DialogueState.INFORM_AMBIGUITY, candidates=cands)
    if len(instances) == 1:
        return GroundingOutcome(
            DialogueState.INFORM_MISMATCH, candidates=((instances[0], diffs[0]),)
        )
    cands = tuple((instances[i], diffs[i]) for i in range(len(instances)))
    return GroundingOutcome(DialogueState.INFORM_AMBIGUITY, candidates=cands)


def _strip_article(text: str) -> str:
    first, _, rest = text.partition(" ")
    return rest if first in ("a", "an") and rest else text


def _descriptions(candidates) -> list[str]:
    """Realize each candidate minus its leading article (the templates supply
    the determiner "one"); identical texts get a centroid location hint."""
    texts = [_strip_article(realize(record.graph)) for record, _ in candidates]
    dupes = {t for t in texts if texts.count(t) > 1}
    out = []
    for (record, _), text in zip(candidates, texts):
        if text in dupes:
            x, y = record.centroid
            text = f"{text} (near {x:.1f}, {y:.1f} meters)"
        out.append(text)
    return out


def generate_query(
    outcome: GroundingOutcome,
    rng_seed: int,
    templates: QueryTemplates | None = None,
) -> str:
    """Fill the state's question template; deterministic under the seed."""
    templates = templates or QueryTemplates()
    rng = random.Random(rng_seed)
    if outcome.state is DialogueState.INFORM_MISSING:
        return MISSING_QUERY
    if outcome.state is DialogueState.CONFIRM:
        return templates.acknowledgements[rng.randrange(len(templates.acknowledgements))]
    if outcome.state is DialogueState.INFORM_MISMATCH:
        suffix = templates.mismatch_suffixes[rng.randrange(len(templates.mismatch_suffixes))]
        desc = _descriptions(outcome.candidates)[0]
        return f"I found one {desc} {suffix}"
    suffix = templates.wh_suffixes[rng.randrange(len(templates.wh_suffixes))]
    listed = ", and ".join(f"one {d}" for d in _descriptions(outcome.candidates))
    return f"I found {listed}. {suffix}"


def resolve(
    g: ObjectGraph,
    instances: list[InstanceRecord],
    rng_seed: int,
    templates: QueryTemplates | None = None,
) -> GroundingOutcome:
    """classify + generate_query in one step."""
    outcome = classify(g, instances)
    return outcome.with_query(generate_query(outcome, rng_seed, templates))


# -- outcome records ---------------------------------------------------------


def _record_dict(record: InstanceRecord) -> dict:
    return {
        "graph": to_dict(record.graph),
        "centroid": [record.centroid[0], record.centroid[1]],
        "score": record.score,
        "alternates": [to_dict(g) for g, _ in record.contributors[1:]],
    }


def outcome_to_dict(outcome: GroundingOutcome) -> dict:
    return {
        "state": outcome.state.value,
        "query": outcome.query,
        "matched": _record_dict(outcome.matched) if outcome.matched else None,
        "candidates": [
            {
                **_record_dict(record),
                "difference": sorted([list(step) for step in p.path] for p in diff),
            }
            for record, diff in outcome.candidates
        ],
    }


def write_outcome(outcome: GroundingOutcome, path: str | Path) -> None:
    Path(path).write_text(json.dumps(outcome_to_dict(outcome), sort_keys=True) + "\n", "utf-8")

from __future__ import annotations

import numpy as np
import pytest

from refground.graph import ObjectGraph, canonicalize
from refground.lexicon import COLORS, MATERIALS, OBJECT_CLASSES, default_lexicon


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


def random_expressible_graph(rng: np.random.Generator, depth: int = 0, budget: int = 3) -> ObjectGraph:
    """A random graph the lexicon can express unambiguously.

    Depth <= 2 relational nesting, <= 3 attributes total, and at most one
    relational edge per node so the realized phrase parses back uniquely.
    """
    classes = sorted(OBJECT_CLASSES)
    cls = classes[int(rng.integers(len(classes)))]
    self_attrs = []
    if budget > 0 and rng.random() < 0.7:
        kind = "color" if rng.random() < 0.5 else "material"
        values = sorted(COLORS if kind == "color" else MATERIALS)
        self_attrs.append((kind, values[int(rng.integers(len(values)))]))
        budget -= 1
    rel_attrs = []
    if depth < 2 and budget > 0 and rng.random() < 0.55:
        child = random_expressible_graph(rng, depth + 1, budget - 1)
        while child.root == cls:
            child = random_expressible_graph(rng, depth + 1, budget - 1)
        relation = ("is-on", "is-near", "is-at")[int(rng.integers(3))]
        rel_attrs.append((relation, child))
    return canonicalize(ObjectGraph.build(cls, self_attrs, rel_attrs))

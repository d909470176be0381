"""Multi-view evidence aggregation on a sparse BEV occupancy grid.

Every distinct canonical object graph observed in the stream gets an
auto-incremented id. Two hash maps per id mirror the accumulator design:
object id -> occupied cells, and cell -> (running mean weight, detection
frequency). Region scoring normalizes summed cell weights into a
distribution over fixed-size regions, greedy non-maximal merging groups
neighboring above-threshold regions into instances, and fusion overlays
the per-graph instance maps to deduplicate graphs that describe the same
physical object.

Accumulation is single-writer: one session per stream. Read-only queries
(region_scores and onward) are safe once accumulation stops.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .geometry import CellObservation, GridSpec
from .graph import ObjectGraph, canonicalize, from_dict, to_dict


class RegistryError(KeyError):
    """Unknown object id."""


class SessionFormatError(ValueError):
    """Session dump text is malformed."""


class GraphRegistry:
    """Bijection between canonical object graphs and auto-incremental ids."""

    def __init__(self):
        self._ids: dict[ObjectGraph, int] = {}
        self._graphs: list[ObjectGraph] = []

    def register(self, g: ObjectGraph) -> int:
        g = canonicalize(g)
        oid = self._ids.get(g)
        if oid is None:
            oid = len(self._graphs)
            self._ids[g] = oid
            self._graphs.append(g)
        return oid

    def graph(self, oid: int) -> ObjectGraph:
        if not 0 <= oid < len(self._graphs):
            raise RegistryError(oid)
        return self._graphs[oid]

    def oids_for_root(self, root: str) -> list[int]:
        root = root.lower()
        return [i for i, g in enumerate(self._graphs) if g.root == root]

    def items(self):
        return enumerate(self._graphs)

    def __len__(self):
        return len(self._graphs)

    def __contains__(self, oid: int) -> bool:
        return 0 <= oid < len(self._graphs)


@dataclass(frozen=True, eq=False)
class RegionGrid:
    """Normalized occupancy scores over dx-by-dy cell regions.

    scores[rx, ry] approximates the probability that an instance of the
    graph's root class occupies region (rx, ry); scores sum to 1 whenever
    any mass exists.
    """

    dx: int
    dy: int
    scores: np.ndarray
    total_mass: float


@dataclass(frozen=True)
class InstanceGroup:
    """One merged group of regions for a single object graph."""

    label: int
    regions: frozenset[tuple[int, int]]
    score: float
    centroid: tuple[float, float]
    accumulated_weight: float


@dataclass(frozen=True)
class InstanceRecord:
    """A unique grounded instance after cross-graph fusion."""

    graph: ObjectGraph
    regions: frozenset[tuple[int, int]]
    centroid: tuple[float, float]
    score: float
    contributors: tuple[tuple[ObjectGraph, float], ...]


_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def merge_regions(grid: RegionGrid, gamma: float) -> dict[tuple[int, int], int]:
    """Greedy non-maximal region merging with explicit instance labels.

    Regions are visited in descending score order; a region scoring below
    gamma is zeroed out and stays unlabeled. A surviving region adopts the
    label of an already-labeled 8-neighbor, else it starts a new label;
    when it touches several labeled groups those groups are united (the
    score-propagation of the greedy merge read as label propagation).
    Surviving regions therefore partition into connected groups, one per
    instance, with labels numbered by each group's best-scoring region.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    nx, ny = grid.scores.shape
    order = sorted(
        ((rx, ry) for rx in range(nx) for ry in range(ny)),
        key=lambda r: (-grid.scores[r], r),
    )
    parent: dict[tuple[int, int], tuple[int, int]] = {}

    def find(r):
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        return r

    for region in order:
        if grid.scores[region] < gamma:
            continue  # zeroed: below threshold, never labeled
        parent[region] = region
        for dx, dy in _NEIGHBORS:
            nb = (region[0] + dx, region[1] + dy)
            if nb in parent:
                ra, rb = find(nb), find(region)
                if ra != rb:
                    parent[rb] = ra
    position = {region: i for i, region in enumerate(order)}
    first_member: dict[tuple[int, int], tuple[int, int]] = {}
    for region in parent:
        root = find(region)
        if root not in first_member or position[region] < position[first_member[root]]:
            first_member[root] = region
    ordered_roots = sorted(first_member, key=lambda root: position[first_member[root]])
    label_of_root = {root: i for i, root in enumerate(ordered_roots)}
    return {region: label_of_root[find(region)] for region in parent}


class AggregationSession:
    """Accumulates per-graph BEV evidence for one observation stream."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.registry = GraphRegistry()
        # oid -> {cell -> (running mean weight, frame frequency)}
        self._occupancy: dict[int, dict[tuple[int, int], tuple[float, int]]] = {}

    # -- accumulation ------------------------------------------------------

    def register_graph(self, g: ObjectGraph) -> int:
        oid = self.registry.register(g)
        self._occupancy.setdefault(oid, {})
        return oid

    def accumulate(self, oid: int, cells: Iterable[CellObservation]) -> None:
        """Fold one frame's cell observations into the running means."""
        if oid not in self.registry:
            raise RegistryError(oid)
        store = self._occupancy.setdefault(oid, {})
        for obs in cells:
            cell = (int(obs.cell[0]), int(obs.cell[1]))
            prev = store.get(cell)
            if prev is None:
                store[cell] = (float(obs.weight), 1)
            else:
                w, freq = prev
                store[cell] = ((w * freq + float(obs.weight)) / (freq + 1), freq + 1)

    def observe(self, g: ObjectGraph, cells: Iterable[CellObservation]) -> int:
        oid = self.register_graph(g)
        self.accumulate(oid, cells)
        return oid

    # -- queries -----------------------------------------------------------

    def cell_map(self, oid: int) -> dict[tuple[int, int], tuple[float, int]]:
        if oid not in self.registry:
            raise RegistryError(oid)
        return dict(self._occupancy.get(oid, {}))

    def occupied_cells(self, oid: int) -> frozenset[tuple[int, int]]:
        return frozenset(self._occupancy.get(oid, {}))

    def region_scores(self, oid: int, dx: int, dy: int) -> RegionGrid:
        """Sum cell weights per region and normalize over the whole grid.

        The grid is zero-padded so dx, dy divide its dimensions. A graph
        with no mass yields an all-zero grid (missing object).
        """
        if dx < 1 or dy < 1:
            raise ValueError("region dimensions must be >= 1")
        if oid not in self.registry:
            raise RegistryError(oid)
        nx = -(-self.grid.d1 // dx)
        ny = -(-self.grid.d2 // dy)
        sums = np.zeros((nx, ny))
        for (cx, cy), (w, _freq) in self._occupancy.get(oid, {}).items():
            sums[cx // dx, cy // dy] += w
        total = float(sums.sum())
        scores = sums / total if total > 0 else sums
        return RegionGrid(dx, dy, scores, total)

    def count_instances(self, oid: int, dx: int, dy: int, gamma: float) -> list[InstanceGroup]:
        """Region scoring followed by greedy merging; one group per instance."""
        grid = self.region_scores(oid, dx, dy)
        if grid.total_mass <= 0:
            return []
        labels = merge_regions(grid, gamma)
        by_label: dict[int, list[tuple[int, int]]] = {}
        for region, label in labels.items():
            by_label.setdefault(label, []).append(region)
        groups = []
        for label in sorted(by_label):
            regions = frozenset(by_label[label])
            centroid, acc = self._group_centroid(oid, regions, dx, dy)
            score = float(sum(grid.scores[r] for r in regions))
            groups.append(InstanceGroup(label, regions, score, centroid, acc))
        return groups

    def _group_cells(self, oid: int, regions: frozenset[tuple[int, int]], dx: int, dy: int):
        for cell, stat in self._occupancy.get(oid, {}).items():
            if (cell[0] // dx, cell[1] // dy) in regions:
                yield cell, stat

    def _group_centroid(self, oid, regions, dx, dy) -> tuple[tuple[float, float], float]:
        """Accumulated-weight-weighted mean of member cell centers, in meters."""
        wx = wy = acc = 0.0
        for cell, (w, freq) in self._group_cells(oid, regions, dx, dy):
            mass = w * freq
            cxm, cym = self.grid.cell_center(cell)
            wx += mass * cxm
            wy += mass * cym
            acc += mass
        if acc <= 0:
            return (0.0, 0.0), 0.0
        return (wx / acc, wy / acc), acc

    def fuse_across_graphs(
        self, root: str, dx: int, dy: int, gamma: float
    ) -> list[InstanceRecord]:
        """Overlay instance maps of every graph sharing the root class.

        Per-graph instance groups are max-pooled region-wise: groups from
        different graphs that occupy at least one common region describe
        the same physical object and are united. Each fused record keeps
        the contributing graph with the highest accumulated weight as its
        instance graph, the rest as alternates.
        """
        oids = self.registry.oids_for_root(root)
        members: list[tuple[int, InstanceGroup]] = []
        for oid in oids:
            for group in self.count_instances(oid, dx, dy, gamma):
                members.append((oid, group))
        if not members:
            return []

        # union-find over groups sharing any region
        parent = list(range(len(members)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        region_owner: dict[tuple[int, int], int] = {}
        for idx, (_, group) in enumerate(members):
            for region in group.regions:
                if region in region_owner:
                    ra, rb = find(region_owner[region]), find(idx)
                    if ra != rb:
                        parent[rb] = ra
                else:
                    region_owner[region] = idx

        clusters: dict[int, list[int]] = {}
        for idx in range(len(members)):
            clusters.setdefault(find(idx), []).append(idx)

        # pooled score per region = max over contributing graphs
        pooled: dict[tuple[int, int], float] = {}
        grids = {oid: self.region_scores(oid, dx, dy) for oid in oids}
        for oid, group in members:
            for region in group.regions:
                val = float(grids[oid].scores[region])
                pooled[region] = max(pooled.get(region, 0.0), val)

        records = []
        for indices in clusters.values():
            regions = frozenset().union(*(members[i][1].regions for i in indices))
            per_oid: dict[int, float] = {}
            wx = wy = total = 0.0
            for i in indices:
                oid, group = members[i]
                per_oid[oid] = per_oid.get(oid, 0.0) + group.accumulated_weight
                wx += group.centroid[0] * group.accumulated_weight
                wy += group.centroid[1] * group.accumulated_weight
                total += group.accumulated_weight
            contributors = tuple(
                (self.registry.graph(oid), weight)
                for oid, weight in sorted(per_oid.items(), key=lambda kv: (-kv[1], kv[0]))
            )
            records.append(
                InstanceRecord(
                    graph=contributors[0][0],
                    regions=regions,
                    centroid=(wx / total, wy / total) if total > 0 else (0.0, 0.0),
                    score=float(sum(pooled[r] for r in regions)),
                    contributors=contributors,
                )
            )
        records.sort(key=lambda r: (min(r.regions), r.centroid))
        return records

    # -- persistence -------------------------------------------------------

    def dump(self, path: str | Path) -> None:
        """Write the session as round-trippable JSON (registry, maps, grid)."""
        payload = {
            "grid": {
                "origin_x": self.grid.origin_x,
                "origin_y": self.grid.origin_y,
                "cell_size": self.grid.cell_size,
                "d1": self.grid.d1,
                "d2": self.grid.d2,
            },
            "graphs": [{"oid": oid, "graph": to_dict(g)} for oid, g in self.registry.items()],
            "cells": {
                str(oid): [
                    [cell[0], cell[1], stat[0], stat[1]]
                    for cell, stat in sorted(self._occupancy.get(oid, {}).items())
                ]
                for oid, _ in self.registry.items()
            },
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "AggregationSession":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SessionFormatError(f"{path}: invalid JSON: {exc.msg}") from exc
        try:
            g = payload["grid"]
            session = cls(GridSpec(g["origin_x"], g["origin_y"], g["cell_size"], g["d1"], g["d2"]))
            entries = sorted(payload["graphs"], key=lambda e: e["oid"])
            for expected, entry in enumerate(entries):
                if entry["oid"] != expected:
                    raise SessionFormatError(f"{path}: non-contiguous oid {entry['oid']}")
                session.register_graph(from_dict(entry["graph"]))
            for oid_text, cells in payload["cells"].items():
                oid = int(oid_text)
                store = session._occupancy.setdefault(oid, {})
                for cx, cy, w, freq in cells:
                    store[(int(cx), int(cy))] = (float(w), int(freq))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SessionFormatError):
                raise
            raise SessionFormatError(f"{path}: malformed session payload: {exc}") from exc
        return session


def fuse_across_graphs(
    session: AggregationSession, root: str, dx: int, dy: int, gamma: float
) -> list[InstanceRecord]:
    """Module-level alias for AggregationSession.fuse_across_graphs."""
    return session.fuse_across_graphs(root, dx, dy, gamma)

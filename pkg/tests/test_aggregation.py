import numpy as np
import pytest

from refground.aggregation import (
    AggregationSession,
    GraphRegistry,
    RegionGrid,
    RegistryError,
    merge_regions,
)
from refground.geometry import CellObservation, GridSpec
from refground.graph import ObjectGraph, canonicalize
from refground.oracle import cluster_count

GRID = GridSpec(0.0, 0.0, 0.05, 100, 100)

CUP_RED = ObjectGraph.build("cup", [("color", "red")])
CUP_BLACK = ObjectGraph.build("cup", [("color", "black")])


def obs(cell, weight, count=1):
    return CellObservation(cell, weight, count)


def session():
    return AggregationSession(GRID)


# -- registry -----------------------------------------------------------------


def test_register_same_graph_twice_same_id():
    s = session()
    assert s.register_graph(CUP_RED) == s.register_graph(CUP_RED)


def test_register_different_graphs_increment():
    s = session()
    assert s.register_graph(CUP_RED) == 0
    assert s.register_graph(CUP_BLACK) == 1


def test_register_permuted_duplicates_one_id():
    a = ObjectGraph.build("cup", [("color", "red"), ("material", "glass")])
    b = ObjectGraph.build("cup", [("material", "glass"), ("color", "red")])
    s = session()
    assert s.register_graph(a) == s.register_graph(b)


def test_registry_lookup_and_roots():
    reg = GraphRegistry()
    oid = reg.register(CUP_RED)
    assert reg.graph(oid) == canonicalize(CUP_RED)
    assert reg.oids_for_root("cup") == [oid]
    with pytest.raises(RegistryError):
        reg.graph(99)


# -- accumulate -----------------------------------------------------------------


def test_accumulate_running_mean():
    s = session()
    oid = s.register_graph(CUP_RED)
    s.accumulate(oid, [obs((3, 4), 0.2)])
    s.accumulate(oid, [obs((3, 4), 0.4)])
    assert s.cell_map(oid)[(3, 4)] == (pytest.approx(0.3), 2)


def test_accumulate_single_frame():
    s = session()
    oid = s.register_graph(CUP_RED)
    s.accumulate(oid, [obs((3, 4), 0.7)])
    assert s.cell_map(oid)[(3, 4)] == (pytest.approx(0.7), 1)


def test_accumulate_no_cross_talk():
    s = session()
    a = s.register_graph(CUP_RED)
    b = s.register_graph(CUP_BLACK)
    s.accumulate(a, [obs((1, 1), 0.5)])
    s.accumulate(b, [obs((9, 9), 0.25)])
    assert set(s.cell_map(a)) == {(1, 1)}
    assert set(s.cell_map(b)) == {(9, 9)}


def test_accumulate_unknown_oid():
    with pytest.raises(RegistryError):
        session().accumulate(5, [obs((0, 0), 1.0)])


def test_accumulate_order_free_over_multiset():
    frames = [[obs((2, 2), w)] for w in (0.1, 0.7, 0.4, 0.9, 0.3)]
    rng = np.random.default_rng(0)
    reference = None
    for _ in range(6):
        s = session()
        oid = s.register_graph(CUP_RED)
        for i in rng.permutation(len(frames)):
            s.accumulate(oid, frames[int(i)])
        w, freq = s.cell_map(oid)[(2, 2)]
        assert freq == len(frames)
        if reference is None:
            reference = w
        assert w == pytest.approx(reference, abs=1e-12)


# -- region scores --------------------------------------------------------------


def test_region_scores_all_mass_one_region():
    s = session()
    oid = s.register_graph(CUP_RED)
    s.accumulate(oid, [obs((3, 4), 0.5), obs((5, 6), 0.2)])
    grid = s.region_scores(oid, 10, 10)
    assert grid.scores[0, 0] == pytest.approx(1.0)
    assert grid.scores.sum() == pytest.approx(1.0)


def test_region_scores_equal_split():
    s = session()
    oid = s.register_graph(CUP_RED)
    s.accumulate(oid, [obs((3, 4), 0.5), obs((13, 4), 0.5)])
    grid = s.region_scores(oid, 10, 10)
    assert grid.scores[0, 0] == pytest.approx(0.5)
    assert grid.scores[1, 0] == pytest.approx(0.5)


def test_region_scores_hand_normalization():
    s = session()
    oid = s.register_graph(CUP_RED)
    s.accumulate(
        oid,
        [obs((0, 0), 1.5), obs((1, 1), 1.5), obs((10, 0), 1.0)],
    )
    grid = s.region_scores(oid, 10, 10)
    assert grid.scores[0, 0] == pytest.approx(0.75)
    assert grid.scores[1, 0] == pytest.approx(0.25)
    assert np.count_nonzero(grid.scores) == 2


def test_region_scores_empty_is_zero_grid():
    s = session()
    oid = s.register_graph(CUP_RED)
    grid = s.region_scores(oid, 10, 10)
    assert grid.total_mass == 0.0
    assert not grid.scores.any()


def test_region_scores_nonnegative_and_normalized():
    rng = np.random.default_rng(8)
    s = session()
    oid = s.register_graph(CUP_RED)
    cells = [obs((int(x), int(y)), float(w)) for x, y, w in
             zip(rng.integers(0, 100, 60), rng.integers(0, 100, 60), rng.uniform(0.01, 1, 60))]
    s.accumulate(oid, cells)
    grid = s.region_scores(oid, 7, 13)  # padding path: 7 and 13 do not divide 100
    assert (grid.scores >= 0).all()
    assert grid.scores.sum() == pytest.approx(1.0, abs=1e-9)


# -- merge_regions ---------------------------------------------------------------


def grid_of(array):
    scores = np.asarray(array, dtype=float)
    return RegionGrid(10, 10, scores, float(scores.sum()))


def test_merge_single_region():
    labels = merge_regions(grid_of([[1.0, 0.0], [0.0, 0.0]]), 0.05)
    assert labels == {(0, 0): 0}


def test_merge_two_adjacent_regions():
    labels = merge_regions(grid_of([[0.6, 0.4]]), 0.05)
    assert labels[(0, 0)] == labels[(0, 1)]


def test_merge_separated_regions_two_labels():
    labels = merge_regions(grid_of([[0.5, 0.0, 0.5]]), 0.05)
    assert labels[(0, 0)] != labels[(0, 2)]
    assert (0, 1) not in labels


def test_merge_sub_threshold_zeroed_unlabeled():
    labels = merge_regions(grid_of([[0.9, 0.04, 0.06]]), 0.05)
    assert (0, 1) not in labels
    # (0,2) survives but is not adjacent to (0,0): separate instance
    assert labels[(0, 0)] != labels[(0, 2)]


def test_merge_bridge_unites_groups():
    # two strong lobes joined by a weaker surviving bridge must be one label
    labels = merge_regions(grid_of([[0.3, 0.2, 0.3], [0.0, 0.0, 0.0]]), 0.05)
    assert len(set(labels.values())) == 1


def test_merge_diagonal_counts_as_neighbor():
    labels = merge_regions(grid_of([[0.5, 0.0], [0.0, 0.5]]), 0.05)
    assert labels[(0, 0)] == labels[(1, 1)]


def test_merge_labels_partition_survivors():
    rng = np.random.default_rng(4)
    scores = rng.uniform(0, 0.08, (6, 6))
    scores /= scores.sum()
    grid = RegionGrid(10, 10, scores, 1.0)
    labels = merge_regions(grid, 0.02)
    survivors = {tuple(r) for r in np.argwhere(scores >= 0.02)}
    assert set(labels) == survivors


def test_merge_gamma_validation():
    with pytest.raises(ValueError):
        merge_regions(grid_of([[1.0]]), 0.0)


def blob_grid(rng, n_blobs):
    """Sum of compact unimodal bumps at well-separated centers."""
    size = 12
    scores = np.zeros((size, size))
    centers = []
    while len(centers) < n_blobs:
        c = rng.integers(1, size - 1, 2)
        if all(max(abs(c[0] - o[0]), abs(c[1] - o[1])) >= 4 for o in centers):
            centers.append(c)
    for c in centers:
        amp = float(rng.uniform(0.5, 1.0))
        for dx in range(-1, 2):
            for dy in range(-1, 2):
                scores[c[0] + dx, c[1] + dy] += amp * (0.3 ** (abs(dx) + abs(dy)))
    scores /= scores.sum()
    return RegionGrid(10, 10, scores, 1.0)


def test_merge_monotone_in_gamma_on_blob_grids():
    rng = np.random.default_rng(21)
    for _ in range(25):
        grid = blob_grid(rng, int(rng.integers(1, 4)))
        counts = []
        for gamma in (0.01, 0.03, 0.05, 0.1, 0.2, 0.4):
            labels = merge_regions(grid, gamma)
            counts.append(len(set(labels.values())))
        assert all(a >= b for a, b in zip(counts, counts[1:]))


# -- count_instances --------------------------------------------------------------


def splat(s, oid, cx, cy, weight=1.0, spread=2):
    cells = []
    for dx in range(-spread, spread + 1):
        for dy in range(-spread, spread + 1):
            cells.append(obs((cx + dx, cy + dy), weight / (1 + abs(dx) + abs(dy))))
    s.accumulate(oid, cells)


def test_count_instances_empty():
    s = session()
    oid = s.register_graph(CUP_RED)
    assert s.count_instances(oid, 10, 10, 0.05) == []


def test_count_instances_two_clusters_matches_oracle():
    s = session()
    oid = s.register_graph(CUP_RED)
    centers = [(15, 15), (75, 75)]
    for cx, cy in centers:
        splat(s, oid, cx, cy)
    groups = s.count_instances(oid, 10, 10, 0.05)
    world = [GRID.cell_center(c) for c in centers]
    assert len(groups) == cluster_count(world, threshold=1.0)
    for group in groups:
        assert any(
            abs(group.centroid[0] - wx) < 0.2 and abs(group.centroid[1] - wy) < 0.2
            for wx, wy in world
        )


def test_count_instances_cluster_straddling_boundary():
    s = session()
    oid = s.register_graph(CUP_RED)
    splat(s, oid, 19, 19, spread=3)  # straddles the region corner at (20, 20)
    groups = s.count_instances(oid, 10, 10, 0.05)
    assert len(groups) == 1
    assert len(groups[0].regions) > 1


# -- fuse ------------------------------------------------------------------------


def test_fuse_single_oid_identity():
    s = session()
    oid = s.register_graph(CUP_RED)
    splat(s, oid, 15, 15)
    splat(s, oid, 75, 75)
    groups = s.count_instances(oid, 10, 10, 0.05)
    records = s.fuse_across_graphs("cup", 10, 10, 0.05)
    assert len(records) == len(groups) == 2
    assert {r.regions for r in records} == {g.regions for g in groups}
    assert all(r.graph == canonicalize(CUP_RED) for r in records)


def test_fuse_same_region_group_collapses():
    s = session()
    a = s.register_graph(CUP_RED)
    b = s.register_graph(ObjectGraph.build("cup", [("color", "red"), ("material", "glass")]))
    splat(s, a, 15, 15, weight=1.0)
    splat(s, b, 16, 15, weight=0.5)
    records = s.fuse_across_graphs("cup", 10, 10, 0.05)
    assert len(records) == 1
    assert records[0].graph == canonicalize(CUP_RED)  # higher accumulated weight wins
    assert len(records[0].contributors) == 2


def test_fuse_disjoint_groups_stay_separate():
    s = session()
    a = s.register_graph(CUP_RED)
    b = s.register_graph(CUP_BLACK)
    splat(s, a, 15, 15)
    splat(s, b, 75, 75)
    records = s.fuse_across_graphs("cup", 10, 10, 0.05)
    assert len(records) == 2
    assert {r.graph for r in records} == {canonicalize(CUP_RED), canonicalize(CUP_BLACK)}


def test_fuse_filters_by_root():
    s = session()
    a = s.register_graph(CUP_RED)
    b = s.register_graph(ObjectGraph.build("lamp"))
    splat(s, a, 15, 15)
    splat(s, b, 16, 15)
    assert len(s.fuse_across_graphs("cup", 10, 10, 0.05)) == 1
    assert len(s.fuse_across_graphs("lamp", 10, 10, 0.05)) == 1
    assert s.fuse_across_graphs("sofa", 10, 10, 0.05) == []


def test_fuse_score_is_pooled_sum():
    s = session()
    oid = s.register_graph(CUP_RED)
    splat(s, oid, 15, 15)
    (record,) = s.fuse_across_graphs("cup", 10, 10, 0.05)
    grid = s.region_scores(oid, 10, 10)
    assert record.score == pytest.approx(sum(grid.scores[r] for r in record.regions))


# -- dump/load --------------------------------------------------------------------


def test_session_round_trip_bit_exact(tmp_path):
    s = session()
    a = s.register_graph(CUP_RED)
    b = s.register_graph(
        ObjectGraph.build("lamp", [], [("is-near", ObjectGraph.build("table"))])
    )
    splat(s, a, 15, 15, weight=0.37)
    splat(s, b, 40, 60, weight=0.81)
    s.accumulate(a, [obs((15, 15), 0.1234567890123)])
    first = tmp_path / "session.json"
    s.dump(first)
    loaded = AggregationSession.load(first)
    second = tmp_path / "again.json"
    loaded.dump(second)
    assert first.read_bytes() == second.read_bytes()
    assert loaded.cell_map(a) == s.cell_map(a)
    assert [g for _, g in loaded.registry.items()] == [g for _, g in s.registry.items()]

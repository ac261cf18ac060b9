import itertools
import math

import numpy as np
import pytest

from sketchchain.extraction import (
    JointGraph,
    _TreeScorer,
    build_joint_graph,
    curvature_split,
    extract_top_chains,
    ingest_region_boundaries,
    max_spanning_forest,
    score_chain,
    trace_edge_contours,
)

from support import random_chain_points


def segment(*pts):
    return np.asarray(pts, dtype=np.float64)


def graph_of(*segments, merge_radius=0.5):
    return build_joint_graph(list(segments), merge_radius)


class TestTraceEdgeContours:
    def test_polyline_passthrough(self):
        out = trace_edge_contours([[(0, 0), (10, 0), (10, 10)]])
        assert len(out) == 1
        assert np.array_equal(out[0], [[0, 0], [10, 0], [10, 10]])

    def test_consecutive_duplicates_removed(self):
        out = trace_edge_contours([[(0, 0), (0, 0), (5, 0), (5, 0), (9, 0)]])
        assert np.array_equal(out[0], [[0, 0], [5, 0], [9, 0]])

    def test_empty_mask(self):
        assert trace_edge_contours(np.zeros((16, 16), dtype=np.uint8)) == []

    def test_horizontal_run(self):
        mask = np.zeros((9, 32), dtype=np.uint8)
        mask[4, 5:25] = 1
        out = trace_edge_contours(mask)
        assert len(out) == 1
        assert len(out[0]) == 20
        assert set(map(tuple, out[0])) == {(float(c), 4.0) for c in range(5, 25)}

    def test_plus_sign_splits_into_four_arms(self):
        mask = np.zeros((11, 11), dtype=np.uint8)
        mask[5, 1:10] = 1
        mask[1:10, 5] = 1
        out = trace_edge_contours(mask)
        assert len(out) == 4
        tips = {(5.0, 1.0), (5.0, 9.0), (1.0, 5.0), (9.0, 5.0)}
        for run in out:
            ends = {tuple(run[0]), tuple(run[-1])}
            assert (5.0, 5.0) in ends
            assert ends & tips

    def test_closed_ring_traced_open(self):
        mask = np.zeros((12, 12), dtype=np.uint8)
        mask[3, 3:9] = 1
        mask[8, 3:9] = 1
        mask[3:9, 3] = 1
        mask[3:9, 8] = 1
        out = trace_edge_contours(mask)
        assert len(out) == 1
        pts = out[0]
        assert len(pts) == len(np.unique(pts, axis=0))
        assert np.hypot(*(pts[0] - pts[-1])) <= math.sqrt(2)


class TestCurvatureSplit:
    def test_collinear_points_stay_whole(self):
        pts = np.stack([np.arange(20.0), np.zeros(20)], axis=1)
        out = curvature_split(pts)
        assert len(out) == 1
        assert np.array_equal(out[0], pts)

    def test_l_shape_splits_at_corner(self):
        side1 = np.stack([np.arange(0.0, 22.0, 2.0), np.zeros(11)], axis=1)
        side2 = np.stack([np.full(10, 20.0), np.arange(2.0, 22.0, 2.0)], axis=1)
        pts = np.vstack([side1, side2])
        out = curvature_split(pts)
        assert len(out) == 2
        assert tuple(out[0][-1]) == (20.0, 0.0)
        assert tuple(out[1][0]) == (20.0, 0.0)

    def test_tiny_polyline_returned_unsplit(self):
        pts = segment((0, 0), (1, 1))
        out = curvature_split(pts)
        assert len(out) == 1 and np.array_equal(out[0], pts)

    def test_circle_has_no_strict_maxima(self):
        t = np.linspace(0.0, 2.0 * np.pi, 65)[:-1]
        pts = np.stack([np.cos(t), np.sin(t)], axis=1) * 50.0
        out = curvature_split(pts, split_threshold=0.4)
        assert len(out) == 1

    def test_pieces_concatenate_to_input(self):
        rng = np.random.default_rng(33)
        for _ in range(50):
            pts = random_chain_points(rng, int(rng.integers(3, 40)), max_turn=2.8)
            pieces = curvature_split(pts)
            rebuilt = pieces[0]
            for piece in pieces[1:]:
                assert np.array_equal(rebuilt[-1], piece[0])
                rebuilt = np.vstack([rebuilt, piece[1:]])
            assert np.array_equal(rebuilt, pts)


class TestBuildJointGraph:
    def test_shared_endpoint(self):
        g = graph_of(segment((0, 0), (10, 0)), segment((10, 0), (10, 10)))
        assert len(g.vertices) == 3
        assert len(g.edges) == 2

    def test_close_endpoints_merge_at_midpoint(self):
        g = build_joint_graph(
            [segment((0, 0), (10, 0)), segment((11, 0), (20, 0))], merge_radius=3.0
        )
        assert len(g.vertices) == 3
        mids = [tuple(v) for v in g.vertices]
        assert (10.5, 0.0) in mids

    def test_far_endpoints_stay_distinct(self):
        g = build_joint_graph(
            [segment((0, 0), (10, 0)), segment((20, 0), (30, 0))], merge_radius=3.0
        )
        assert len(g.vertices) == 4
        forest = max_spanning_forest(g)
        assert len(forest.trees) == 2

    def test_no_two_vertices_within_merge_radius(self):
        rng = np.random.default_rng(40)
        for _ in range(30):
            segs = [
                segment(tuple(rng.uniform(0, 60, 2)), tuple(rng.uniform(0, 60, 2)))
                for _ in range(8)
            ]
            g = build_joint_graph(segs, merge_radius=4.0)
            for i in range(len(g.vertices)):
                for j in range(i + 1, len(g.vertices)):
                    assert np.hypot(*(g.vertices[i] - g.vertices[j])) > 4.0

    def test_edge_weight_is_polyline_length(self):
        g = graph_of(segment((0, 0), (3, 4), (3, 12)))
        assert g.edges[0].weight == pytest.approx(13.0)

    def test_self_loop_dropped(self):
        g = build_joint_graph([segment((0, 0), (5, 5), (1, 0))], merge_radius=3.0)
        assert len(g.edges) == 0


def brute_force_best_forest_weight(graph: JointGraph) -> float:
    """Max total weight over all acyclic edge subsets (weights are positive,
    so the best one spans every component)."""
    best = 0.0
    edges = graph.edges
    for r in range(len(edges) + 1):
        for subset in itertools.combinations(range(len(edges)), r):
            parent = list(range(len(graph.vertices)))

            def find(x):
                while parent[x] != x:
                    x = parent[x]
                return x

            acyclic = True
            total = 0.0
            for idx in subset:
                ra, rb = find(edges[idx].u), find(edges[idx].v)
                if ra == rb:
                    acyclic = False
                    break
                parent[ra] = rb
                total += edges[idx].weight
            if acyclic:
                best = max(best, total)
    return best


class TestMaxSpanningForest:
    def test_acyclic_graph_unchanged(self):
        g = graph_of(segment((0, 0), (10, 0)), segment((10, 0), (10, 10)))
        forest = max_spanning_forest(g)
        assert len(forest.trees) == 1
        assert set(forest.trees[0].edge_ids) == {0, 1}

    def test_triangle_drops_lightest_edge(self):
        # triangle on vertices A=(0,0), B=(30,0), C=(30,16): direct edges of
        # weight 30 and 16, plus a detoured C->A polyline of weight ~50
        g = build_joint_graph(
            [
                segment((0, 0), (30, 0)),
                segment((30, 0), (30, 16)),
                segment((30, 16), (15, 40), (0, 0)),
            ],
            merge_radius=0.5,
        )
        assert len(g.edges) == 3
        forest = max_spanning_forest(g)
        [tree] = forest.trees
        assert len(tree.edge_ids) == 2
        lightest = min(range(3), key=lambda i: g.edges[i].weight)
        assert lightest not in tree.edge_ids

    def test_matches_brute_force_on_random_graphs(self):
        rng = np.random.default_rng(41)
        for _ in range(25):
            segs = [
                segment(tuple(rng.uniform(0, 50, 2)), tuple(rng.uniform(0, 50, 2)))
                for _ in range(int(rng.integers(2, 8)))
            ]
            g = build_joint_graph(segs, merge_radius=12.0)
            forest = max_spanning_forest(g)
            total = sum(g.edges[i].weight for t in forest.trees for i in t.edge_ids)
            assert total == pytest.approx(brute_force_best_forest_weight(g), abs=1e-9)


class TestScoreChain:
    def test_single_edge_scores_its_length(self):
        g = graph_of(segment((0, 0), (40, 0)))
        assert score_chain([0, 1], g) == pytest.approx(40.0)

    def test_straight_path_without_alternatives(self):
        g = graph_of(segment((0, 0), (10, 0)), segment((10, 0), (25, 0)))
        u = int(np.argwhere((g.vertices == [10.0, 0.0]).all(axis=1))[0][0])
        ends = [v for v in range(3) if v != u]
        path = [ends[0], u, ends[1]]
        assert score_chain(path, g) == pytest.approx(25.0 * 1.5)

    def test_junction_share_against_direct_evaluation(self):
        g = graph_of(
            segment((0, 0), (10, 0)),
            segment((10, 0), (20, 0)),
            segment((10, 0), (10, 10)),
        )
        u = int(np.argwhere((g.vertices == [10.0, 0.0]).all(axis=1))[0][0])
        a = int(np.argwhere((g.vertices == [0.0, 0.0]).all(axis=1))[0][0])
        b = int(np.argwhere((g.vertices == [20.0, 0.0]).all(axis=1))[0][0])
        share = 1.0 / (1.0 + math.exp(-math.pi))
        assert share == pytest.approx(0.9586, abs=1e-4)
        expected = 20.0 + 0.5 * 1.0 * 20.0 * share
        assert score_chain([a, u, b], g) == pytest.approx(expected, abs=1e-9)

    def test_direction_invariance(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            segs = [
                segment(tuple(rng.uniform(0, 80, 2)), tuple(rng.uniform(0, 80, 2)))
                for _ in range(10)
            ]
            g = build_joint_graph(segs, merge_radius=15.0)
            forest = max_spanning_forest(g)
            for tree in forest.trees:
                leaves = tree.leaves
                if len(leaves) < 2:
                    continue
                scorer = _TreeScorer(tree, g, 1.0, 2.0)
                path = scorer.path_vertices(leaves[0], leaves[-1])
                assert score_chain(path, g) == pytest.approx(
                    score_chain(path[::-1], g), abs=1e-9
                )


class TestExtractTopChains:
    def star_graph(self, arm=20.0):
        return build_joint_graph(
            [
                segment((0, 0), (arm, 0)),
                segment((0, 0), (-arm / 2, arm * math.sqrt(3) / 2)),
                segment((0, 0), (-arm / 2, -arm * math.sqrt(3) / 2)),
            ],
            merge_radius=0.5,
        )

    def test_path_graph_yields_one_chain(self):
        g = graph_of(segment((0, 0), (10, 0)), segment((10, 0), (30, 5)))
        forest = max_spanning_forest(g)
        out = extract_top_chains(forest, g, n_chains=5, overlap_threshold=0.6)
        assert len(out) == 1
        assert len(out[0].chain.joints) == 3

    def test_star_overlap_thinning(self):
        # three equal arms: every leaf pair shares exactly half of its length
        # with any other, so they all pass at 0.6 and only one does at 0.5
        g = self.star_graph()
        forest = max_spanning_forest(g)
        assert len(extract_top_chains(forest, g, 5, overlap_threshold=0.6)) == 3
        assert len(extract_top_chains(forest, g, 5, overlap_threshold=0.5)) == 1

    def test_y_shape_prefers_straighter_arm(self):
        # long stem leftward; one arm continues nearly straight, one bends hard
        stem = segment((0, 0), (-60, 0))
        straight_arm = segment((0, 0), (40, 4))
        bent_arm = segment((0, 0), (4, 40))
        g = build_joint_graph([stem, straight_arm, bent_arm], merge_radius=0.5)
        forest = max_spanning_forest(g)
        out = extract_top_chains(forest, g, n_chains=1, overlap_threshold=0.6)
        [sc] = out
        xs = [p.x for p in sc.chain.joints]
        assert min(xs) == pytest.approx(-60.0)
        assert max(xs) == pytest.approx(40.0)  # stem + straighter arm wins
        # cross-check against direct scoring of every leaf pair
        tree = forest.trees[0]
        scorer = _TreeScorer(tree, g, 1.0, 2.0)
        best = max(
            score_chain(scorer.path_vertices(a, b), g)
            for a, b in itertools.combinations(tree.leaves, 2)
        )
        assert sc.score == pytest.approx(best, abs=1e-9)

    def test_prefix_aggregates_equal_direct_scoring(self):
        rng = np.random.default_rng(44)
        for _ in range(25):
            segs = [
                segment(tuple(rng.uniform(0, 100, 2)), tuple(rng.uniform(0, 100, 2)))
                for _ in range(int(rng.integers(3, 12)))
            ]
            g = build_joint_graph(segs, merge_radius=18.0)
            forest = max_spanning_forest(g)
            for tree in forest.trees:
                scorer = _TreeScorer(tree, g, 1.0, 2.0)
                for a, b in itertools.combinations(tree.leaves, 2):
                    direct = score_chain(scorer.path_vertices(a, b), g)
                    assert scorer.path_score(a, b) == pytest.approx(direct, abs=1e-9)

    def test_selected_chains_are_simple_and_low_overlap(self):
        rng = np.random.default_rng(45)
        for _ in range(20):
            segs = [
                segment(tuple(rng.uniform(0, 100, 2)), tuple(rng.uniform(0, 100, 2)))
                for _ in range(int(rng.integers(4, 14)))
            ]
            g = build_joint_graph(segs, merge_radius=16.0)
            forest = max_spanning_forest(g)
            out = extract_top_chains(forest, g, n_chains=5, overlap_threshold=0.6)
            assert len(out) <= 5
            for sc in out:
                assert len(set(sc.vertex_path)) == len(sc.vertex_path)
            for x, y in itertools.combinations(out, 2):
                shared = sum(
                    g.edges[e].weight for e in set(x.edge_ids) & set(y.edge_ids)
                )
                shorter = min(
                    sum(g.edges[e].weight for e in x.edge_ids),
                    sum(g.edges[e].weight for e in y.edge_ids),
                )
                assert shared / shorter < 0.6


class TestIngestRegionBoundaries:
    def square(self, cx=128.0, cy=128.0, half=50.0):
        return np.array(
            [
                [cx - half, cy - half],
                [cx + half, cy - half],
                [cx + half, cy + half],
                [cx - half, cy + half],
            ]
        )

    def test_centered_square_kept_with_four_joints(self):
        out = ingest_region_boundaries([self.square()], frame=(256.0, 256.0))
        assert len(out) == 1
        assert len(out[0].chain_id) > 0
        assert len(out[0].joints) == 4

    def test_border_hugging_polygon_discarded(self):
        hug = np.array([[1.0, 1.0], [255.0, 1.0], [255.0, 128.0], [1.0, 128.0]])
        assert ingest_region_boundaries([hug], frame=(256.0, 256.0)) == []

    def test_small_perimeter_discarded(self):
        tiny = self.square(half=4.0)
        assert ingest_region_boundaries([tiny], frame=(256.0, 256.0)) == []

    def test_proposal_cap(self):
        polys = [self.square(half=30.0 + i) for i in range(25)]
        out = ingest_region_boundaries(polys, frame=(256.0, 256.0), max_proposals=20)
        assert len(out) == 20

    def test_smooth_blob_dropped(self):
        t = np.linspace(0, 2 * np.pi, 65)[:-1]
        circle = np.stack([np.cos(t), np.sin(t)], axis=1) * 60.0 + 128.0
        assert ingest_region_boundaries([circle], frame=(256.0, 256.0)) == []

    def test_dense_square_opens_at_corner(self):
        # square sampled every 10 px: joints must be exactly the 4 corners
        side = np.arange(0.0, 100.0, 10.0)
        ring = np.vstack(
            [
                np.stack([side + 78.0, np.full_like(side, 78.0)], axis=1),
                np.stack([np.full_like(side, 178.0), side + 78.0], axis=1),
                np.stack([178.0 - side, np.full_like(side, 178.0)], axis=1),
                np.stack([np.full_like(side, 78.0), 178.0 - side], axis=1),
            ]
        )
        out = ingest_region_boundaries([ring], frame=(256.0, 256.0))
        assert len(out) == 1
        joints = {(p.x, p.y) for p in out[0].joints}
        assert joints == {(78.0, 78.0), (178.0, 78.0), (178.0, 178.0), (78.0, 178.0)}

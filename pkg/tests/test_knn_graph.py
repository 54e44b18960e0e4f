import itertools

import numpy as np
import pytest

from geoattr import knn_graph, nets, paths
from conftest import linear_logit_model


def brute_force_shortest(graph, source, sink):
    """Exhaustive minimum over all simple paths; None when unreachable."""
    adj = graph.adjacency()
    best = [np.inf]

    def walk(u, seen, cost):
        if cost >= best[0]:
            return
        if u == sink:
            best[0] = cost
            return
        for v, eid in adj[u]:
            if v not in seen:
                walk(v, seen | {v}, cost + graph.weights[eid])

    walk(source, {source}, 0.0)
    return None if np.isinf(best[0]) else best[0]


def random_graph(rng, n_max=10):
    n = int(rng.integers(2, n_max + 1))
    nodes = rng.uniform(-1, 1, size=(n, 2))
    pairs = list(itertools.combinations(range(n), 2))
    keep = rng.random(len(pairs)) < 0.5
    edges = np.array([p for p, k in zip(pairs, keep) if k],
                     dtype=np.int64).reshape(-1, 2)
    g = knn_graph.GeodesicGraph(nodes, edges, k=1)
    g.weights = rng.uniform(0.1, 2.0, size=edges.shape[0])
    return g


def test_union_rule_on_hand_built_line():
    # two mutual-1NN pairs; the middle gap edge appears only one-sidedly
    # with k=2 for node 1 (whose 2nd neighbour is 2) and must be included
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.5, 0.0], [3.5, 0.0]])
    g1 = knn_graph.build_knn_graph(pts, k=1)
    assert g1.edges.tolist() == [[0, 1], [2, 3]]
    g2 = knn_graph.build_knn_graph(pts, k=2)
    assert [1, 2] in g2.edges.tolist()


def test_knn_tie_break_prefers_lower_index():
    # node 0 is equidistant from 1 and 2, which both have closer own
    # neighbours; stable argsort resolves 0's tie toward the lower index
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0],
                    [1.5, 0.0], [-1.5, 0.0]])
    g = knn_graph.build_knn_graph(pts, k=1)
    assert [0, 1] in g.edges.tolist()
    assert [0, 2] not in g.edges.tolist()


def test_knn_k_validation():
    pts = np.zeros((3, 2))
    with pytest.raises(ValueError):
        knn_graph.build_knn_graph(pts, k=0)
    with pytest.raises(ValueError):
        knn_graph.build_knn_graph(pts, k=3)


def test_edges_sorted_and_chunking_invariant(moons_points):
    g1 = knn_graph.build_knn_graph(moons_points, k=5)
    g2 = knn_graph.build_knn_graph(moons_points, k=5, chunk=17)
    assert np.array_equal(g1.edges, g2.edges)
    assert np.array_equal(g1.edges, np.array(sorted(map(tuple, g1.edges))))
    assert (g1.edges[:, 0] < g1.edges[:, 1]).all()


def test_edge_weights_match_per_edge_oracle(small_moons_model, moons_points):
    target = nets.ScalarTarget(1, "probability")
    g = knn_graph.build_knn_graph(moons_points[:60], k=4)
    knn_graph.compute_edge_weights(g, small_moons_model, target, m_edge=6)
    for eid in range(0, g.edges.shape[0], 7):
        i, j = g.edges[eid]
        w = knn_graph.edge_weight(small_moons_model, target,
                                  g.nodes[i], g.nodes[j], 6)
        assert np.isclose(g.weights[eid], w, rtol=1e-12)
    # euclidean rule drops the gradient factor
    knn_graph.compute_edge_weights(g, small_moons_model, target, rule="euclidean")
    d = np.linalg.norm(g.nodes[g.edges[:, 0]] - g.nodes[g.edges[:, 1]], axis=1)
    assert np.allclose(g.weights, d)
    with pytest.raises(ValueError):
        knn_graph.compute_edge_weights(g, small_moons_model, target, rule="taxicab")


def test_dijkstra_and_astar_match_brute_force():
    rng = np.random.default_rng(0)
    compared = 0
    for _ in range(200):
        g = random_graph(rng)
        source, sink = 0, g.n_nodes - 1
        ref = brute_force_shortest(g, source, sink)
        if ref is None:
            with pytest.raises(knn_graph.ConnectivityError):
                knn_graph.shortest_path(g, source, sink)
            continue
        for algorithm in ("dijkstra", "astar"):
            res = knn_graph.shortest_path(g, source, sink, algorithm=algorithm)
            assert np.isclose(res.total_weight, ref, rtol=1e-12)
            # reported weight matches the reported node sequence
            seq = res.node_index_sequence
            eid_of = {tuple(e): i for i, e in enumerate(map(tuple, g.edges.tolist()))}
            walked = sum(
                g.weights[eid_of[(min(a, b), max(a, b))]]
                for a, b in zip(seq, seq[1:])
            )
            assert np.isclose(walked, res.total_weight, rtol=1e-12)
        compared += 1
    assert compared > 100


def test_tie_break_prefers_lower_index_parent():
    # two equal-cost routes 0-1-3 and 0-2-3: parent of 3 must be node 1
    nodes = np.zeros((4, 2))
    g = knn_graph.GeodesicGraph(
        nodes, np.array([[0, 1], [0, 2], [1, 3], [2, 3]], dtype=np.int64), k=1
    )
    g.weights = np.array([1.0, 1.0, 1.0, 1.0])
    res = knn_graph.shortest_path(g, 0, 3)
    assert res.node_index_sequence == [0, 1, 3]
    res = knn_graph.shortest_path(g, 0, 3, algorithm="astar")
    assert res.node_index_sequence == [0, 1, 3]


def test_shortest_path_validation(moons_points):
    g = knn_graph.build_knn_graph(moons_points[:20], k=3)
    with pytest.raises(ValueError):
        knn_graph.shortest_path(g, 0, 1)  # no weights yet
    g.weights = np.ones(g.edges.shape[0])
    with pytest.raises(IndexError):
        knn_graph.shortest_path(g, 0, 99)
    with pytest.raises(ValueError):
        knn_graph.shortest_path(g, 0, 1, algorithm="bfs")


def test_bridges_connect_two_clusters(small_moons_model):
    rng = np.random.default_rng(3)
    left = rng.normal(0.0, 0.05, size=(10, 2))
    right = rng.normal(0.0, 0.05, size=(10, 2)) + [5.0, 0.0]
    pts = np.vstack([left, right])
    target = nets.ScalarTarget(1, "probability")
    g = knn_graph.build_knn_graph(pts, k=2)
    knn_graph.compute_edge_weights(g, small_moons_model, target)
    n_comp = g.component_labels().max() + 1
    assert n_comp >= 2
    knn_graph.connect_components(g, small_moons_model, target)
    assert g.component_labels().max() == 0
    assert len(g.bridges) == n_comp - 1
    # the cross-cluster bridge is the globally closest pair
    cross = [eid for eid in g.bridges
             if (g.edges[eid] < 10).sum() == 1]
    assert cross
    i, j = g.edges[cross[0]]
    d = np.linalg.norm(left[:, None, :] - right[None, :, :], axis=2)
    ii, jj = np.unravel_index(np.argmin(d), d.shape)
    assert {int(i), int(j)} == {int(ii), int(jj) + 10}


def test_geodesic_attribution_integrates_reported_path(small_moons_model,
                                                       moons_points):
    target = nets.ScalarTarget(1, "probability")
    x, base = np.array([1.4, 0.3]), np.array([-0.5, -0.5])
    attr, path = knn_graph.geodesic_ig_knn(
        small_moons_model, target, x, base, moons_points[:80], k=5, m_attr=8
    )
    assert np.allclose(path.baseline, base)
    assert np.allclose(path.input, x)
    ref = paths.path_attribution(small_moons_model, target, path)
    assert np.allclose(attr.values, ref.values, atol=1e-12)
    assert attr.extra["graph_path_weight"] > 0


def test_route_all_matches_individual_routing(small_moons_model, moons_points):
    target = nets.ScalarTarget(1, "probability")
    base = np.array([-0.5, -0.5])
    samples = moons_points[:60]
    attrs, anchor_paths, graph = knn_graph.route_all(
        small_moons_model, target, [0, 7, 33], base, samples, k=5, m_attr=8
    )
    src = graph.n_nodes - 1
    for idx, attr, path in zip([0, 7, 33], attrs, anchor_paths):
        res = knn_graph.shortest_path(graph, src, idx)
        assert np.allclose(graph.nodes[res.node_index_sequence], path.anchors)
        ref = paths.path_attribution(small_moons_model, target, path)
        assert np.allclose(attr.values, ref.values, atol=1e-12)


def test_graph_csv(tmp_path, moons_points):
    g = knn_graph.build_knn_graph(moons_points[:10], k=2)
    g.weights = np.arange(g.edges.shape[0], dtype=np.float64)
    out = tmp_path / "graph.csv"
    g.save_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "i,j,weight,is_bridge"
    assert len(lines) == 1 + g.edges.shape[0]

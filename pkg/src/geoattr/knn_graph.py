"""Geodesic shortest paths through a gradient-weighted kNN graph.

Nodes are sample points (plus baseline and inputs); an undirected edge
joins i and j when either is among the other's k Euclidean nearest
neighbours (union rule). Each edge carries the weight
||a - b|| * mean_k ||grad f(midpoint_k)||, a midpoint Riemann estimate of
the gradient-weighted segment length, so shortest paths avoid
high-gradient regions. Disconnected graphs are repaired with minimal
Euclidean "bridge" edges before routing.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import nets, paths


class ConnectivityError(RuntimeError):
    pass


@dataclass
class GeodesicGraph:
    nodes: np.ndarray          # (n, d)
    edges: np.ndarray          # (E, 2) int64, i < j, lexicographically sorted
    k: int
    weights: np.ndarray | None = None   # (E,) float64, >= 0
    m_edge: int = 10
    bridges: list = field(default_factory=list)  # indices into edges

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    def adjacency(self):
        """Per-node list of (neighbor, edge_id)."""
        adj = [[] for _ in range(self.n_nodes)]
        for eid, (i, j) in enumerate(self.edges):
            adj[i].append((int(j), eid))
            adj[j].append((int(i), eid))
        for lst in adj:
            lst.sort()
        return adj

    def component_labels(self):
        labels = np.full(self.n_nodes, -1, dtype=np.int64)
        adj = self.adjacency()
        comp = 0
        for start in range(self.n_nodes):
            if labels[start] >= 0:
                continue
            stack = [start]
            labels[start] = comp
            while stack:
                u = stack.pop()
                for v, _ in adj[u]:
                    if labels[v] < 0:
                        labels[v] = comp
                        stack.append(v)
            comp += 1
        return labels

    def save_csv(self, path):
        bridge_set = set(self.bridges)
        with open(path, "w") as fh:
            fh.write("i,j,weight,is_bridge\n")
            for eid, (i, j) in enumerate(self.edges):
                w = self.weights[eid] if self.weights is not None else float("nan")
                fh.write(f"{i},{j},{w:.17g},{int(eid in bridge_set)}\n")


def build_knn_graph(points, k, chunk=1024):
    """Union-rule kNN graph over Euclidean distance; weights left unset.

    Ties in distance break toward the lower node index (stable sort).
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = points.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k={k} out of range for {n} points")
    pairs = set()
    sq = np.einsum("ij,ij->i", points, points)
    for start in range(0, n, chunk):
        block = points[start:start + chunk]
        d2 = sq[start:start + chunk, None] + sq[None, :] - 2.0 * block @ points.T
        order = np.argsort(d2, axis=1, kind="stable")
        for row, neigh in enumerate(order[:, : k + 1]):
            i = start + row
            taken = 0
            for j in neigh:
                j = int(j)
                if j == i:
                    continue
                pairs.add((min(i, j), max(i, j)))
                taken += 1
                if taken == k:
                    break
    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    return GeodesicGraph(points, edges, k)


def edge_weight(model, target, a, b, m_edge):
    """||a - b|| times the midpoint-rule mean gradient norm on segment a-b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dist = float(np.linalg.norm(b - a))
    if dist == 0.0:
        return 0.0
    mids = paths.segment_midpoints(a, b, m_edge)
    _, grads = nets.batch_scalar_and_gradient(model, mids, target)
    return dist * float(np.linalg.norm(grads, axis=1).mean())


def compute_edge_weights(graph, model, target, m_edge=10, rule="riemannian"):
    """Fill graph.weights in place; one fused gradient batch over all edges.

    rule 'riemannian' is the gradient-weighted length; 'euclidean' drops
    the gradient factor (the model-agnostic variant).
    """
    a = graph.nodes[graph.edges[:, 0]]
    b = graph.nodes[graph.edges[:, 1]]
    dist = np.linalg.norm(b - a, axis=1)
    if rule == "euclidean":
        graph.weights = dist
    elif rule == "riemannian":
        m = m_edge
        t = (np.arange(m) + 0.5) / m
        mids = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
        _, grads = nets.batch_scalar_and_gradient(
            model, mids.reshape(-1, graph.nodes.shape[1]), target
        )
        norms = np.linalg.norm(grads, axis=1).reshape(-1, m)
        graph.weights = dist * norms.mean(axis=1)
    else:
        raise ValueError(f"unknown weight rule {rule!r}")
    graph.m_edge = m_edge
    return graph


def connect_components(graph, model, target, rule="riemannian"):
    """Bridge the two globally closest components until one remains.

    Each bridge is the minimum-Euclidean-distance cross-component pair;
    its weight follows the graph's weight rule.
    """
    if graph.weights is None:
        raise ValueError("compute edge weights before bridging")
    while True:
        labels = graph.component_labels()
        n_comp = labels.max() + 1
        if n_comp == 1:
            return graph
        best = None  # (dist, i, j)
        for ci in range(n_comp):
            idx_i = np.flatnonzero(labels == ci)
            pts_i = graph.nodes[idx_i]
            for cj in range(ci + 1, n_comp):
                idx_j = np.flatnonzero(labels == cj)
                d = np.linalg.norm(
                    pts_i[:, None, :] - graph.nodes[idx_j][None, :, :], axis=2
                )
                flat = int(np.argmin(d))
                ii, jj = divmod(flat, len(idx_j))
                cand = (float(d[ii, jj]), int(idx_i[ii]), int(idx_j[jj]))
                if best is None or cand < best:
                    best = cand
        _, u, v = best
        if rule == "euclidean":
            w = float(np.linalg.norm(graph.nodes[u] - graph.nodes[v]))
        else:
            w = edge_weight(model, target, graph.nodes[u], graph.nodes[v],
                            graph.m_edge)
        i, j = min(u, v), max(u, v)
        graph.edges = np.vstack([graph.edges, [i, j]])
        graph.weights = np.append(graph.weights, w)
        graph.bridges.append(graph.edges.shape[0] - 1)


@dataclass
class ShortestPathResult:
    node_index_sequence: list
    total_weight: float


def _heuristic_scale(graph):
    """Largest alpha with alpha * euclid <= weight on every edge.

    Scaling the Euclidean heuristic by alpha keeps A* admissible even
    when gradient norms are below 1.
    """
    a = graph.nodes[graph.edges[:, 0]]
    b = graph.nodes[graph.edges[:, 1]]
    euc = np.linalg.norm(b - a, axis=1)
    mask = euc > 0
    if not mask.any():
        return 0.0
    return float((graph.weights[mask] / euc[mask]).min())


def dijkstra_all(graph, source):
    """Single-source Dijkstra; equal-cost ties prefer the lower-index parent."""
    n = graph.n_nodes
    adj = graph.adjacency()
    dist = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, eid in adj[u]:
            if done[v]:
                continue
            nd = du + graph.weights[eid]
            if nd < dist[v] or (nd == dist[v] and parent[v] >= 0 and u < parent[v]):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, parent


def _reconstruct(parent, source, sink):
    seq = [sink]
    while seq[-1] != source:
        p = int(parent[seq[-1]])
        if p < 0:
            raise ConnectivityError(
                f"no path between nodes {source} and {sink}; bridge the graph first"
            )
        seq.append(p)
    seq.reverse()
    return seq


def shortest_path(graph, source, sink, algorithm="dijkstra"):
    if graph.weights is None:
        raise ValueError("graph has no edge weights")
    if not (0 <= source < graph.n_nodes and 0 <= sink < graph.n_nodes):
        raise IndexError("node index out of range")
    if algorithm == "dijkstra":
        dist, parent = dijkstra_all(graph, source)
        if not np.isfinite(dist[sink]):
            raise ConnectivityError(
                f"no path between nodes {source} and {sink}; bridge the graph first"
            )
        return ShortestPathResult(_reconstruct(parent, source, sink),
                                  float(dist[sink]))
    if algorithm == "astar":
        return _astar(graph, source, sink)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _astar(graph, source, sink):
    alpha = _heuristic_scale(graph)
    h = alpha * np.linalg.norm(graph.nodes - graph.nodes[sink], axis=1)
    n = graph.n_nodes
    adj = graph.adjacency()
    dist = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    dist[source] = 0.0
    heap = [(h[source], source)]
    while heap:
        _, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == sink:
            return ShortestPathResult(_reconstruct(parent, source, sink),
                                      float(dist[sink]))
        for v, eid in adj[u]:
            if done[v]:
                continue
            nd = dist[u] + graph.weights[eid]
            if nd < dist[v] or (nd == dist[v] and parent[v] >= 0 and u < parent[v]):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd + h[v], v))
    raise ConnectivityError(
        f"no path between nodes {source} and {sink}; bridge the graph first"
    )


def build_geodesic_graph(model, target, samples, k, m_edge=10, rule="riemannian"):
    """kNN graph + weights + bridges in one call; samples are the nodes."""
    graph = build_knn_graph(samples, k)
    compute_edge_weights(graph, model, target, m_edge=m_edge, rule=rule)
    connect_components(graph, model, target, rule=rule)
    return graph


def geodesic_ig_knn(model, target, x, baseline, samples, k, m_edge=10,
                    m_attr=64, rule="riemannian", algorithm="dijkstra"):
    """Geodesic attribution of x against baseline through a kNN graph.

    Input and baseline are appended to the sample set before the graph is
    built. Returns (Attribution, Path) where the path anchors are the
    shortest-path node coordinates.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    nodes = np.vstack([samples, np.atleast_2d(baseline), np.atleast_2d(x)])
    src = nodes.shape[0] - 2
    snk = nodes.shape[0] - 1
    graph = build_geodesic_graph(model, target, nodes, k, m_edge=m_edge, rule=rule)
    result = shortest_path(graph, src, snk, algorithm=algorithm)
    anchors = graph.nodes[result.node_index_sequence]
    path = paths.Path(anchors, m_attr)
    attr = paths.path_attribution(model, target, path)
    attr.extra["graph_path_weight"] = result.total_weight
    return attr, path


def route_all(model, target, inputs, baseline, samples, k, m_edge=10,
              m_attr=64, rule="riemannian"):
    """Attribute many inputs through one shared graph.

    Nodes are samples + baseline; each input must already be one of the
    samples (the harness uses the evaluation points themselves as the
    sample cloud). One Dijkstra run from the baseline serves all inputs.
    Returns (attributions, anchor_paths, graph).
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    nodes = np.vstack([samples, np.atleast_2d(baseline)])
    src = nodes.shape[0] - 1
    graph = build_geodesic_graph(model, target, nodes, k, m_edge=m_edge, rule=rule)
    _, parent = dijkstra_all(graph, src)
    anchor_lists = []
    for idx in inputs:
        seq = _reconstruct(parent, src, int(idx))
        anchors = graph.nodes[seq]
        if anchors.shape[0] < 2:  # input coincides with the baseline node
            anchors = np.vstack([anchors, anchors])
        anchor_lists.append(anchors)
    attrs = paths.batched_path_attribution(model, target, anchor_lists, m_attr)
    return attrs, [paths.Path(a, m_attr) for a in anchor_lists], graph

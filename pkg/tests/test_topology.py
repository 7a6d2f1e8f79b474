"""Topology construction against independent oracles."""

import math

import numpy as np
import pytest

from cdcsim.errors import ParseError, ValidationError
from cdcsim.topology import (
    EARTH_RADIUS_M,
    NodeSet,
    Topology,
    build_emst,
    geo_distance,
    hop_matrix,
    load_nodes,
    load_topology,
    save_nodes,
    save_topology,
    synthetic_nodes,
)


def random_nodes(n, seed, spread=0.2):
    rng = np.random.default_rng(seed)
    lat = 40.6 + spread * rng.random(n)
    lon = -74.0 + spread * rng.random(n)
    return NodeSet(lat=lat, lon=lon, original_ids=tuple(range(n)))


# ---------------------------------------------------------------- distance


def test_zero_distance():
    assert geo_distance(40.7, -74.0, 40.7, -74.0) == 0.0


def test_one_degree_longitude_at_equator():
    # arc length of 1 degree on the great circle: R * pi / 180
    expected = EARTH_RADIUS_M * math.pi / 180.0
    assert geo_distance(0.0, 0.0, 0.0, 1.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(111194.92664455873, abs=1e-6)


def test_distance_symmetry():
    a = (40.61, -74.02)
    b = (40.69, -73.91)
    assert geo_distance(*a, *b) == pytest.approx(geo_distance(*b, *a), rel=1e-15)


def test_antipodal_distance_is_half_circumference():
    assert geo_distance(0.0, 0.0, 0.0, 180.0) == pytest.approx(
        math.pi * EARTH_RADIUS_M, rel=1e-9)


# ---------------------------------------------------------------- EMST


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def kruskal_weight(nodes):
    """Independent MST oracle over the complete geographic graph."""
    n = nodes.n
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            w = geo_distance(float(nodes.lat[i]), float(nodes.lon[i]),
                             float(nodes.lat[j]), float(nodes.lon[j]))
            edges.append((w, i, j))
    edges.sort()
    uf = UnionFind(n)
    total = 0.0
    used = 0
    for w, i, j in edges:
        if uf.union(i, j):
            total += w
            used += 1
            if used == n - 1:
                break
    return total


def test_emst_matches_kruskal_oracle():
    for seed in range(10):
        nodes = random_nodes(30, seed)
        tree = build_emst(nodes)
        assert len(tree.edges) == nodes.n - 1
        assert tree.total_weight() == pytest.approx(kruskal_weight(nodes), rel=1e-9)


def test_emst_two_nodes():
    nodes = NodeSet(lat=np.array([40.6, 40.7]), lon=np.array([-74.0, -74.0]),
                    original_ids=(0, 1))
    tree = build_emst(nodes)
    assert tree.edges[0][:2] == (0, 1)
    assert tree.total_weight() == pytest.approx(
        geo_distance(40.6, -74.0, 40.7, -74.0))


def test_emst_is_spanning_and_acyclic():
    nodes = random_nodes(40, 3)
    tree = build_emst(nodes)
    uf = UnionFind(nodes.n)
    for u, v, _ in tree.edges:
        assert uf.union(u, v)  # a repeat merge would mean a cycle
    root = uf.find(0)
    assert all(uf.find(i) == root for i in range(nodes.n))


def test_emst_tie_break_is_deterministic():
    # four corners of a square: several equal-weight edges compete
    lat = np.array([0.0, 0.0, 0.01, 0.01])
    lon = np.array([0.0, 0.01, 0.0, 0.01])
    nodes = NodeSet(lat=lat, lon=lon, original_ids=(0, 1, 2, 3))
    first = build_emst(nodes)
    for _ in range(5):
        assert build_emst(nodes).edges == first.edges


def test_emst_rejects_coincident_nodes():
    nodes = NodeSet(lat=np.array([40.6, 40.6]), lon=np.array([-74.0, -74.0]),
                    original_ids=(0, 1))
    with pytest.raises(ValidationError):
        build_emst(nodes)


def test_euclidean_metric_supported():
    nodes = random_nodes(15, 9)
    tree = build_emst(nodes, metric="euclidean")
    assert len(tree.edges) == 14
    with pytest.raises(ValidationError):
        build_emst(nodes, metric="chebyshev")


# ---------------------------------------------------------------- hops


def floyd_warshall_hops(top):
    n = top.node_count
    inf = n + 1
    d = np.full((n, n), inf, dtype=int)
    np.fill_diagonal(d, 0)
    for u, v, _ in top.edges:
        d[u][v] = d[v][u] = 1
    for m in range(n):
        d = np.minimum(d, d[:, m, None] + d[None, m, :])
    return d


def test_hop_matrix_matches_floyd_warshall():
    for seed in (0, 1, 2):
        nodes = random_nodes(25, seed)
        tree = build_emst(nodes)
        assert np.array_equal(hop_matrix(tree), floyd_warshall_hops(tree))


def test_hop_matrix_path_graph():
    top = Topology(node_count=4, edges=((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)))
    hops = hop_matrix(top)
    assert hops[0, 3] == 3
    assert hops[1, 3] == 2
    assert np.array_equal(hops, hops.T)
    assert np.all(np.diag(hops) == 0)


def test_hop_matrix_rejects_disconnected():
    top = Topology(node_count=4, edges=((0, 1, 1.0), (2, 3, 1.0)))
    with pytest.raises(ValidationError):
        hop_matrix(top)


# ---------------------------------------------------------------- files


def test_node_round_trip(tmp_path):
    nodes = synthetic_nodes(20, seed=5)
    path = tmp_path / "nodes.csv"
    save_nodes(nodes, path)
    back = load_nodes(path)
    assert np.array_equal(back.lat, nodes.lat)
    assert np.array_equal(back.lon, nodes.lon)
    assert back.original_ids == tuple(range(20))


def test_node_round_trip_with_density(tmp_path):
    nodes = NodeSet(lat=np.array([40.6, 40.65]), lon=np.array([-74.0, -73.9]),
                    original_ids=(0, 1), density=np.array([10.0, 250.5]))
    path = tmp_path / "nodes.csv"
    save_nodes(nodes, path)
    back = load_nodes(path)
    assert back.density is not None
    assert np.array_equal(back.density, nodes.density)


def test_load_nodes_reindexes_sparse_ids(tmp_path):
    path = tmp_path / "nodes.csv"
    path.write_text("id,lat,lon\n7,40.6,-74.0\n3,40.7,-73.9\n")
    nodes = load_nodes(path)
    assert nodes.original_ids == (7, 3)
    assert nodes.lat[0] == 40.6  # input order preserved


def test_load_nodes_errors(tmp_path):
    bad_header = tmp_path / "a.csv"
    bad_header.write_text("lat,lon\n40.6,-74.0\n")
    with pytest.raises(ParseError):
        load_nodes(bad_header)

    bad_field = tmp_path / "b.csv"
    bad_field.write_text("id,lat,lon\n0,forty,-74.0\n")
    with pytest.raises(ParseError) as err:
        load_nodes(bad_field)
    assert ":2:" in str(err.value)  # 1-based line of the offending row

    dup = tmp_path / "c.csv"
    dup.write_text("id,lat,lon\n0,40.6,-74.0\n0,40.7,-73.9\n")
    with pytest.raises(ValidationError):
        load_nodes(dup)

    out_of_range = tmp_path / "d.csv"
    out_of_range.write_text("id,lat,lon\n0,95.0,-74.0\n")
    with pytest.raises(ValidationError):
        load_nodes(out_of_range)


def test_topology_round_trip(tmp_path):
    nodes = synthetic_nodes(15, seed=1)
    tree = build_emst(nodes)
    path = tmp_path / "edges.csv"
    save_topology(tree, path)
    back = load_topology(path)
    assert back.edges == tree.edges
    assert back.node_count == tree.node_count


def test_load_topology_rejects_non_tree(tmp_path):
    path = tmp_path / "edges.csv"
    # 3 nodes, 3 edges: a cycle, not a tree
    path.write_text("u,v,weight_m\n0,1,5.0\n1,2,5.0\n0,2,5.0\n")
    with pytest.raises(ValidationError):
        load_topology(path)


def test_synthetic_nodes_deterministic_and_bounded():
    a = synthetic_nodes(50, seed=4)
    b = synthetic_nodes(50, seed=4)
    assert np.array_equal(a.lat, b.lat) and np.array_equal(a.lon, b.lon)
    lat_lo, lat_hi, lon_lo, lon_hi = 40.57, 40.70, -74.04, -73.86
    assert np.all((a.lat >= lat_lo) & (a.lat <= lat_hi))
    assert np.all((a.lon >= lon_lo) & (a.lon <= lon_hi))
    c = synthetic_nodes(50, seed=5)
    assert not np.array_equal(a.lat, c.lat)

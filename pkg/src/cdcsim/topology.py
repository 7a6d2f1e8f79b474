"""Kiosk locations and the spanning-tree backhaul built over them.

A deployment is described by a set of geographic nodes (public kiosks or
similar street furniture). The wireless backhaul connecting them is modeled
as the Euclidean minimum spanning tree over pairwise great-circle distances,
and all latency bookkeeping downstream is done in tree hop counts.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError

EARTH_RADIUS_M = 6_371_000.0

# lat_min, lat_max, lon_min, lon_max. Roughly a borough-sized box.
DEFAULT_BBOX = (40.57, 40.70, -74.04, -73.86)


@dataclass(frozen=True)
class NodeSet:
    """Node coordinates with dense integer ids.

    Ids are 0..n-1 in input order; ``original_ids`` keeps whatever ids the
    source file used so exports can be traced back to it.
    """

    lat: np.ndarray
    lon: np.ndarray
    original_ids: tuple[int, ...]
    density: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.original_ids)


@dataclass(frozen=True)
class Topology:
    """A spanning tree over a NodeSet.

    Edges are (u, v, weight_m) with u < v, sorted lexicographically.
    """

    node_count: int
    edges: tuple[tuple[int, int, float], ...]

    def total_weight(self) -> float:
        return math.fsum(w for _, _, w in self.edges)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj


def geo_distance(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two WGS84 points (haversine)."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


def _haversine_row(lat: np.ndarray, lon: np.ndarray, i: int) -> np.ndarray:
    """Distances in meters from node i to every node, vectorized."""
    phi = np.radians(lat)
    dphi = np.radians(lat - lat[i])
    dlam = np.radians(lon - lon[i])
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi[i]) * np.cos(phi) * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def _euclidean_row(lat: np.ndarray, lon: np.ndarray, i: int) -> np.ndarray:
    return np.sqrt((lat - lat[i]) ** 2 + (lon - lon[i]) ** 2)


_METRICS = {"haversine": _haversine_row, "euclidean": _euclidean_row}


def load_nodes(path) -> NodeSet:
    """Read a node file (``id,lat,lon[,density]`` CSV with header).

    Ids may be sparse; they are re-indexed densely in input order and the
    original ids are retained on the result. Raises ParseError on malformed
    records and ValidationError on duplicate ids or out-of-range coordinates.
    """
    ids: list[int] = []
    lats: list[float] = []
    lons: list[float] = []
    dens: list[float] = []
    has_density = False
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: empty node file")
        cols = [c.strip().lower() for c in header]
        if cols[:3] != ["id", "lat", "lon"]:
            raise ParseError(path, 1, f"expected header id,lat,lon[,density], got {','.join(header)}")
        has_density = len(cols) >= 4 and cols[3] == "density"
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 3 + (1 if has_density else 0):
                raise ParseError(path, line_no, f"expected {3 + has_density} fields, got {len(row)}")
            try:
                ids.append(int(row[0]))
                lats.append(float(row[1]))
                lons.append(float(row[2]))
                if has_density:
                    dens.append(float(row[3]))
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
    if not ids:
        raise ValidationError(f"{path}: node file has no records")
    seen: set[int] = set()
    for node_id in ids:
        if node_id in seen:
            raise ValidationError(f"{path}: duplicate node id {node_id}")
        seen.add(node_id)
    lat = np.asarray(lats, dtype=float)
    lon = np.asarray(lons, dtype=float)
    if np.any(np.abs(lat) > 90.0):
        raise ValidationError(f"{path}: latitude outside [-90, 90]")
    if np.any(np.abs(lon) > 180.0):
        raise ValidationError(f"{path}: longitude outside [-180, 180]")
    density = np.asarray(dens, dtype=float) if has_density else None
    return NodeSet(lat=lat, lon=lon, original_ids=tuple(ids), density=density)


def save_nodes(nodes: NodeSet, path) -> None:
    """Write a node file with dense ids (and the density column if present)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if nodes.density is not None:
            writer.writerow(["id", "lat", "lon", "density"])
            for i in range(nodes.n):
                writer.writerow([i, repr(float(nodes.lat[i])), repr(float(nodes.lon[i])),
                                 repr(float(nodes.density[i]))])
        else:
            writer.writerow(["id", "lat", "lon"])
            for i in range(nodes.n):
                writer.writerow([i, repr(float(nodes.lat[i])), repr(float(nodes.lon[i]))])


def synthetic_nodes(n: int, seed: int, bbox: tuple[float, float, float, float] = DEFAULT_BBOX) -> NodeSet:
    """Scatter n nodes uniformly at random inside a lat/lon bounding box."""
    if n < 1:
        raise ValidationError("synthetic node count must be >= 1")
    lat_min, lat_max, lon_min, lon_max = bbox
    if not (lat_min < lat_max and lon_min < lon_max):
        raise ValidationError(f"degenerate bounding box {bbox}")
    rng = np.random.default_rng(seed)
    lat = rng.uniform(lat_min, lat_max, size=n)
    lon = rng.uniform(lon_min, lon_max, size=n)
    return NodeSet(lat=lat, lon=lon, original_ids=tuple(range(n)))


def build_emst(nodes: NodeSet, metric: str = "haversine") -> Topology:
    """Euclidean minimum spanning tree via Prim's algorithm.

    Distance ties are broken toward the lexicographically smallest
    (min(u, v), max(u, v)) edge so the result is deterministic. The
    ``euclidean`` metric treats coordinates as plane points, which is handy
    for hand-built test geometries.
    """
    if metric not in _METRICS:
        raise ValidationError(f"unknown distance metric {metric!r}")
    row_fn = _METRICS[metric]
    n = nodes.n
    if n == 1:
        return Topology(node_count=1, edges=())
    lat, lon = nodes.lat, nodes.lon
    ids = np.arange(n)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    dist = row_fn(lat, lon, 0)
    best = np.zeros(n, dtype=int)  # tree endpoint of the cheapest known crossing edge
    edges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        lo = np.minimum(best, ids)
        hi = np.maximum(best, ids)
        d = np.where(in_tree, np.inf, dist)
        m = d.min()
        cand = np.flatnonzero(d == m)
        if len(cand) > 1:
            cand = cand[np.lexsort((hi[cand], lo[cand]))]
        v = int(cand[0])
        w = float(dist[v])
        if w <= 0.0:
            raise ValidationError(
                f"nodes {int(best[v])} and {v} are coincident; edge weights must be positive")
        edges.append((int(lo[v]), int(hi[v]), w))
        in_tree[v] = True
        dv = row_fn(lat, lon, v)
        nlo = np.minimum(v, ids)
        nhi = np.maximum(v, ids)
        tie_better = (dv == dist) & ((nlo < lo) | ((nlo == lo) & (nhi < hi)))
        better = (~in_tree) & ((dv < dist) | tie_better)
        dist = np.where(better, dv, dist)
        best = np.where(better, v, best)
    edges.sort()
    return Topology(node_count=n, edges=tuple(edges))


def save_topology(top: Topology, path) -> None:
    """Write the edge list as ``u,v,weight_m`` CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["u", "v", "weight_m"])
        for u, v, w in top.edges:
            writer.writerow([u, v, repr(w)])


def load_topology(path, node_count: int | None = None) -> Topology:
    """Read an edge list written by save_topology."""
    edges: list[tuple[int, int, float]] = []
    max_node = -1
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:3]] != ["u", "v", "weight_m"]:
            raise ParseError(path, 1, "expected header u,v,weight_m")
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                u, v, w = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise ParseError(path, line_no, str(exc)) from None
            if u == v:
                raise ValidationError(f"{path}: self-loop at node {u}")
            edges.append((min(u, v), max(u, v), w))
            max_node = max(max_node, u, v)
    n = node_count if node_count is not None else max_node + 1
    top = Topology(node_count=n, edges=tuple(sorted(edges)))
    if len(top.edges) != n - 1:
        raise ValidationError(f"{path}: {len(top.edges)} edges for {n} nodes is not a spanning tree")
    return top


def hop_matrix(top: Topology) -> np.ndarray:
    """All-pairs hop counts on the tree via BFS from every node.

    Returns an (n, n) int matrix; symmetric with zero diagonal.
    """
    n = top.node_count
    adj = top.adjacency()
    hops = np.zeros((n, n), dtype=np.int32)
    for src in range(n):
        row = hops[src]
        seen = np.zeros(n, dtype=bool)
        seen[src] = True
        queue = deque([src])
        while queue:
            u = queue.popleft()
            du = row[u]
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    row[v] = du + 1
                    queue.append(v)
        if not seen.all():
            raise ValidationError("topology is not connected")
    return hops

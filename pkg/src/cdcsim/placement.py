"""Hierarchical placement of content-delivery cloudlets on the backhaul tree.

Starting from the whole tree as one community, the node whose
population-weighted hop count to everyone else is smallest becomes that
community's CDC. Communities are then split one at a time: the community
whose CDC still has the worst weighted hop count loses the edge between its
CDC and the CDC's cheapest neighbor, and the two fragments re-elect CDCs.
Recording the communities at every step yields placements for k = 1..k_max,
plus the average-hop curve used to pick k by the elbow rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .topology import Topology


@dataclass(frozen=True)
class Community:
    """A connected piece of the tree with an optional elected CDC."""

    members: tuple[int, ...]                 # sorted node ids
    edges: tuple[tuple[int, int], ...]       # internal edges, (u, v) with u < v
    cdc: int | None = None

    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class PlacementLevel:
    k: int
    communities: tuple[Community, ...]       # sorted by smallest member id
    split_edge: tuple[int, int] | None       # edge removed to reach this level


@dataclass(frozen=True)
class PlacementResult:
    levels: tuple[PlacementLevel, ...]
    selection_order: tuple[tuple[int, int], ...]  # (cdc node id, level it first appears)

    def level(self, k: int) -> PlacementLevel:
        if not 1 <= k <= len(self.levels):
            raise ValidationError(f"no placement level {k}; computed 1..{len(self.levels)}")
        return self.levels[k - 1]

    def max_k(self) -> int:
        return len(self.levels)


def weighted_hop_vector(community: Community, hops: np.ndarray, request_probs: np.ndarray) -> np.ndarray:
    """Per-member sum of hop counts to every other member, weighted by the
    members' global request probabilities.

    Paths between members of a connected subtree never leave it, so the
    global hop matrix restricted to the community is exactly the
    within-community hop count.
    """
    idx = np.asarray(community.members, dtype=int)
    sub = hops[np.ix_(idx, idx)]
    return sub.astype(float) @ request_probs[idx]


def select_cdc(community: Community, hops: np.ndarray, request_probs: np.ndarray) -> int:
    """The member minimizing the weighted hop vector; ties go to the smallest id."""
    values = weighted_hop_vector(community, hops, request_probs)
    return community.members[int(np.argmin(values))]  # members sorted, argmin takes first


def split_community(community: Community, hops: np.ndarray, request_probs: np.ndarray,
                    values: np.ndarray | None = None) -> tuple[Community, Community, tuple[int, int]]:
    """Split a community by removing the edge between its CDC and the CDC's
    neighbor with the smallest weighted hop count (ties to the smaller id).

    Returns the two fragments (cdc unset) ordered by smallest member, and the
    removed edge. The weighted hop vector from selection time may be passed
    in to avoid recomputing it.
    """
    if community.cdc is None:
        raise ValidationError("cannot split a community without an elected CDC")
    if community.size() < 2:
        raise ValidationError("cannot split a singleton community")
    if values is None:
        values = weighted_hop_vector(community, hops, request_probs)
    pos = {node: i for i, node in enumerate(community.members)}
    cdc = community.cdc
    neighbors = sorted(v if u == cdc else u for u, v in community.edges if cdc in (u, v))
    target = min(neighbors, key=lambda node: (values[pos[node]], node))
    cut = (min(cdc, target), max(cdc, target))

    adj: dict[int, list[int]] = {node: [] for node in community.members}
    for u, v in community.edges:
        if (u, v) == cut:
            continue
        adj[u].append(v)
        adj[v].append(u)
    side = _component(adj, cdc)
    part_a = sorted(side)
    part_b = sorted(set(community.members) - side)
    frags = []
    for part in (part_a, part_b):
        in_part = set(part)
        part_edges = tuple(e for e in community.edges if e != cut and e[0] in in_part)
        frags.append(Community(members=tuple(part), edges=part_edges))
    frags.sort(key=lambda c: c.members[0])
    return frags[0], frags[1], cut


def _component(adj: dict[int, list[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def hierarchical_placement(top: Topology, hops: np.ndarray, request_probs: np.ndarray,
                           k_max: int) -> PlacementResult:
    """Compute placements for every CDC count from 1 up to k_max.

    At each step the multi-node community whose CDC has the largest weighted
    hop count (ties to the community holding the smallest node id) is split.
    The walk stops early once every community is a singleton.
    """
    n = top.node_count
    if not 1 <= k_max <= n:
        raise ValidationError(f"k_max must be in 1..{n}, got {k_max}")
    root = Community(members=tuple(range(n)),
                     edges=tuple((u, v) for u, v, _ in top.edges))
    values = weighted_hop_vector(root, hops, request_probs)
    root = Community(root.members, root.edges, cdc=root.members[int(np.argmin(values))])
    cache: dict[tuple[int, ...], np.ndarray] = {root.members: values}

    communities = [root]
    levels = [PlacementLevel(k=1, communities=(root,), split_edge=None)]
    selections = [(root.cdc, 1)]
    cdc_seen = {root.cdc}

    for k in range(2, k_max + 1):
        splittable = [c for c in communities if c.size() >= 2]
        if not splittable:
            break
        best = None
        best_value = -1.0
        for c in communities:  # canonical order: smallest member id first
            if c.size() < 2:
                continue
            vals = cache[c.members]
            at_cdc = float(vals[c.members.index(c.cdc)])
            if best is None or at_cdc > best_value:
                best = c
                best_value = at_cdc
        frag_a, frag_b, cut = split_community(best, hops, request_probs, cache[best.members])
        halves = []
        for frag in (frag_a, frag_b):
            vals = weighted_hop_vector(frag, hops, request_probs)
            cdc = frag.members[int(np.argmin(vals))]
            frag = Community(frag.members, frag.edges, cdc=cdc)
            cache[frag.members] = vals
            halves.append(frag)
        communities = [c for c in communities if c is not best] + halves
        communities.sort(key=lambda c: c.members[0])
        levels.append(PlacementLevel(k=k, communities=tuple(communities), split_edge=cut))
        for frag in halves:
            if frag.cdc not in cdc_seen:
                cdc_seen.add(frag.cdc)
                selections.append((frag.cdc, k))

    return PlacementResult(levels=tuple(levels), selection_order=tuple(selections))


def avg_weighted_hops(communities, hops: np.ndarray, request_probs: np.ndarray) -> float:
    """Expected hop count from a requesting node to its community's CDC."""
    total = 0.0
    for c in communities:
        idx = np.asarray(c.members, dtype=int)
        total += float(request_probs[idx] @ hops[idx, c.cdc])
    return total


def placement_curve(result: PlacementResult, hops: np.ndarray,
                    request_probs: np.ndarray) -> list[tuple[int, float]]:
    """(k, avg_weighted_hops) for every computed level."""
    return [(lvl.k, avg_weighted_hops(lvl.communities, hops, request_probs))
            for lvl in result.levels]


def elbow_estimate(curve) -> int:
    """Pick the k whose point lies farthest from the chord joining the
    curve's endpoints; ties go to the smaller k.

    Needs at least three points. On a perfectly straight curve every interior
    point is equidistant (zero), so the first interior k comes back.
    """
    pts = [(float(k), float(y)) for k, y in curve]
    if len(pts) < 3:
        raise ValidationError("elbow estimate needs at least 3 curve points")
    (x0, y0), (x1, y1) = pts[0], pts[-1]
    dx, dy = x1 - x0, y1 - y0
    chord = (dx * dx + dy * dy) ** 0.5
    if chord == 0.0:
        raise ValidationError("degenerate curve: endpoints coincide")
    best_k, best_d = None, -1.0
    for x, y in pts[1:-1]:
        d = abs(dx * (y - y0) - dy * (x - x0)) / chord
        if d > best_d:
            best_k, best_d = int(x), d
    return best_k


def save_placement(level: PlacementLevel, path) -> None:
    """Write ``node_id,community_id,cdc_id`` rows; the community id is its
    smallest member."""
    import csv

    rows = []
    for c in level.communities:
        for node in c.members:
            rows.append((node, c.members[0], c.cdc))
    rows.sort()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node_id", "community_id", "cdc_id"])
        writer.writerows(rows)


def save_curve(curve, path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "avg_hops"])
        for k, y in curve:
            writer.writerow([k, repr(float(y))])

"""Request-driven simulation over a placed cloudlet topology.

Each request starts at a node, walks the tree to its community's CDC, and is
served locally, from a neighboring CDC (cooperative policies only), or from
the content origin. Popularity windows close every ``window`` requests, at
which point trackers smooth their counts, cooperating CDCs exchange
popularity/availability snapshots, scores refresh, and a metrics row is
recorded. Interests may reshuffle every ``epoch_len`` requests.

Two rng streams are split from the master seed: the workload stream (origin
latencies, interests, request sampling, reshuffles) and the policy stream
(random-replacement evictions). The request sequence is therefore identical
across policies for a fixed seed.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import demand, placement, topology, workload
from .config import INDEX_POLICIES, SCORE_POLICIES, SimConfig, validate_config
from .errors import ValidationError
from .policies import (PLFUCache, PopularityTracker, SLFUCache, beta_from_skew,
                       make_baseline)
from .workload import WorkloadSampler, mle_skew, shuffle_interests

log = logging.getLogger(__name__)


class RequestOutcome(NamedTuple):
    origin_node: int
    content: int
    served_by: str       # "local" | "neighbor" | "origin"
    latency: int
    admitted: bool
    evicted: int | None


@dataclass(frozen=True)
class WindowRecord:
    index: int
    requests: int
    avg_latency: float
    hit_local: float
    hit_neighbor: float
    origin_ratio: float
    exchanged_records: int


@dataclass
class MetricsSeries:
    windows: list[WindowRecord]
    total_requests: int = 0
    total_latency: int = 0
    total_local: int = 0
    total_neighbor: int = 0
    total_origin: int = 0
    total_exchanged: int = 0

    @property
    def avg_latency(self) -> float:
        return self.total_latency / self.total_requests if self.total_requests else 0.0

    @property
    def hit_ratio(self) -> float:
        if not self.total_requests:
            return 0.0
        return (self.total_local + self.total_neighbor) / self.total_requests

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["window", "requests", "avg_latency_hops", "hit_local",
                             "hit_neighbor", "origin_ratio", "exchanged_records"])
            for rec in self.windows:
                writer.writerow([rec.index, rec.requests, f"{rec.avg_latency:.6f}",
                                 f"{rec.hit_local:.6f}", f"{rec.hit_neighbor:.6f}",
                                 f"{rec.origin_ratio:.6f}", rec.exchanged_records])
            if self.total_requests:
                n = self.total_requests
                writer.writerow(["TOTAL", n, f"{self.total_latency / n:.6f}",
                                 f"{self.total_local / n:.6f}", f"{self.total_neighbor / n:.6f}",
                                 f"{self.total_origin / n:.6f}", self.total_exchanged])


@dataclass(frozen=True)
class Scenario:
    """Everything about a run that is fixed before the first request."""

    nodes: topology.NodeSet
    tree: topology.Topology
    hops: np.ndarray
    request_probs: np.ndarray
    catalog: workload.ContentCatalog
    k: int
    level: placement.PlacementLevel
    node_comm: list[int]
    cdc_nodes: list[int]
    node_cdc_hops: list[int]
    intra_delay: list[float]
    inter_hops: list[list[int]]            # community x community CDC hop counts
    neighbors: list[list[tuple[int, int]]]  # per community: (neighbor index, hops), nearest first
    neighborhood: int
    # dense matrices for the vectorized score refresh
    neigh_weight: np.ndarray               # (k, k) inter-CDC hops masked to the neighborhood
    neigh_mask: np.ndarray                 # (k, k) 0/1 neighborhood indicator
    cdc_request_prob: np.ndarray           # (k,)


def resolve_nodes(config: SimConfig) -> topology.NodeSet:
    """Nodes with their density attached, resolved from the config.

    The density source falls back from an explicit file, to the node file's
    density column, to the synthetic hotspot generator.
    """
    validate_config(config)
    if config.nodes:
        nodes = topology.load_nodes(config.nodes)
    else:
        nodes = topology.synthetic_nodes(config.synthetic_nodes, config.synthetic_seed,
                                         config.bbox())
    if config.density:
        density = demand.load_density(config.density, nodes)
    elif nodes.density is not None:
        density = demand.assign_density(nodes)
    else:
        spec = demand.SyntheticDensitySpec(hotspots=config.synthetic_hotspots,
                                           amplitude=config.density_amplitude,
                                           spread_m=config.density_spread_m,
                                           floor=config.density_floor,
                                           seed=config.synthetic_seed + 1)
        density = demand.synth_density(nodes, spec)
    return dataclasses.replace(nodes, density=density)


def resolve_inputs(config: SimConfig) -> tuple[topology.NodeSet, np.ndarray,
                                               topology.Topology, np.ndarray]:
    """Nodes, request probabilities, tree, and hop matrix for a config."""
    nodes = resolve_nodes(config)
    request_probs = demand.request_probabilities(nodes.density)
    tree = topology.build_emst(nodes, config.distance_metric)
    return nodes, request_probs, tree, topology.hop_matrix(tree)


def build_scenario(config: SimConfig) -> Scenario:
    """Load or generate the scenario: nodes, densities, tree, placement."""
    nodes, request_probs, tree, hops = resolve_inputs(config)
    n = nodes.n
    if config.cdc_count == 0:
        k_max = min(config.curve_kmax, n)
        if k_max < 3:
            raise ValidationError("elbow selection needs at least 3 nodes")
        result = placement.hierarchical_placement(tree, hops, request_probs, k_max)
        curve = placement.placement_curve(result, hops, request_probs)
        k = placement.elbow_estimate(curve)
        log.info("elbow rule picked k=%d", k)
    else:
        k = config.cdc_count
        if k > n:
            raise ValidationError(f"cdc_count {k} exceeds node count {n}")
        result = placement.hierarchical_placement(tree, hops, request_probs, k)
    level = result.level(k)

    node_comm = [0] * n
    for ci, community in enumerate(level.communities):
        for node in community.members:
            node_comm[node] = ci
    cdc_nodes = [c.cdc for c in level.communities]
    node_cdc_hops = [int(hops[node, cdc_nodes[node_comm[node]]]) for node in range(n)]
    intra_delay = []
    for community in level.communities:
        idx = np.asarray(community.members, dtype=int)
        mean_hops = float(hops[idx, community.cdc].mean())
        intra_delay.append(mean_hops if mean_hops > 0.0 else 1.0)

    if config.neighborhood > k - 1:
        raise ValidationError(f"neighborhood {config.neighborhood} needs at least "
                              f"{config.neighborhood + 1} CDCs, have {k}")
    inter = [[int(hops[cdc_nodes[i], cdc_nodes[j]]) for j in range(k)] for i in range(k)]
    neighbors: list[list[tuple[int, int]]] = []
    for i in range(k):
        ranked = sorted((j for j in range(k) if j != i),
                        key=lambda j: (inter[i][j], cdc_nodes[j]))
        neighbors.append([(j, inter[i][j]) for j in ranked[:config.neighborhood]])

    neigh_weight = np.zeros((k, k))
    neigh_mask = np.zeros((k, k))
    for i, row in enumerate(neighbors):
        for j, hop in row:
            neigh_weight[i, j] = hop
            neigh_mask[i, j] = 1.0

    return Scenario(nodes=nodes, tree=tree, hops=hops, request_probs=request_probs,
                    catalog=workload.default_catalog(config.contents),
                    k=k, level=level, node_comm=node_comm, cdc_nodes=cdc_nodes,
                    node_cdc_hops=node_cdc_hops, intra_delay=intra_delay,
                    inter_hops=inter, neighbors=neighbors,
                    neighborhood=config.neighborhood,
                    neigh_weight=neigh_weight, neigh_mask=neigh_mask,
                    cdc_request_prob=request_probs[np.asarray(cdc_nodes, dtype=int)])


class NetworkState:
    """Mutable per-run state: caches, trackers, snapshots, rng streams."""

    def __init__(self, scenario: Scenario, config: SimConfig):
        self.scenario = scenario
        self.config = config
        self.policy = config.policy
        self.is_score = config.policy in SCORE_POLICIES
        self.is_index = config.policy in INDEX_POLICIES
        self.cooperative = self.is_score or config.cooperative_lookup

        seq = np.random.SeedSequence(config.seed)
        workload_seed, policy_seed = seq.spawn(2)
        self.rng_workload = np.random.default_rng(workload_seed)
        self.rng_policy = np.random.default_rng(policy_seed)

        k = scenario.k
        m = config.contents
        self.origin_hops = self.rng_workload.integers(
            config.origin_min, config.origin_max + 1, size=k).tolist()
        self.interests = [workload.random_interest((config.s_min, config.s_max), m,
                                                   self.rng_workload)
                          for _ in range(k)]
        self.sampler = WorkloadSampler(self.interests, scenario.node_comm,
                                       scenario.request_probs, m)

        if self.is_index:
            self.caches = [PLFUCache(config.capacity) if config.policy == "plfu"
                           else SLFUCache(config.capacity) for _ in range(k)]
            self.trackers = [PopularityTracker(m, config.alpha) for _ in range(k)]
        else:
            self.caches = [make_baseline(config.policy, config.capacity) for _ in range(k)]
            self.trackers = None
        self.observations = ([deque(maxlen=config.mle_observations) for _ in range(k)]
                             if config.policy == "shat_lfu" else None)

        fixed_beta = config.beta_value()
        if config.policy == "shat_lfu":
            self.betas = [0.5] * k  # neutral until the first skew estimate lands
        elif fixed_beta is not None:
            self.betas = [fixed_beta] * k
        else:
            self.betas = [beta_from_skew(it.skew) for it in self.interests]
        if self.is_score and scenario.neighborhood == 0:
            log.info("empty neighborhood: score falls back to its local term")

        self.popularity_rows = [[0.0] * m for _ in range(k)]
        self.score_rows = [[0.0] * m for _ in range(k)]
        self.snapshot_avail: list[frozenset[int]] = [frozenset() for _ in range(k)]
        self.requests_done = 0
        self.trace_rows: list[tuple[int, int, int]] | None = None


def build_state(scenario: Scenario, config: SimConfig) -> NetworkState:
    return NetworkState(scenario, config)


def route_request(state: NetworkState, origin: int, content: int) -> RequestOutcome:
    """Serve one request and run the local cache's admission logic."""
    sc = state.scenario
    ci = sc.node_comm[origin]
    latency = sc.node_cdc_hops[origin]
    cache = state.caches[ci]
    admitted = False
    evicted = None

    if state.is_index:
        hit = content in cache.resident
        if hit:
            served = "local"
        else:
            served, latency = _fetch_remote(state, ci, content, latency)
        state.trackers[ci].record(content)
        if state.observations is not None:
            state.observations[ci].append(content)
        if not hit:
            if state.policy == "plfu":
                result = cache.admit(content, state.popularity_rows[ci])
            else:
                result = cache.admit(content, state.score_rows[ci])
            admitted, evicted = result.admitted, result.evicted
    else:
        result = cache.on_access(content, state.rng_policy)
        admitted, evicted = result.admitted, result.evicted
        if result.hit:
            served = "local"
        else:
            served, latency = _fetch_remote(state, ci, content, latency)

    return RequestOutcome(origin, content, served, latency, admitted, evicted)


def _fetch_remote(state: NetworkState, ci: int, content: int, latency: int) -> tuple[str, int]:
    """Resolve a local miss through the neighborhood snapshot or the origin."""
    if state.cooperative:
        snap = state.snapshot_avail
        for j, hop in state.scenario.neighbors[ci]:  # nearest first, ties on smaller id
            if content in snap[j]:
                if content in state.caches[j].resident:
                    return "neighbor", latency + hop
                # snapshot went stale; the neighbor forwards to the origin
                return "origin", latency + hop + state.origin_hops[j]
    return "origin", latency + state.origin_hops[ci]


def _close_window(state: NetworkState) -> int:
    """Smooth trackers, exchange snapshots, refresh scores. Returns the
    number of records exchanged."""
    sc = state.scenario
    k = sc.k
    if state.trackers is not None:
        for tracker in state.trackers:
            tracker.close_window()
        rows = [tracker.index_array() for tracker in state.trackers]
        state.popularity_rows = [row.tolist() for row in rows]
    exchanged = 0
    if state.cooperative:
        state.snapshot_avail = [frozenset(c.resident) for c in state.caches]
        if state.is_score:
            sizes = [int(t.seen.sum()) for t in state.trackers]
        else:
            sizes = [len(c.resident) for c in state.caches]
        for i in range(k):
            exchanged += sum(sizes[j] for j, _ in sc.neighbors[i])
    if state.is_score:
        state.score_rows = _refresh_scores(state, np.stack(rows))
    return exchanged


def _refresh_scores(state: NetworkState, pop: np.ndarray) -> list[list[float]]:
    sc = state.scenario
    k, m = pop.shape
    avail = np.zeros((k, m))
    for i, cache in enumerate(state.caches):
        if cache.resident:
            avail[i, list(cache.resident)] = 1.0
    origin = np.asarray(state.origin_hops, dtype=float)
    weighted = sc.cdc_request_prob[:, None] * pop
    detour = weighted * origin[:, None] * (1.0 - avail)
    if sc.neighborhood > 0:
        s_neigh = (sc.neigh_weight @ weighted + sc.neigh_mask @ detour) / sc.neighborhood
        betas = np.asarray(state.betas)
    else:
        s_neigh = np.zeros((k, m))
        betas = np.zeros(k)
    local_delay = np.asarray(sc.intra_delay)[:, None] + origin[:, None] * (1.0 - avail)
    s_local = weighted / local_delay
    scores = betas[:, None] * s_neigh + (1.0 - betas)[:, None] * s_local
    return scores.tolist()


def _estimate_skews(state: NetworkState) -> None:
    m = state.config.contents
    for ci, buffer in enumerate(state.observations):
        if buffer:
            state.betas[ci] = beta_from_skew(mle_skew(np.asarray(buffer), m))


def _shuffle(state: NetworkState) -> None:
    config = state.config
    state.interests = shuffle_interests(state.interests, (config.s_min, config.s_max),
                                        config.contents, state.rng_workload)
    state.sampler = WorkloadSampler(state.interests, state.scenario.node_comm,
                                    state.scenario.request_probs, config.contents)
    if state.policy == "slfu" and config.beta_value() is None:
        state.betas = [beta_from_skew(it.skew) for it in state.interests]


def simulate(config: SimConfig, scenario: Scenario | None = None
             ) -> tuple[MetricsSeries, NetworkState]:
    """Run the full request loop; returns the metrics and the final state."""
    validate_config(config)
    if scenario is None:
        scenario = build_scenario(config)
    state = build_state(scenario, config)

    replay = None
    if config.trace:
        rows = workload.read_trace(config.trace)
        n, m = scenario.nodes.n, config.contents
        for req in rows:
            if not 0 <= req.origin_node < n:
                raise ValidationError(f"trace origin {req.origin_node} outside 0..{n - 1}")
            if not 0 <= req.content < m:
                raise ValidationError(f"trace content {req.content} outside 0..{m - 1}")
        replay = (np.array([r.origin_node for r in rows], dtype=int),
                  np.array([r.content for r in rows], dtype=int))
        total = len(rows)
    else:
        total = config.requests

    w = config.window
    epoch = config.epoch_len
    is_shat = config.policy == "shat_lfu"
    mle_period = config.mle_period
    trace_rows: list[tuple[int, int, int]] | None = [] if config.export_trace else None

    metrics = MetricsSeries(windows=[])
    win_requests = win_latency = win_local = win_neighbor = win_origin = 0
    done = 0
    while done < total:
        stop = min(total, (done // w + 1) * w)
        if epoch > 0 and not config.trace:
            stop = min(stop, (done // epoch + 1) * epoch)
        seg = stop - done
        if replay is not None:
            origins, contents = replay[0][done:stop], replay[1][done:stop]
        else:
            origins, contents = state.sampler.sample_batch(state.rng_workload, seg)
        origin_list = origins.tolist()
        content_list = contents.tolist()
        for origin, content in zip(origin_list, content_list):
            outcome = route_request(state, origin, content)
            done += 1
            win_requests += 1
            win_latency += outcome.latency
            if outcome.served_by == "local":
                win_local += 1
            elif outcome.served_by == "neighbor":
                win_neighbor += 1
            else:
                win_origin += 1
            if trace_rows is not None:
                trace_rows.append((done, origin, content))
            if is_shat and done % mle_period == 0:
                _estimate_skews(state)
        state.requests_done = done
        if done % w == 0:
            exchanged = _close_window(state)
            _flush_window(metrics, win_requests, win_latency, win_local, win_neighbor,
                          win_origin, exchanged)
            win_requests = win_latency = win_local = win_neighbor = win_origin = 0
        if epoch > 0 and not config.trace and done % epoch == 0 and done < total:
            _shuffle(state)
    if win_requests:
        _flush_window(metrics, win_requests, win_latency, win_local, win_neighbor,
                      win_origin, 0)
    state.trace_rows = trace_rows
    return metrics, state


def _flush_window(metrics: MetricsSeries, requests: int, latency: int, local: int,
                  neighbor: int, origin: int, exchanged: int) -> None:
    metrics.windows.append(WindowRecord(
        index=len(metrics.windows) + 1, requests=requests,
        avg_latency=latency / requests, hit_local=local / requests,
        hit_neighbor=neighbor / requests, origin_ratio=origin / requests,
        exchanged_records=exchanged))
    metrics.total_requests += requests
    metrics.total_latency += latency
    metrics.total_local += local
    metrics.total_neighbor += neighbor
    metrics.total_origin += origin
    metrics.total_exchanged += exchanged


def run(config: SimConfig, scenario: Scenario | None = None) -> MetricsSeries:
    metrics, _ = simulate(config, scenario)
    return metrics

"""Cache replacement policies run at each content-delivery cloudlet.

Baselines (FIFO, random, MRU, LRU, LFU) decide purely from the local access
stream. The popularity-driven caches rank contents by a smoothed observation
index, and the score-driven cache additionally weighs what neighboring
cloudlets want and hold, trading local popularity against neighborhood cost
through a skew-dependent mixing weight.
"""

from __future__ import annotations

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError

log = logging.getLogger(__name__)

BASELINE_POLICIES = ("fifo", "rr", "mru", "lru", "lfu")


class AccessResult(NamedTuple):
    hit: bool
    admitted: bool
    evicted: int | None


class _Cache:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValidationError("cache capacity must be >= 1")
        self.capacity = capacity
        self.resident: set[int] = set()

    def __contains__(self, content: int) -> bool:
        return content in self.resident


class LRUCache(_Cache):
    def __init__(self, capacity):
        super().__init__(capacity)
        self._order: OrderedDict[int, None] = OrderedDict()

    def on_access(self, content: int, rng=None) -> AccessResult:
        if content in self.resident:
            self._order.move_to_end(content)
            return AccessResult(True, False, None)
        evicted = None
        if len(self.resident) >= self.capacity:
            evicted, _ = self._order.popitem(last=False)
            self.resident.discard(evicted)
        self._order[content] = None
        self.resident.add(content)
        return AccessResult(False, True, evicted)


class MRUCache(_Cache):
    # same recency bookkeeping as LRU, but the newest entry leaves
    def __init__(self, capacity):
        super().__init__(capacity)
        self._order: OrderedDict[int, None] = OrderedDict()

    def on_access(self, content: int, rng=None) -> AccessResult:
        if content in self.resident:
            self._order.move_to_end(content)
            return AccessResult(True, False, None)
        evicted = None
        if len(self.resident) >= self.capacity:
            evicted, _ = self._order.popitem(last=True)
            self.resident.discard(evicted)
        self._order[content] = None
        self.resident.add(content)
        return AccessResult(False, True, evicted)


class FIFOCache(_Cache):
    def __init__(self, capacity):
        super().__init__(capacity)
        self._queue: OrderedDict[int, None] = OrderedDict()

    def on_access(self, content: int, rng=None) -> AccessResult:
        if content in self.resident:
            return AccessResult(True, False, None)
        evicted = None
        if len(self.resident) >= self.capacity:
            evicted, _ = self._queue.popitem(last=False)
            self.resident.discard(evicted)
        self._queue[content] = None
        self.resident.add(content)
        return AccessResult(False, True, evicted)


class RRCache(_Cache):
    """Random replacement; eviction draws from the policy rng."""

    def on_access(self, content: int, rng=None) -> AccessResult:
        if content in self.resident:
            return AccessResult(True, False, None)
        evicted = None
        if len(self.resident) >= self.capacity:
            if rng is None:
                raise ValidationError("random replacement needs an rng")
            ordered = sorted(self.resident)
            evicted = ordered[int(rng.integers(len(ordered)))]
            self.resident.discard(evicted)
        self.resident.add(content)
        return AccessResult(False, True, evicted)


class LFUCache(_Cache):
    """Least frequently used; counts reset on eviction, ties evict the least
    recently used among the minimum-frequency residents."""

    def __init__(self, capacity):
        super().__init__(capacity)
        self._freq: dict[int, int] = {}
        self._last_use: dict[int, int] = {}
        self._clock = 0

    def on_access(self, content: int, rng=None) -> AccessResult:
        self._clock += 1
        if content in self.resident:
            self._freq[content] += 1
            self._last_use[content] = self._clock
            return AccessResult(True, False, None)
        evicted = None
        if len(self.resident) >= self.capacity:
            evicted = min(self.resident, key=lambda g: (self._freq[g], self._last_use[g]))
            self.resident.discard(evicted)
            del self._freq[evicted]
            del self._last_use[evicted]
        self.resident.add(content)
        self._freq[content] = 1
        self._last_use[content] = self._clock
        return AccessResult(False, True, evicted)


_BASELINES = {"lru": LRUCache, "mru": MRUCache, "fifo": FIFOCache, "rr": RRCache, "lfu": LFUCache}


def make_baseline(policy: str, capacity: int) -> _Cache:
    try:
        return _BASELINES[policy](capacity)
    except KeyError:
        raise ValidationError(f"unknown baseline policy {policy!r}") from None


class PopularityTracker:
    """Windowed observation counts smoothed into a popularity index.

    Per content the tracker keeps the count seen in the current window and a
    weighted moving average over closed windows: on close,
    smoothed = alpha * smoothed + (1 - alpha) * window_count for every
    content encountered so far, then the window counter resets.
    """

    def __init__(self, catalog_size: int, alpha: float):
        if not 0.0 <= alpha <= 1.0:
            raise ValidationError("smoothing weight alpha must lie in [0, 1]")
        self.catalog_size = catalog_size
        self.alpha = alpha
        self.window_index = 0
        self.window_counts = np.zeros(catalog_size, dtype=float)
        self.smoothed = np.zeros(catalog_size, dtype=float)
        self.seen = np.zeros(catalog_size, dtype=bool)

    def record(self, content: int) -> None:
        self.window_counts[content] += 1.0
        self.seen[content] = True

    def encountered(self) -> np.ndarray:
        return np.flatnonzero(self.seen)

    def close_window(self) -> None:
        # counts outside the encountered set are zero, so updating the whole
        # vector equals updating over the encountered set only
        a = self.alpha
        np.multiply(self.smoothed, a, out=self.smoothed)
        self.smoothed += (1.0 - a) * self.window_counts
        self.window_counts[:] = 0.0
        self.window_index += 1

    def index_array(self) -> np.ndarray:
        """Popularity per content: smoothed counts normalized over the
        encountered set; uniform over that set if all averages are zero."""
        total = self.smoothed.sum()
        if total > 0.0:
            return self.smoothed / total
        out = np.zeros(self.catalog_size)
        count = int(self.seen.sum())
        if count:
            out[self.seen] = 1.0 / count
        return out

    def popularity_index(self) -> dict[int, float]:
        arr = self.index_array()
        return {int(f): float(arr[f]) for f in np.flatnonzero(self.seen)}


class PLFUCache(_Cache):
    """Admits on popularity: a content enters only by beating the least
    popular resident, which then leaves (popularity ties evict the larger id)."""

    def admit(self, content: int, popularity) -> AccessResult:
        if content in self.resident:
            return AccessResult(True, False, None)
        if len(self.resident) < self.capacity:
            self.resident.add(content)
            return AccessResult(False, True, None)
        weakest = min(self.resident, key=lambda g: (popularity[g], -g))
        if popularity[content] > popularity[weakest]:
            self.resident.discard(weakest)
            self.resident.add(content)
            return AccessResult(False, True, weakest)
        return AccessResult(False, False, None)


class SLFUCache(_Cache):
    """Same admission shape as PLFUCache but ranked by the cooperative score."""

    def admit(self, content: int, scores) -> AccessResult:
        if content in self.resident:
            return AccessResult(True, False, None)
        if len(self.resident) < self.capacity:
            self.resident.add(content)
            return AccessResult(False, True, None)
        weakest = min(self.resident, key=lambda g: (scores[g], -g))
        if scores[content] > scores[weakest]:
            self.resident.discard(weakest)
            self.resident.add(content)
            return AccessResult(False, True, weakest)
        return AccessResult(False, False, None)


def beta_from_skew(skew: float) -> float:
    """Mixing weight between neighborhood and local score terms.

    Near-uniform demand (skew ~ 0) pushes the weight toward 1 (cooperate);
    strongly skewed demand pushes it toward 0 (cache locally).
    """
    return 1.0 - 1.0 / (1.0 + math.exp(-20.0 * (skew - 0.5)))


def inter_cdc_delay(i: int, j: int, available_at_j: bool, hop_delay: float,
                    origin_delay: float) -> float:
    """Cost of fetching through neighbor j: the inter-CDC hops, plus j's
    origin hops when j does not actually hold the content."""
    if i == j:
        raise ValidationError("inter-CDC delay is defined between distinct cloudlets")
    return hop_delay if available_at_j else hop_delay + origin_delay


@dataclass(frozen=True)
class NeighborSnapshot:
    request_prob: float
    popularity: float
    hop_delay: float
    available: bool
    origin_delay: float


@dataclass(frozen=True)
class ScoreInputs:
    neighbor_weight: float          # mixing weight (0 = purely local)
    request_prob: float             # at this cloudlet
    popularity: float               # of the content at this cloudlet
    intra_delay: float              # average hops from community members here
    available: bool                 # content resident here
    origin_delay: float             # hops to the origin from here
    neighbors: tuple[NeighborSnapshot, ...] = ()


def content_score(inputs: ScoreInputs) -> float:
    """The cooperative caching score.

    The neighborhood part averages request-weighted popularity times the
    (availability-aware) fetch cost over neighbors; the local part is the
    request-weighted popularity per hop of serving it here. An empty
    neighborhood with a positive mixing weight falls back to the local part.
    """
    beta = inputs.neighbor_weight
    if not 0.0 <= beta <= 1.0:
        raise ValidationError("neighbor weight must lie in [0, 1]")
    if not inputs.neighbors and beta > 0.0:
        log.debug("no neighbors; treating neighbor weight %.3f as 0", beta)
        beta = 0.0
    local_delay = inputs.intra_delay if inputs.available else inputs.intra_delay + inputs.origin_delay
    s_local = inputs.request_prob * inputs.popularity / local_delay
    if beta == 0.0:
        return s_local
    acc = 0.0
    for nb in inputs.neighbors:
        delay = nb.hop_delay if nb.available else nb.hop_delay + nb.origin_delay
        acc += nb.request_prob * nb.popularity * delay
    s_neigh = acc / len(inputs.neighbors)
    return beta * s_neigh + (1.0 - beta) * s_local

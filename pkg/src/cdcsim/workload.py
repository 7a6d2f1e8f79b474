"""Content catalog, per-community Zipf interests, and request sampling.

Every community ranks the shared catalog by its own permutation and draws
contents from a Zipf law with its own skew. Interests can be reshuffled at
epoch boundaries to model drifting tastes, and a maximum-likelihood estimator
recovers the skew from observed requests when a policy wants to adapt to it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError

DEFAULT_CATEGORIES = ("sports", "education", "politics", "movies")


@dataclass(frozen=True)
class ContentCatalog:
    """The shared set of content items; categories are labels only."""

    size: int
    categories: tuple[str, ...]
    category_of: np.ndarray  # (size,) index into categories

    def category_name(self, content: int) -> str:
        return self.categories[int(self.category_of[content])]


def default_catalog(size: int, categories: tuple[str, ...] = DEFAULT_CATEGORIES) -> ContentCatalog:
    if size < 1:
        raise ValidationError("catalog size must be >= 1")
    if not categories:
        raise ValidationError("need at least one category label")
    return ContentCatalog(size=size, categories=tuple(categories),
                          category_of=np.arange(size) % len(categories))


def zipf_pmf(skew: float, size: int) -> np.ndarray:
    """Probability of rank tau = 1..size under a Zipf law with the given skew.

    skew = 0 degenerates to the uniform distribution.
    """
    if size < 1:
        raise ValidationError("zipf support size must be >= 1")
    if skew < 0:
        raise ValidationError("zipf skew must be >= 0")
    weights = np.arange(1, size + 1, dtype=float) ** (-float(skew))
    return weights / weights.sum()


@dataclass(frozen=True)
class CommunityInterest:
    """One community's taste: a skew and a content-to-rank permutation."""

    skew: float
    rank_of: np.ndarray        # content id -> 0-based rank
    content_by_rank: np.ndarray  # 0-based rank -> content id

    @classmethod
    def make(cls, skew: float, rank_of: np.ndarray) -> "CommunityInterest":
        rank_of = np.asarray(rank_of, dtype=int)
        content_by_rank = np.empty_like(rank_of)
        content_by_rank[rank_of] = np.arange(len(rank_of))
        return cls(skew=float(skew), rank_of=rank_of, content_by_rank=content_by_rank)

    def content_pmf(self, size: int) -> np.ndarray:
        """Probability per content id (the rank pmf composed with the permutation)."""
        return zipf_pmf(self.skew, size)[self.rank_of]


def random_interest(skew_range: tuple[float, float], size: int, rng: np.random.Generator) -> CommunityInterest:
    lo, hi = skew_range
    if lo > hi or lo < 0:
        raise ValidationError(f"bad skew range {skew_range}")
    skew = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
    return CommunityInterest.make(skew, rng.permutation(size))


def shuffle_interests(interests, skew_range: tuple[float, float], size: int,
                      rng: np.random.Generator) -> list[CommunityInterest]:
    """Fresh skews and permutations for every community, in community order."""
    return [random_interest(skew_range, size, rng) for _ in interests]


@dataclass(frozen=True)
class Request:
    sequence_no: int
    origin_node: int
    content: int


class WorkloadSampler:
    """Draws (origin node, content) pairs.

    The origin is sampled from the request-probability vector; the content
    from the origin community's interest. Cumulative tables are precomputed,
    so a sampler is rebuilt whenever interests change.
    """

    def __init__(self, interests, node_community: np.ndarray, request_probs: np.ndarray,
                 catalog_size: int):
        self.interests = list(interests)
        self.catalog_size = catalog_size
        self._node_community = np.asarray(node_community, dtype=int)
        self._origin_cdf = np.cumsum(np.asarray(request_probs, dtype=float))
        # ranks are drawn from the rank pmf, then mapped to contents
        self._content_cdf = [np.cumsum(zipf_pmf(it.skew, catalog_size)) for it in self.interests]
        self._content_by_rank = [it.content_by_rank for it in self.interests]

    def sample_batch(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized draw of `size` (origin, content) pairs."""
        u_nodes = rng.random(size)
        origins = np.searchsorted(self._origin_cdf, u_nodes, side="right")
        np.clip(origins, 0, len(self._origin_cdf) - 1, out=origins)
        u_contents = rng.random(size)
        communities = self._node_community[origins]
        contents = np.empty(size, dtype=int)
        for ci in range(len(self.interests)):
            mask = communities == ci
            if not mask.any():
                continue
            ranks = np.searchsorted(self._content_cdf[ci], u_contents[mask], side="right")
            np.clip(ranks, 0, self.catalog_size - 1, out=ranks)
            contents[mask] = self._content_by_rank[ci][ranks]
        return origins, contents

    def sample(self, rng: np.random.Generator) -> tuple[int, int]:
        origins, contents = self.sample_batch(rng, 1)
        return int(origins[0]), int(contents[0])


def mle_skew(observations, catalog_size: int, lo: float = 0.0, hi: float = 4.0,
             tol: float = 1e-4) -> float:
    """Maximum-likelihood Zipf skew from observed content ids.

    Observed contents are ranked by descending frequency (ties: the smaller
    content id gets the better rank) and the Zipf likelihood over the full
    catalog size is maximized by golden-section search on [lo, hi]. With
    degenerate observations the estimate pins to the matching boundary.
    """
    obs = np.asarray(observations, dtype=int)
    if obs.size == 0:
        raise ValidationError("skew estimation needs at least one observation")
    if np.any(obs < 0) or np.any(obs >= catalog_size):
        raise ValidationError("observation outside the catalog")
    counts = np.bincount(obs, minlength=catalog_size)
    observed = np.flatnonzero(counts)
    order = observed[np.lexsort((observed, -counts[observed]))]
    n_per_rank = counts[order].astype(float)
    log_ranks = np.log(np.arange(1, len(order) + 1, dtype=float))
    rank_term = float(n_per_rank @ log_ranks)
    total = float(n_per_rank.sum())
    log_m = np.log(np.arange(1, catalog_size + 1, dtype=float))

    def loglik(skew: float) -> float:
        harmonic = np.exp(-skew * log_m).sum()
        return -skew * rank_term - total * math.log(harmonic)

    return _golden_max(loglik, lo, hi, tol)


def _golden_max(fn, lo: float, hi: float, tol: float) -> float:
    """Golden-section search for the maximum of a unimodal function.

    Monotone functions converge to the matching interval boundary.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(x2)
    return (a + b) / 2.0


def write_trace(path, rows) -> None:
    """Write ``sequence_no,origin_node,content_id`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sequence_no", "origin_node", "content_id"])
        for seq, origin, content in rows:
            writer.writerow([seq, origin, content])


def read_trace(path) -> list[Request]:
    requests: list[Request] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:3]] != ["sequence_no", "origin_node", "content_id"]:
            raise ParseError(path, 1, "expected header sequence_no,origin_node,content_id")
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                requests.append(Request(int(row[0]), int(row[1]), int(row[2])))
            except (ValueError, IndexError) as exc:
                raise ParseError(path, line_no, str(exc)) from None
    return requests

"""Population density around kiosks and the request probabilities it induces.

Each node gets a nonnegative density value, either from a density file, from
the optional fourth column of the node file, or from a synthetic generator
that drops Gaussian hotspots on top of a uniform floor. Request probabilities
are the densities normalized to sum to one; separate files (say, daytime and
nighttime counts) simply yield separate probability vectors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError
from .topology import NodeSet, geo_distance


@dataclass(frozen=True)
class SyntheticDensitySpec:
    """Parameters for the Gaussian-hotspot density generator."""

    hotspots: int = 3
    amplitude: float = 500.0  # peak value added at a hotspot center
    spread_m: float = 2000.0  # Gaussian sigma in meters
    floor: float = 10.0       # uniform baseline so no node is empty
    seed: int = 0


def load_density(path, nodes: NodeSet) -> np.ndarray:
    """Read an ``id,density`` CSV keyed by the node file's original ids.

    Every node must be covered; missing or unknown ids raise ValidationError.
    """
    values: dict[int, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["id", "density"]:
            raise ParseError(path, 1, "expected header id,density")
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                node_id, value = int(row[0]), float(row[1])
            except (ValueError, IndexError) as exc:
                raise ParseError(path, line_no, str(exc)) from None
            if node_id in values:
                raise ValidationError(f"{path}: duplicate density entry for id {node_id}")
            values[node_id] = value
    known = set(nodes.original_ids)
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValidationError(f"{path}: density entries for unknown node ids {unknown[:10]}")
    missing = sorted(known - set(values))
    if missing:
        raise ValidationError(f"{path}: missing density for node ids {missing[:10]}")
    density = np.array([values[orig] for orig in nodes.original_ids], dtype=float)
    _check_density(density, str(path))
    return density


def save_density(density: np.ndarray, nodes: NodeSet, path) -> None:
    """Write densities keyed by the nodes' original ids."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "density"])
        for orig, value in zip(nodes.original_ids, density):
            writer.writerow([orig, repr(float(value))])


def hotspot_nodes(n: int, spec: SyntheticDensitySpec) -> np.ndarray:
    """The node indices chosen as hotspot centers for a given spec.

    Exposed so callers (and tests) can recover which nodes anchor the bumps.
    """
    if spec.hotspots < 0:
        raise ValidationError("hotspot count must be >= 0")
    if spec.hotspots > n:
        raise ValidationError(f"cannot place {spec.hotspots} hotspots over {n} nodes")
    rng = np.random.default_rng(spec.seed)
    return rng.choice(n, size=spec.hotspots, replace=False)


def synth_density(nodes: NodeSet, spec: SyntheticDensitySpec) -> np.ndarray:
    """Evaluate floor-plus-Gaussian-hotspot density at every node.

    Hotspot centers are drawn (deterministically per seed) from the node
    locations themselves, so a single hotspot peaks exactly at its center
    node.
    """
    if spec.amplitude < 0 or spec.spread_m <= 0 or spec.floor < 0:
        raise ValidationError("density spec needs amplitude >= 0, spread > 0, floor >= 0")
    if spec.floor == 0 and spec.hotspots == 0:
        raise ValidationError("density would be all zero: no hotspots and zero floor")
    centers = hotspot_nodes(nodes.n, spec)
    density = np.full(nodes.n, float(spec.floor))
    two_sigma_sq = 2.0 * spec.spread_m ** 2
    for c in centers:
        d = np.array([geo_distance(nodes.lat[i], nodes.lon[i], nodes.lat[c], nodes.lon[c])
                      for i in range(nodes.n)])
        density += spec.amplitude * np.exp(-(d ** 2) / two_sigma_sq)
    return density


def assign_density(nodes: NodeSet, density_path=None, synthetic: SyntheticDensitySpec | None = None) -> np.ndarray:
    """Resolve the density vector from exactly one source.

    Priority is explicit: a density file, a synthetic spec, or the node
    file's own density column. Supplying both a file and a spec is an error.
    """
    if density_path is not None and synthetic is not None:
        raise ValidationError("give either a density file or a synthetic spec, not both")
    if density_path is not None:
        return load_density(density_path, nodes)
    if synthetic is not None:
        return synth_density(nodes, synthetic)
    if nodes.density is not None:
        density = np.array(nodes.density, dtype=float)
        _check_density(density, "node file density column")
        return density
    raise ValidationError("no density source: need a density file, a synthetic spec, "
                          "or a density column in the node file")


def request_probabilities(density: np.ndarray) -> np.ndarray:
    """Normalize densities into per-node request probabilities.

    The result preserves node order and sums to one; scaling every density
    by the same positive constant leaves it unchanged.
    """
    density = np.asarray(density, dtype=float)
    _check_density(density, "density vector")
    return density / density.sum()


def _check_density(density: np.ndarray, origin: str) -> None:
    if np.any(density < 0):
        raise ValidationError(f"{origin}: density values must be >= 0")
    if not np.any(density > 0):
        raise ValidationError(f"{origin}: at least one density must be positive")

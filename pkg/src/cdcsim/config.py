"""Flat key=value run configuration with CLI overrides.

The file format is one ``key=value`` per line; blank lines and ``#`` comments
are ignored. Serializing and re-parsing a config reproduces it exactly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ParseError, ValidationError

POLICIES = ("lru", "lfu", "fifo", "rr", "mru", "plfu", "slfu", "shat_lfu")
SCORE_POLICIES = ("slfu", "shat_lfu")
INDEX_POLICIES = ("plfu", "slfu", "shat_lfu")
SWEEP_AXES = ("cdc_count", "capacity", "neighborhood", "s", "policy")


@dataclass
class SimConfig:
    # scenario inputs
    nodes: str = ""                    # node file path; empty -> synthetic
    synthetic_nodes: int = 0           # node count when generating
    synthetic_seed: int = 0
    synthetic_hotspots: int = 3
    synthetic_bbox: str = "40.57,40.70,-74.04,-73.86"  # lat_min,lat_max,lon_min,lon_max
    density: str = ""                  # density file path; empty -> synthetic or node column
    density_floor: float = 10.0
    density_amplitude: float = 500.0
    density_spread_m: float = 2000.0
    distance_metric: str = "haversine"
    # placement
    cdc_count: int = 25                # 0 -> choose k by the elbow rule
    curve_kmax: int = 50
    neighborhood: int = 24
    # workload
    contents: int = 600
    s_min: float = 0.0
    s_max: float = 2.0
    epoch_len: int = 100_000           # requests between interest reshuffles; 0 -> never
    trace: str = ""                    # replay this trace instead of sampling
    export_trace: bool = False
    # caching
    policy: str = "slfu"
    capacity: int = 20
    alpha: float = 0.2                 # popularity smoothing weight
    beta: str = "auto"                 # mixing weight: "auto" (from skew) or a fixed float
    cooperative_lookup: bool = False   # let local-only policies query neighbors too
    mle_observations: int = 1000
    mle_period: int = 1000
    # run
    window: int = 100
    requests: int = 1_000_000
    seed: int = 0
    origin_min: int = 250
    origin_max: int = 500
    workers: int = 1
    plot: bool = True
    out: str = "out"

    def bbox(self) -> tuple[float, float, float, float]:
        try:
            parts = tuple(float(x) for x in self.synthetic_bbox.split(","))
        except ValueError:
            raise ValidationError(f"bad bounding box {self.synthetic_bbox!r}") from None
        if len(parts) != 4:
            raise ValidationError(f"bounding box needs 4 comma-separated values, got {self.synthetic_bbox!r}")
        return parts

    def beta_value(self) -> float | None:
        """The fixed mixing weight, or None when it tracks the skew."""
        if self.beta == "auto":
            return None
        try:
            value = float(self.beta)
        except ValueError:
            raise ValidationError(f"beta must be 'auto' or a number, got {self.beta!r}") from None
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"fixed beta must lie in [0, 1], got {value}")
        return value


_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}


def _coerce(name: str, raw: str):
    field = _FIELDS.get(name)
    if field is None:
        raise ValidationError(f"unknown config key {name!r}")
    raw = raw.strip()
    if field.type in ("int", int):
        if name == "cdc_count" and raw == "elbow":
            return 0
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(f"config key {name} expects an integer, got {raw!r}") from None
    if field.type in ("float", float):
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(f"config key {name} expects a number, got {raw!r}") from None
    if field.type in ("bool", bool):
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValidationError(f"config key {name} expects true/false, got {raw!r}")
    return raw


def parse_config_text(text: str, path: str = "<config>") -> SimConfig:
    config = SimConfig()
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(path, line_no, f"expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        try:
            setattr(config, key, _coerce(key, raw))
        except ValidationError as exc:
            raise ParseError(path, line_no, str(exc)) from None
    return config


def load_config(path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), str(path))


def config_text(config: SimConfig) -> str:
    lines = []
    for field in dataclasses.fields(SimConfig):
        value = getattr(config, field.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{field.name}={value}")
    return "\n".join(lines) + "\n"


def save_config(config: SimConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(config_text(config))


def apply_overrides(config: SimConfig, overrides: dict) -> SimConfig:
    """Apply CLI-style overrides (string or typed values) onto a config copy."""
    out = dataclasses.replace(config)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, str):
            value = _coerce(key, value)
        elif key not in _FIELDS:
            raise ValidationError(f"unknown config key {key!r}")
        setattr(out, key, value)
    return out


def validate_config(config: SimConfig) -> None:
    """Static checks that do not need the topology built yet."""
    if config.policy not in POLICIES:
        raise ValidationError(f"unknown policy {config.policy!r}; choose from {', '.join(POLICIES)}")
    if not config.nodes and config.synthetic_nodes < 1:
        raise ValidationError("no nodes: give a node file or synthetic_nodes >= 1")
    if config.contents < 1:
        raise ValidationError("contents must be >= 1")
    if config.capacity < 1:
        raise ValidationError("capacity must be >= 1")
    if config.window < 1:
        raise ValidationError("window must be >= 1")
    if config.requests < 0:
        raise ValidationError("requests must be >= 0")
    if config.neighborhood < 0:
        raise ValidationError("neighborhood must be >= 0")
    if config.cdc_count < 0:
        raise ValidationError("cdc_count must be >= 1, or 0 for the elbow rule")
    if config.curve_kmax < 3:
        raise ValidationError("curve_kmax must be >= 3 so an elbow exists")
    if not 0.0 <= config.alpha <= 1.0:
        raise ValidationError("alpha must lie in [0, 1]")
    config.beta_value()  # raises on malformed values
    if config.s_min < 0 or config.s_min > config.s_max:
        raise ValidationError(f"bad skew range [{config.s_min}, {config.s_max}]")
    if config.s_max > 4.0:
        raise ValidationError("skew above 4 is outside the supported estimation range")
    if config.epoch_len < 0:
        raise ValidationError("epoch_len must be >= 0 (0 disables reshuffles)")
    if config.origin_min < 0 or config.origin_min > config.origin_max:
        raise ValidationError(f"bad origin hop range [{config.origin_min}, {config.origin_max}]")
    if config.mle_observations < 1 or config.mle_period < 1:
        raise ValidationError("mle_observations and mle_period must be >= 1")
    if config.workers < 1:
        raise ValidationError("workers must be >= 1")
    if config.distance_metric not in ("haversine", "euclidean"):
        raise ValidationError(f"unknown distance metric {config.distance_metric!r}")
    config.bbox()

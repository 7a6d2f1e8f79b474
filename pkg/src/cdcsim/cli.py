"""Command-line front end.

Subcommands: ``topology`` (build and export the backhaul tree), ``place``
(hierarchical CDC placement and the k-selection curve), ``simulate`` (one
cache simulation run), and ``sweep`` (a grid of runs over one axis). Exit
status is 0 on success, 2 for usage/validation/input problems, 1 for
unexpected runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import engine, placement, topology
from .config import POLICIES, SWEEP_AXES, SimConfig, apply_overrides, load_config, save_config
from .errors import ValidationError


def _parse_synthetic(text: str) -> dict:
    """Parse ``n=200,seed=7,hotspots=3`` into config overrides."""
    mapping = {"n": "synthetic_nodes", "seed": "synthetic_seed", "hotspots": "synthetic_hotspots"}
    out: dict[str, str] = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in mapping:
            raise ValidationError(f"bad --synthetic field {part!r}; expected n=,seed=,hotspots=")
        out[mapping[key]] = value.strip()
    if "synthetic_nodes" not in out:
        raise ValidationError("--synthetic needs at least n=<count>")
    return out


def _gather_config(args) -> SimConfig:
    config = load_config(args.config) if getattr(args, "config", None) else SimConfig()
    overrides: dict[str, object] = {}
    if getattr(args, "synthetic", None):
        overrides.update(_parse_synthetic(args.synthetic))
    direct = {
        "nodes": "nodes", "density": "density", "metric": "distance_metric",
        "policy": "policy", "neighborhood": "neighborhood", "requests": "requests",
        "seed": "seed", "out": "out", "capacity": "capacity", "contents": "contents",
        "window": "window", "alpha": "alpha", "beta": "beta", "epoch_len": "epoch_len",
        "workers": "workers", "trace": "trace",
    }
    for arg_name, key in direct.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "k", None) is not None:
        overrides["cdc_count"] = "0" if args.k == "elbow" else args.k
    if getattr(args, "s", None) is not None:
        overrides["s_min"] = args.s
        overrides["s_max"] = args.s
    if getattr(args, "s_range", None) is not None:
        lo, _, hi = args.s_range.partition(",")
        overrides["s_min"] = lo
        overrides["s_max"] = hi
    if getattr(args, "export_trace", False):
        overrides["export_trace"] = True
    if getattr(args, "no_plot", False):
        overrides["plot"] = False
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value
    return apply_overrides(config, overrides)


def _out_dir(config: SimConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_topology(args) -> int:
    config = _gather_config(args)
    # carry the resolved density so the node file is self-contained downstream
    nodes = engine.resolve_nodes(config)
    tree = topology.build_emst(nodes, config.distance_metric)
    out = _out_dir(config)
    topology.save_nodes(nodes, out / "nodes.csv")
    topology.save_topology(tree, out / "edges.csv")
    total = tree.total_weight()
    avg = total / len(tree.edges) if tree.edges else 0.0
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["nodes", "edges", "avg_edge_m", "total_weight_m"])
        writer.writerow([nodes.n, len(tree.edges), f"{avg:.3f}", f"{total:.3f}"])
    print(f"{nodes.n} nodes, {len(tree.edges)} edges, avg edge {avg:.1f} m -> {out}")
    return 0


def cmd_place(args) -> int:
    config = _gather_config(args)
    scenario_inputs = engine.resolve_inputs(config)
    nodes, request_probs, tree, hops = scenario_inputs
    n = nodes.n
    k_req = config.cdc_count
    if k_req > n:
        raise ValidationError(f"cdc_count {k_req} exceeds node count {n}")
    k_max = min(config.curve_kmax, n)
    if k_req > 0:
        k_max = max(k_max, k_req)
    if k_req == 0 and k_max < 3:
        raise ValidationError("elbow selection needs at least 3 curve points")
    result = placement.hierarchical_placement(tree, hops, request_probs, k_max)
    curve = placement.placement_curve(result, hops, request_probs)
    k = placement.elbow_estimate(curve) if k_req == 0 else k_req
    out = _out_dir(config)
    placement.save_placement(result.level(k), out / "placement.csv")
    placement.save_curve(curve, out / "curve.csv")
    if config.plot:
        from . import report

        report.save_curve_figure(curve, k, out / "curve.svg")
    print(f"placed {k} CDCs over {n} nodes -> {out}")
    return 0


def cmd_simulate(args) -> int:
    config = _gather_config(args)
    metrics, state = engine.simulate(config)
    out = _out_dir(config)
    metrics.write_csv(out / "metrics.csv")
    save_config(config, out / "config.cfg")
    if state.trace_rows is not None:
        from .workload import write_trace

        write_trace(out / "trace.csv", state.trace_rows)
    if config.plot:
        from . import report

        report.save_latency_figure(metrics, out / "latency.svg",
                                   title=f"{config.policy}, k={state.scenario.k}")
    print(f"{metrics.total_requests} requests: avg latency {metrics.avg_latency:.2f} hops, "
          f"hit ratio {metrics.hit_ratio:.3f} -> {out}")
    return 0


def _axis_overrides(axis: str, value: str) -> dict[str, str]:
    if axis == "s":
        return {"s_min": value, "s_max": value}
    if axis == "policy":
        return {"policy": value}
    return {axis: value}


def _sweep_point(config: SimConfig) -> tuple[float, float]:
    metrics = engine.run(config)
    return metrics.avg_latency, metrics.hit_ratio


def cmd_sweep(args) -> int:
    config = _gather_config(args)
    axis = args.axis
    if axis not in SWEEP_AXES:
        raise ValidationError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ValidationError("--values is empty")
    if axis == "policy":
        policies = [""]
        for v in values:
            if v not in POLICIES:
                raise ValidationError(f"unknown policy {v!r}")
    else:
        policies = [p.strip() for p in (args.policies or config.policy).split(",")]
        for p in policies:
            if p not in POLICIES:
                raise ValidationError(f"unknown policy {p!r}")
    grid: list[tuple[str, str, SimConfig]] = []
    for value in values:
        for policy in policies:
            overrides = _axis_overrides(axis, value)
            if axis != "policy":
                overrides["policy"] = policy
            point = apply_overrides(config, overrides)
            grid.append((value, point.policy, point))
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_sweep_point, [cfg for _, _, cfg in grid]))
    else:
        results = [_sweep_point(cfg) for _, _, cfg in grid]
    rows = [(value, policy, latency, hit)
            for (value, policy, _), (latency, hit) in zip(grid, results)]
    out = _out_dir(config)
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["axis_value", "policy", "avg_latency", "hit_ratio"])
        for value, policy, latency, hit in rows:
            writer.writerow([value, policy, f"{latency:.6f}", f"{hit:.6f}"])
    if config.plot:
        from . import report

        report.save_sweep_figure(rows, axis, out / "sweep.svg")
    print(f"swept {axis} over {len(values)} values x {len(set(p for _, p, _, _ in rows))} "
          f"policies -> {out}")
    return 0


def _add_common(parser: argparse.ArgumentParser, sim: bool) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--nodes", help="node file (id,lat,lon[,density] CSV)")
    parser.add_argument("--synthetic", metavar="n=N,seed=S,hotspots=H",
                        help="generate nodes instead of loading them")
    parser.add_argument("--density", help="density file (id,density CSV)")
    parser.add_argument("--metric", choices=("haversine", "euclidean"),
                        help="edge length metric")
    parser.add_argument("--seed", help="master seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--no-plot", action="store_true", help="skip SVG figures")
    parser.add_argument("--set", action="append", metavar="key=value",
                        help="override any config key (repeatable)")
    if sim:
        parser.add_argument("--k", help="CDC count, or 'elbow'")
        parser.add_argument("--policy", help="cache policy (%s)" % ", ".join(POLICIES))
        parser.add_argument("--neighborhood", help="neighborhood size per CDC")
        parser.add_argument("--requests", help="number of requests")
        parser.add_argument("--capacity", help="cache slots per CDC")
        parser.add_argument("--contents", help="catalog size")
        parser.add_argument("--window", help="popularity window length")
        parser.add_argument("--alpha", help="popularity smoothing weight")
        parser.add_argument("--beta", help="score mixing weight: 'auto' or a number")
        parser.add_argument("--s", help="fix the community skew to one value")
        parser.add_argument("--s-range", metavar="LO,HI", help="skew range for communities")
        parser.add_argument("--epoch-len", dest="epoch_len",
                            help="requests between interest reshuffles (0 = never)")
        parser.add_argument("--trace", help="replay a workload trace file")
        parser.add_argument("--export-trace", action="store_true",
                            help="write the sampled workload trace")
        parser.add_argument("--workers", help="parallel runs for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdcsim",
                                     description="Cloudlet placement and cooperative "
                                                 "edge caching simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_top = sub.add_parser("topology", help="build the spanning-tree backhaul")
    _add_common(p_top, sim=False)
    p_top.set_defaults(func=cmd_topology)

    p_place = sub.add_parser("place", help="hierarchical CDC placement")
    _add_common(p_place, sim=False)
    p_place.add_argument("--k", help="CDC count, or 'elbow'")
    p_place.set_defaults(func=cmd_place)

    p_sim = sub.add_parser("simulate", help="run one cache simulation")
    _add_common(p_sim, sim=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="grid of simulation runs over one axis")
    _add_common(p_sweep, sim=True)
    p_sweep.add_argument("--axis", required=True,
                         help="sweep axis (%s)" % ", ".join(SWEEP_AXES))
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")
    p_sweep.add_argument("--policies", help="comma-separated policies to compare")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

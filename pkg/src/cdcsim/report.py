"""Figure rendering for the CLI report paths.

All charts are written as SVG next to the CSV they illustrate. The CSV stays
authoritative; figures are a convenience. Rendering is headless and
deterministic (fixed hash salt, no embedded timestamps), so rerunning a
command reproduces the files byte for byte.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cdcsim"

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def save_latency_figure(metrics, path, title: str = "") -> None:
    """Average latency per window against cumulative requests."""
    xs, ys = [], []
    seen = 0
    for rec in metrics.windows:
        seen += rec.requests
        xs.append(seen)
        ys.append(rec.avg_latency)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(xs, ys, lw=1.2)
    ax.set_xlabel("requests")
    ax.set_ylabel("avg latency (hops)")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_curve_figure(curve, chosen_k, path) -> None:
    """The k vs average weighted hops placement curve, elbow marked."""
    ks = [k for k, _ in curve]
    ys = [y for _, y in curve]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, ys, marker="o", ms=3, lw=1.2)
    if chosen_k is not None:
        ax.axvline(chosen_k, color="tab:red", ls="--", lw=1.0, label=f"k = {chosen_k}")
        ax.legend()
    ax.set_xlabel("CDC count k")
    ax.set_ylabel("avg weighted hops")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_sweep_figure(rows, axis: str, path) -> None:
    """One latency line per policy across the swept axis.

    ``rows`` are (axis_value, policy, avg_latency, hit_ratio) tuples.
    """
    by_policy: dict[str, list[tuple[float, float]]] = {}
    for value, policy, latency, _ in rows:
        by_policy.setdefault(policy, []).append((value, latency))
    fig, ax = plt.subplots(figsize=(7, 4))
    if axis == "policy":
        names = [p for p in by_policy]
        ax.bar(names, [pts[0][1] for pts in by_policy.values()])
    else:
        for policy, pts in by_policy.items():
            xs = [float(v) for v, _ in pts]
            ys = [y for _, y in pts]
            ax.plot(xs, ys, marker="o", ms=3, lw=1.2, label=policy)
        ax.legend()
        ax.set_xlabel(axis)
    ax.set_ylabel("avg latency (hops)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)

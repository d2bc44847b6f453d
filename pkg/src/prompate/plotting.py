"""Figures for the ``report`` command.  Uses the non-interactive Agg backend."""

from __future__ import annotations

import json
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _label(value: str) -> str:
    try:
        v = json.loads(value)
    except (TypeError, ValueError):
        return str(value)
    if isinstance(v, list) and len(set(v)) == 1:
        return str(v[0])
    return str(v)


def plot_sweep(rows: list[dict], path) -> None:
    """Student accuracy (mean and std) and epsilon per swept value, one panel per axis."""
    by_axis = defaultdict(list)
    for row in rows:
        by_axis[row["axis"]].append(row)
    fig, axes = plt.subplots(len(by_axis), 1, figsize=(6, 3.2 * len(by_axis)), squeeze=False)
    for ax, (axis, group) in zip(axes[:, 0], sorted(by_axis.items())):
        labels = [_label(r["value"]) for r in group]
        pos = range(len(group))
        means = [float(r["accuracy_mean_pct"]) for r in group]
        stds = [float(r["accuracy_std_pct"]) for r in group]
        ax.errorbar(pos, means, yerr=stds, marker="o", capsize=3, label="student accuracy")
        ax.set_xticks(list(pos), labels)
        ax.set_xlabel(axis)
        ax.set_ylabel("accuracy (%)")
        eps = [r.get("epsilon") for r in group]
        if all(e not in (None, "") for e in eps):
            twin = ax.twinx()
            twin.plot(list(pos), [float(e) for e in eps], "s--", color="tab:red", label="epsilon")
            twin.set_ylabel("epsilon")
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_report(report: dict, path) -> None:
    """Per-repeat student accuracy next to the query funnel of one run."""
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.5))
    accs = report["accuracies_pct"]
    left.bar([str(s)[-6:] for s in report["repeat_seeds"]], accs, color="tab:blue")
    left.axhline(report["accuracy_mean_pct"], color="k", ls="--", lw=1)
    left.set_xlabel("student seed (last digits)")
    left.set_ylabel("test accuracy (%)")
    left.set_ylim(0, 100)
    right.bar(["queries", "answered"], [report["queries"], report["answered_queries"]],
              color=["tab:gray", "tab:green"])
    title = "accounting off" if report["epsilon"] is None else (
        f"epsilon = {report['epsilon']} at delta = {report['delta']:g}")
    right.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

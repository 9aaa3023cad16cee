"""Delimited output and figures rendered from run artifacts.

The run and bench commands drop a labels.csv next to per-slice JSON
reports, plus two PNG figures: signal-class counts per slice and the
log-scaled popularity of the most popular topics. Archived stretches of a
series carry no values and appear as gaps (a log axis cannot show zero).
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CSV_COLUMNS = [
    "slice_index", "start", "end", "kind", "topic", "label",
    "popularity", "p10", "p50", "slope", "top_words",
]


def write_labels_csv(reports: list[dict[str, Any]], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for report in reports:
            for lab in report["labels"]:
                writer.writerow(
                    [
                        report["slice_index"], report["start"], report["end"],
                        "automatic", lab["topic_id"], lab["label"],
                        repr(lab["popularity"]), repr(lab["p10"]), repr(lab["p50"]),
                        "" if lab["slope"] is None else repr(lab["slope"]),
                        "|".join(lab["top_words"]),
                    ]
                )
            for lab in report.get("zeroshot", []):
                writer.writerow(
                    [
                        report["slice_index"], report["start"], report["end"],
                        "zeroshot", lab["name"], lab["label"],
                        repr(lab["popularity"]), repr(lab["p10"]), repr(lab["p50"]),
                        "" if lab["slope"] is None else repr(lab["slope"]),
                        "",
                    ]
                )


def signal_counts_figure(reports: list[dict[str, Any]], path: Path) -> None:
    slices = [r["slice_index"] for r in reports]
    counts = {label: [] for label in ("noise", "weak", "strong")}
    topic_counts = []
    for report in reports:
        by_label = {"noise": 0, "weak": 0, "strong": 0}
        for lab in report["labels"]:
            by_label[lab["label"]] += 1
        for label in counts:
            counts[label].append(by_label[label])
        topic_counts.append(report["topics_extracted"])

    fig, ax = plt.subplots(figsize=(9, 5))
    ax.plot(slices, counts["noise"], color="#999999", marker=".", label="noise")
    ax.plot(slices, counts["weak"], color="#e6a23c", marker="o", label="weak")
    ax.plot(slices, counts["strong"], color="#c0392b", marker="s", label="strong")
    ax.plot(slices, topic_counts, color="#4a7ebb", linestyle="--", label="topics per slice")
    ax.set_xlabel("slice")
    ax.set_ylabel("count")
    ax.set_title("Signal classes per slice")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _series_with_gaps(values: dict[str, float], first: int, last: int) -> np.ndarray:
    series = np.full(last - first + 1, np.nan)
    for key, value in values.items():
        s = int(key)
        if first <= s <= last:
            series[s - first] = value
    return series


def popularity_figure(
    snapshot: dict[str, Any], path: Path, top_k: int = 8
) -> None:
    """Log-scaled popularity of the top-k topics by peak value."""
    engine_state = snapshot["engine"]
    current = engine_state["current_slice"]
    topics = engine_state["topics"]
    ranked = sorted(
        topics,
        key=lambda t: (-max(t["values"].values(), default=0.0), t["topic_id"]),
    )[:top_k]

    fig, ax = plt.subplots(figsize=(9, 5))
    for topic in ranked:
        series = _series_with_gaps(topic["values"], 0, current)
        words = topic["word_history"][-1][1][:3] if topic["word_history"] else []
        name = ", ".join(w for w, _ in words) or f"topic {topic['topic_id']}"
        ax.plot(range(current + 1), series, marker=".", label=f"{topic['topic_id']}: {name}")
    for zs in snapshot.get("zeroshot", []):
        if not zs["values"]:
            continue
        series = _series_with_gaps(zs["values"], 0, current)
        ax.plot(range(current + 1), series, linestyle=":", label=f"zs: {zs['name']}")
    ax.set_yscale("log")
    ax.set_xlabel("slice")
    ax.set_ylabel("popularity (log)")
    ax.set_title("Topic popularity")
    ax.legend(fontsize=7, loc="upper left")
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_run_outputs(reports: list[dict[str, Any]], snapshot: dict[str, Any], paths) -> None:
    write_labels_csv(reports, paths.labels_csv)
    signal_counts_figure(reports, paths.figures / "signal_counts.png")
    popularity_figure(snapshot, paths.figures / "popularity.png")

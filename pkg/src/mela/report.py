"""Convergence figures rendered to self-contained vector files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .store import convergence_points


def emit_convergence_plot(
    run_dirs: list[str | Path],
    out: str | Path,
    labels: list[str] | None = None,
    title: str = "Best fitness vs. solutions generated",
) -> Path:
    """Plot best-so-far fitness against solutions generated, one series per
    run, into an SVG (or whatever the extension names)."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    series = [(run_dir, convergence_points(run_dir)) for run_dir in run_dirs]
    if all(not points for _, points in series):
        raise ValueError("no convergence traces found in the given run directories")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, (run_dir, points) in enumerate(series):
        if not points:
            continue
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        label = labels[i] if labels and i < len(labels) else Path(run_dir).name
        ax.plot(xs, ys, drawstyle="steps-post", label=label)
    ax.set_xlabel("solutions generated")
    ax.set_ylabel("best fitness")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    return out

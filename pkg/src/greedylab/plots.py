"""Matplotlib rendering of error-decay reports to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_error_decay(series: list[dict], path, title: str = "greedy error decay") -> None:
    """Render log-log error curves to ``path``.

    Each entry of ``series`` is a dict with keys ``label``, ``m``,
    ``error``, and optionally ``bound`` (per-step guarantee overlay,
    NaN/inf entries skipped) and ``fit`` (a (slope, intercept) pair in
    natural logs, drawn as a dotted power law).
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for entry in series:
        ms = np.asarray(entry["m"], dtype=float)
        errors = np.asarray(entry["error"], dtype=float)
        positive = errors > 0.0
        (line,) = ax.loglog(
            ms[positive], errors[positive], marker="o", markersize=3, linewidth=1.0,
            label=entry["label"],
        )
        bound = entry.get("bound")
        if bound is not None:
            bound = np.asarray(bound, dtype=float)
            ok = np.isfinite(bound)
            if ok.any():
                ax.loglog(ms[ok], bound[ok], linestyle="--", linewidth=1.0,
                          color=line.get_color(), alpha=0.6)
        fit = entry.get("fit")
        if fit is not None:
            slope, intercept = fit
            ax.loglog(ms[positive], np.exp(intercept) * ms[positive] ** slope,
                      linestyle=":", linewidth=1.0, color=line.get_color(), alpha=0.8)
    ax.set_xlabel("iteration m")
    ax.set_ylabel("error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

"""Chart rendering from simulation traces: output tracking, estimation
errors, and the attack timeline.  File-emitting and non-interactive."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .engine import SimTrace


def _denial_spans(mask: np.ndarray):
    """Contiguous [start, stop) spans where the boolean mask holds."""
    spans = []
    start = None
    for k, denied in enumerate(mask):
        if denied and start is None:
            start = k
        elif not denied and start is not None:
            spans.append((start, k))
            start = None
    if start is not None:
        spans.append((start, len(mask)))
    return spans


def render_charts(trace: SimTrace, out_dir, leader: np.ndarray | None = None) -> list[Path]:
    """Write the three standard charts and return their paths.

    ``leader`` overrides the reference trajectory; traces loaded from disk
    carry none, so pass the scenario's trajectory to overlay it.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if leader is None:
        leader = trace.leader
    steps = np.arange(trace.steps)
    paths = []

    # output trajectories per channel, leader overlay when present
    fig, axes = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    for ch, ax in enumerate(axes):
        for i in range(trace.n_agents):
            ax.plot(steps, trace.y[:, i, ch], lw=1.0, label=f"agent {i + 1}")
        if leader is not None:
            ax.plot(steps[: len(leader)], leader[:, ch], "k--", lw=1.5, label="reference")
        ax.set_ylabel(f"output channel {ch + 1}")
        ax.grid(alpha=0.3)
    axes[0].legend(ncol=4, fontsize=8)
    axes[1].set_xlabel("step")
    fig.suptitle("Output trajectories")
    fig.tight_layout()
    path = out_dir / "outputs.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    # estimation-error norms per agent
    fig, ax = plt.subplots(figsize=(9, 3.6))
    err = np.linalg.norm(trace.chi_tilde, axis=2)
    for i in range(trace.n_agents):
        ax.plot(steps, err[:, i], lw=1.0, label=f"agent {i + 1}")
    ax.set_xlabel("step")
    ax.set_ylabel("estimation error norm")
    ax.grid(alpha=0.3)
    ax.legend(ncol=4, fontsize=8)
    fig.suptitle("Observer estimation errors")
    fig.tight_layout()
    path = out_dir / "estimation_errors.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    # attack timeline: injected magnitude where delivered, denial spans shaded
    fig, ax = plt.subplots(figsize=(9, 3.6))
    injected = np.linalg.norm(trace.ya - trace.y, axis=2)  # NaN while denied
    for i in range(trace.n_agents):
        ax.plot(steps, injected[:, i], lw=0.8, label=f"agent {i + 1}")
    denied_any = (trace.h == 0).any(axis=(1, 2))
    for start, stop in _denial_spans(denied_any):
        ax.axvspan(start, stop, color="0.8", zorder=0)
    ax.set_xlabel("step")
    ax.set_ylabel("injected signal norm")
    ax.grid(alpha=0.3)
    ax.legend(ncol=4, fontsize=8)
    fig.suptitle("Attack timeline (shaded: denial intervals)")
    fig.tight_layout()
    path = out_dir / "attacks.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    return paths

"""Figure rendering for run reports: tracking, error norms, controls, faults.

Figures are written next to the CSV output; plotting is strictly post-hoc.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_figures"]


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_figures(log, scenario, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    m = log.x.shape[1]
    d = log.x.shape[2]
    n = scenario.followers[0].n
    n_in = log.u.shape[2]
    t = log.t

    # Output channels vs the leader reference
    fig, axes = plt.subplots(n, 1, figsize=(7, 2.4 * n), squeeze=False)
    for ch in range(n):
        ax = axes[ch][0]
        for i in range(m):
            ax.plot(t, log.x[:, i, ch], label=f"agent {i+1}")
        ax.plot(t, log.xi0[:, ch], "k--", label="leader")
        ax.set_ylabel(f"output {ch+1}")
        ax.grid(alpha=0.3)
        if ch == 0:
            ax.legend(loc="best", fontsize=8)
    axes[-1][0].set_xlabel("t [s]")
    paths.append(_save(fig, out / "outputs.png"))

    # Estimation and tracking error norms
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6))
    ax1.semilogy(t, np.linalg.norm(log.leps_delta, axis=1), label="|eps_delta|")
    ax1.semilogy(t, np.linalg.norm(log.leps_s, axis=1), label="|eps_S|")
    ax1.semilogy(t, np.linalg.norm(log.leps_xi, axis=1), label="|eps_xi|")
    ax1.set_ylabel("local estimation errors")
    ax1.grid(alpha=0.3)
    ax1.legend(fontsize=8)
    for i in range(m):
        ax2.plot(t, log.track_true[:, i], label=f"agent {i+1}")
    ax2.set_ylabel("formation tracking error")
    ax2.set_xlabel("t [s]")
    ax2.grid(alpha=0.3)
    ax2.legend(fontsize=8)
    paths.append(_save(fig, out / "errors.png"))

    # Applied controls per input channel
    fig, axes = plt.subplots(n_in, 1, figsize=(7, 2.0 * n_in), squeeze=False)
    for ch in range(n_in):
        ax = axes[ch][0]
        for i in range(m):
            ax.step(t, log.u[:, i, ch], where="post", label=f"agent {i+1}")
        ax.set_ylabel(f"u_{ch+1}")
        ax.grid(alpha=0.3)
        if ch == 0:
            ax.legend(loc="best", fontsize=8)
    axes[-1][0].set_xlabel("t [s]")
    paths.append(_save(fig, out / "controls.png"))

    if log.fault_traces:
        fig, ax = plt.subplots(figsize=(7, 3))
        for name, trace in log.fault_traces.items():
            ax.plot(t, trace, label=name)
        ax.set_xlabel("t [s]")
        ax.set_ylabel("link fault")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        paths.append(_save(fig, out / "faults.png"))
    return paths

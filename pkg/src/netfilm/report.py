"""Render figures from a finished run directory, next to its CSV output.

The run path itself never plots; this module reads the delimited files
(meta.yaml, diagnostics.csv, snap_*.csv) back and writes two PNGs:

  profiles.png     height over global arc length for every stored snapshot
  diagnostics.png  mass drift, energy decay with its algebraic bound,
                   entropy, and height extrema over time
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import yaml

from .config import parse_config
from .errors import ConfigError
from .functionals import decay_bound_check
from .graph import build_graph
from .grid import build_grid
from .io import read_diagnostics, read_snapshot

DPI = 150


def load_run(rundir):
    """Rebuild grid, records and snapshots from a run directory."""
    rundir = Path(rundir)
    meta_path = rundir / "meta.yaml"
    if not meta_path.exists():
        raise ConfigError(f"{rundir}: no meta.yaml; not a run directory?")
    meta = yaml.safe_load(meta_path.read_text())
    spec = parse_config(meta["config"], name=str(meta_path))
    grid = build_grid(build_graph(spec.graph), spec.cells)
    diag_meta, records = read_diagnostics(rundir / "diagnostics.csv")
    snaps = []
    for path in sorted(rundir.glob("snap_*.csv")):
        t, step, _, u = read_snapshot(path, grid)
        snaps.append((t, step, u))
    return spec, grid, diag_meta, records, snaps


def render_profiles(grid, snaps, path):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    offsets = grid.edge_offsets
    cmap = plt.get_cmap("viridis")
    tmax = max(t for t, _, _ in snaps) or 1.0
    for t, _, u in snaps:
        color = cmap(0.85 * t / tmax)
        for j, name in enumerate(grid.graph.edge_names):
            nj = grid.cells[j]
            x = offsets[j] + np.arange(nj + 1) * grid.dx[j]
            label = f"t={t:.4g}" if j == 0 else None
            ax.plot(x, u[grid.edge_nodes[j]], color=color, lw=1.2, label=label)
    for j in range(1, len(grid.graph.edges)):
        ax.axvline(offsets[j], color="0.8", lw=0.8, ls="--", zorder=0)
    ax.set_xlabel("arc length along edges")
    ax.set_ylabel("film height u")
    ax.set_title("height profiles")
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def render_diagnostics(records, diag_meta, path):
    t = np.array([r.t for r in records])
    m = np.array([r.mass for r in records])
    e = np.array([r.energy for r in records])
    s = np.array([r.entropy for r in records])
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5))

    ax = axes[0, 0]
    drift = np.abs(m - m[0]) / max(abs(m[0]), 1e-300)
    ax.plot(t, drift, lw=1.2)
    ax.set_yscale("log")
    ax.set_title("relative mass drift")

    ax = axes[0, 1]
    ax.plot(t, e, lw=1.2, label="energy")
    n = diag_meta.get("n", 1.0)
    if 1.0 <= n <= 2.0 and e[0] > 0:
        rep = decay_bound_check(records, n, total_measure=diag_meta["total_measure"])
        if rep.applicable:
            bound = e[0] / (1.0 + (9.0 / rep.c_value) * e[0] * (t - t[0]))
            ax.plot(t, bound, lw=1.0, ls="--", label="algebraic bound")
    ax.set_yscale("log")
    ax.set_title("energy decay")
    ax.legend(fontsize=8)

    ax = axes[1, 0]
    ax.plot(t, s, lw=1.2)
    ax.set_title("entropy")

    ax = axes[1, 1]
    ax.plot(t, [r.min_u for r in records], lw=1.2, label="min u")
    ax.plot(t, [r.max_u for r in records], lw=1.2, label="max u")
    ax.set_title("height extrema")
    ax.legend(fontsize=8)

    for ax in axes.flat:
        ax.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def render_run_report(rundir, outdir=None):
    """Write profiles.png and diagnostics.png for a run; returns the paths."""
    rundir = Path(rundir)
    outdir = Path(outdir) if outdir else rundir
    outdir.mkdir(parents=True, exist_ok=True)
    _, grid, diag_meta, records, snaps = load_run(rundir)
    written = []
    if snaps:
        p = outdir / "profiles.png"
        render_profiles(grid, snaps, p)
        written.append(p)
    if records:
        p = outdir / "diagnostics.png"
        render_diagnostics(records, diag_meta, p)
        written.append(p)
    return written

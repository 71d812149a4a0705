"""Delimited text output: snapshots, diagnostics, operator triplets.

All floats are written with 17 significant digits so a parsed file
reproduces the original float64 values bit for bit. Every file header
carries the config hash; the diagnostics header also carries the scalars a
standalone decay check needs (total measure, n, eps, entropy base).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .functionals import DiagnosticsRecord
from .grid import GraphGrid

DIAG_COLUMNS = ("t", "mass", "energy", "entropy", "min_u", "max_u",
                "vertex_residual_max", "clamp_events")


def f17(x):
    return format(float(x), ".17g")


def write_snapshot(path, grid: GraphGrid, u, t, step, cfg_hash):
    """One snapshot: rows edge_id, s (edge-local in [0,1]), x (global
    arc-length, edges laid end to end), u. Vertex values appear once per
    incident edge."""
    offsets = grid.edge_offsets
    lines = [f"# t={f17(t)} step={int(step)} config={cfg_hash}",
             "edge_id,s,x,u"]
    for j, name in enumerate(grid.graph.edge_names):
        nj = grid.cells[j]
        vals = u[grid.edge_nodes[j]]
        for i in range(nj + 1):
            s = i / nj
            x = offsets[j] + i * grid.dx[j]
            lines.append(f"{name},{f17(s)},{f17(x)},{f17(vals[i])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path, grid: GraphGrid):
    """Parse a snapshot back into (t, step, cfg_hash, heights)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    head = lines[0]
    if not head.startswith("# "):
        raise ConfigError(f"{path}: missing snapshot header")
    meta = dict(item.split("=", 1) for item in head[2:].split())
    t = float(meta["t"])
    step = int(meta["step"])
    u = np.full(grid.n_total, np.nan)
    row = 2
    for j, name in enumerate(grid.graph.edge_names):
        nodes = grid.edge_nodes[j]
        for i in range(grid.cells[j] + 1):
            fields = lines[row].split(",")
            if fields[0] != name:
                raise ConfigError(f"{path}:{row + 1}: expected edge {name}, got {fields[0]}")
            u[nodes[i]] = float(fields[3])
            row += 1
    return t, step, meta.get("config", ""), u


def write_diagnostics(path, records, meta):
    """Diagnostics table, one row per record, plus a key=value header.

    ``meta`` must carry config, total_measure, n, eps, entropy_base.
    Rows are appended strictly in record order.
    """
    head_items = []
    for key in ("config", "total_measure", "n", "eps", "entropy_base"):
        val = meta[key]
        head_items.append(f"{key}={val if isinstance(val, str) else f17(val)}")
    lines = ["# " + " ".join(head_items), ",".join(DIAG_COLUMNS)]
    for r in records:
        lines.append(",".join([
            f17(r.t), f17(r.mass), f17(r.energy), f17(r.entropy),
            f17(r.min_u), f17(r.max_u), f17(r.vertex_residual_max),
            str(int(r.clamp_events)),
        ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_diagnostics(path):
    """Parse a diagnostics table back into (meta dict, records list)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("# "):
        raise ConfigError(f"{path}: missing diagnostics header")
    meta = {}
    for item in lines[0][2:].split():
        key, val = item.split("=", 1)
        meta[key] = val if key == "config" else float(val)
    if lines[1] != ",".join(DIAG_COLUMNS):
        raise ConfigError(f"{path}: unexpected column header {lines[1]!r}")
    records = []
    for ln in lines[2:]:
        f = ln.split(",")
        records.append(DiagnosticsRecord(
            t=float(f[0]), mass=float(f[1]), energy=float(f[2]), entropy=float(f[3]),
            min_u=float(f[4]), max_u=float(f[5]), vertex_residual_max=float(f[6]),
            clamp_events=int(f[7]),
        ))
    return meta, records


def write_operator_triplets(path, op, cfg_hash=""):
    """Sparse operator as 'row col value' triplet text."""
    coo = op.matrix.tocoo()
    lines = [f"# rows={coo.shape[0]} cols={coo.shape[1]} nnz={coo.nnz} "
             f"tag={op.tag} config={cfg_hash}"]
    for i, j, v in zip(coo.row, coo.col, coo.data):
        lines.append(f"{i} {j} {f17(v)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

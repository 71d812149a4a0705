"""Initial film profiles per edge and their assembly into a state vector.

Profiles are evaluated in the edge-local coordinate s in [0, 1] and must be
nonnegative there. Shared vertices take the mean of the incident edges'
endpoint evaluations; a spread above 1e-12 between those evaluations means
the data is discontinuous at a junction and is rejected.

Kinds:
  constant(value)
  droplet(center, width, height, base)   base + height * max(0, 1-((s-c)/w)^2)^2
  linear(a, b)                           endpoint values u(0)=a, u(1)=b
  random(base, amplitude, seed, modes)   base + amplitude * sum (c_k/k) sin(k pi s)
                                         with c_k ~ U(-1, 1); vanishes at the
                                         endpoints so junction continuity is
                                         inherited from matching bases
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import GraphGrid

VERTEX_MISMATCH_TOL = 1e-12

_PARAM_SPECS = {
    "constant": (("value", None),),
    "droplet": (("center", 0.5), ("width", 0.25), ("height", 1.0), ("base", 0.0)),
    "linear": (("a", None), ("b", None)),
    "random": (("base", None), ("amplitude", 0.1), ("seed", 0), ("modes", 4)),
}


@dataclass(frozen=True)
class InitialProfile:
    kind: str
    params: tuple  # sorted (name, value) pairs

    def param(self, name):
        for k, v in self.params:
            if k == name:
                return v
        raise KeyError(name)

    def as_dict(self):
        return dict(self.params)


def make_profile(kind, **given) -> InitialProfile:
    """Build and validate a profile; unknown kinds or parameters are errors."""
    if kind not in _PARAM_SPECS:
        raise ConfigError(
            f"unknown profile kind {kind!r}; known: {', '.join(sorted(_PARAM_SPECS))}")
    spec = _PARAM_SPECS[kind]
    names = [n for n, _ in spec]
    unknown = sorted(set(given) - set(names))
    if unknown:
        raise ConfigError(f"profile {kind}: unknown parameters {unknown}")
    params = {}
    for name, default in spec:
        if name in given:
            params[name] = given[name]
        elif default is not None:
            params[name] = default
        else:
            raise ConfigError(f"profile {kind}: missing required parameter {name!r}")
    if kind in ("random",):
        params["seed"] = int(params["seed"])
        params["modes"] = int(params["modes"])
        if params["modes"] < 1:
            raise ConfigError("random profile needs modes >= 1")
    for name in ("value", "height", "base", "a", "b", "amplitude"):
        if name in params and float(params[name]) < 0:
            raise ConfigError(f"profile {kind}: {name} must be >= 0, got {params[name]}")
    if kind == "droplet":
        if not 0.0 <= float(params["center"]) <= 1.0:
            raise ConfigError(f"droplet center must lie in [0, 1], got {params['center']}")
        if float(params["width"]) <= 0:
            raise ConfigError(f"droplet width must be > 0, got {params['width']}")
    clean = {k: (int(v) if k in ("seed", "modes") else float(v)) for k, v in params.items()}
    return InitialProfile(kind, tuple(sorted(clean.items())))


def evaluate_profile(profile: InitialProfile, s, run_seed=0, edge_index=0):
    """Profile values at edge-local coordinates s (array-like in [0, 1])."""
    s = np.asarray(s, dtype=float)
    p = profile.as_dict()
    if profile.kind == "constant":
        return np.full_like(s, p["value"])
    if profile.kind == "droplet":
        arg = (s - p["center"]) / p["width"]
        return p["base"] + p["height"] * np.maximum(0.0, 1.0 - arg * arg) ** 2
    if profile.kind == "linear":
        return p["a"] * (1.0 - s) + p["b"] * s
    if profile.kind == "random":
        rng = np.random.default_rng((int(run_seed), p["seed"], int(edge_index)))
        coeffs = rng.uniform(-1.0, 1.0, p["modes"])
        out = np.full_like(s, p["base"])
        for k, c in enumerate(coeffs, start=1):
            out = out + p["amplitude"] * (c / k) * np.sin(k * np.pi * s)
        return out
    raise ConfigError(f"unknown profile kind {profile.kind!r}")


def build_initial_state(grid: GraphGrid, profiles, run_seed=0):
    """Sample per-edge profiles onto the global node vector.

    ``profiles`` maps every edge name to an InitialProfile. Interior nodes
    take their edge's values directly; each vertex takes the mean of all
    incident endpoint evaluations after checking they agree to 1e-12.
    Negative samples or junction mismatches raise ConfigError.
    """
    graph = grid.graph
    missing = [n for n in graph.edge_names if n not in profiles]
    if missing:
        raise ConfigError(f"edge {missing[0]!r} has no initial condition")
    unknown = sorted(set(profiles) - set(graph.edge_names))
    if unknown:
        raise ConfigError(f"initial conditions name unknown edges: {unknown}")

    u0 = np.zeros(grid.n_total)
    vertex_vals = {v: [] for v in graph.vertices}
    for j, name in enumerate(graph.edge_names):
        nj = grid.cells[j]
        s = np.arange(nj + 1) / nj
        vals = evaluate_profile(profiles[name], s, run_seed, j)
        if float(vals.min()) < 0:
            raise ConfigError(
                f"initial profile on edge {name!r} evaluates negative "
                f"(min {vals.min():.3g})")
        nodes = grid.edge_nodes[j]
        u0[nodes[1:-1]] = vals[1:-1]
        vertex_vals[graph.edges[j].tail].append(float(vals[0]))
        vertex_vals[graph.edges[j].head].append(float(vals[-1]))
    for v, vals in vertex_vals.items():
        spread = max(vals) - min(vals)
        if spread > VERTEX_MISMATCH_TOL:
            raise ConfigError(
                f"initial profiles disagree at vertex {v!r} by {spread:.3g} "
                f"(> {VERTEX_MISMATCH_TOL:g}); junction data must be continuous")
        u0[grid.vertex_index[v]] = float(np.mean(vals))
    return u0

"""Run specification: parsing, validation, canonical serialization, hashing.

Configs are YAML mappings with nested sections (exact grammar in the README):

    graph:   builtin: star3            # or explicit vertices/edges/boundary
    grid:    cells: 128                # int, or {e1: 128, e2: 64, ...}
    solver:  n: 1.0
             eps: 1e-6                 # every SolverConfig field by name
    ic:      all: {kind: constant, value: 0.2}
             e1:  {kind: droplet, center: 1.0, width: 0.3, height: 1.0, base: 0.05}
    output:  dir: out/run
             snapshot_every_steps: 200
             snapshot_every_time: 0.0
    seed:    0

Unknown keys anywhere are errors with the full path quoted. Numeric fields
accept plain scalars and numeric strings (YAML 1.1 reads bare "1e-6" as a
string; it is coerced here). serialize_config() emits a canonical expanded
form whose parse round-trips to an equal RunSpec, and config_hash() digests
that canonical text, so every output file can cite the exact run identity.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import yaml

from .errors import ConfigError
from .graph import BUILTIN_NAMES, Edge, GraphSpec, build_graph, builtin_spec, make_spec
from .profiles import InitialProfile, make_profile
from .stepping import SolverConfig

_SOLVER_FIELDS = {
    "n": float, "eps": float, "theta": float, "dt_init": float, "dt_min": float,
    "dt_max": float, "adapt_target": float, "linear_tol": float, "t_end": float,
    "steady_tol": float, "avg": str, "entropy_base": float,
    "negativity_slack": float, "mobility_exponent_override": bool,
}


@dataclass(frozen=True)
class RunSpec:
    """Everything a run needs, resolved and validated."""

    graph: GraphSpec
    builtin: str | None
    cells: dict
    solver: SolverConfig
    ic: dict
    outdir: str
    snapshot_every_steps: int
    snapshot_every_time: float
    seed: int


def _need_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(node).__name__}")
    return node


def _reject_unknown(node, allowed, path):
    unknown = sorted(set(node) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}; allowed: {sorted(allowed)}")


def _as_float(value, path):
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{path}: expected a number, got {value!r}")


def _as_int(value, path):
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected an integer, got a boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            pass
    raise ConfigError(f"{path}: expected an integer, got {value!r}")


def _as_bool(value, path):
    if isinstance(value, bool):
        return value
    raise ConfigError(f"{path}: expected true/false, got {value!r}")


def _parse_graph(node):
    node = _need_mapping(node, "graph")
    if "builtin" in node:
        _reject_unknown(node, ("builtin",), "graph")
        name = node["builtin"]
        if name not in BUILTIN_NAMES:
            raise ConfigError(
                f"graph.builtin: unknown name {name!r}; known: {', '.join(BUILTIN_NAMES)}")
        return builtin_spec(name), name
    _reject_unknown(node, ("vertices", "edges", "boundary"), "graph")
    for key in ("vertices", "edges"):
        if key not in node:
            raise ConfigError(f"graph: missing {key!r} (or use graph.builtin)")
    if not isinstance(node["vertices"], list):
        raise ConfigError("graph.vertices: expected a list of names")
    edges = []
    for i, item in enumerate(node.get("edges") or []):
        path = f"graph.edges[{i}]"
        item = _need_mapping(item, path)
        _reject_unknown(item, ("tail", "head", "length", "weight"), path)
        for key in ("tail", "head"):
            if key not in item:
                raise ConfigError(f"{path}: missing {key!r}")
        edges.append(Edge(
            str(item["tail"]), str(item["head"]),
            _as_float(item.get("length", 1.0), f"{path}.length"),
            _as_float(item.get("weight", 1.0), f"{path}.weight"),
        ))
    boundary = node.get("boundary", [])
    if not isinstance(boundary, list):
        raise ConfigError("graph.boundary: expected a list of vertex names")
    return make_spec(node["vertices"], edges, boundary), None


def _parse_cells(node, edge_names):
    node = _need_mapping(node, "grid")
    _reject_unknown(node, ("cells",), "grid")
    if "cells" not in node:
        raise ConfigError("grid: missing 'cells'")
    raw = node["cells"]
    if isinstance(raw, dict):
        _reject_unknown(raw, edge_names, "grid.cells")
        missing = [n for n in edge_names if n not in raw]
        if missing:
            raise ConfigError(f"grid.cells: missing edges {missing}")
        return {n: _as_int(raw[n], f"grid.cells.{n}") for n in edge_names}
    count = _as_int(raw, "grid.cells")
    return {n: count for n in edge_names}


def _parse_solver(node):
    if node is None:
        return SolverConfig()
    node = _need_mapping(node, "solver")
    _reject_unknown(node, _SOLVER_FIELDS, "solver")
    kwargs = {}
    for key, value in node.items():
        typ = _SOLVER_FIELDS[key]
        path = f"solver.{key}"
        if typ is float:
            kwargs[key] = _as_float(value, path)
        elif typ is bool:
            kwargs[key] = _as_bool(value, path)
        else:
            kwargs[key] = str(value)
    try:
        return SolverConfig(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"solver: {exc}") from None


def _parse_profile(node, path):
    node = _need_mapping(node, path)
    if "kind" not in node:
        raise ConfigError(f"{path}: missing 'kind'")
    kind = str(node["kind"])
    given = {}
    for key, value in node.items():
        if key == "kind":
            continue
        if key in ("seed", "modes"):
            given[key] = _as_int(value, f"{path}.{key}")
        else:
            given[key] = _as_float(value, f"{path}.{key}")
    try:
        return make_profile(kind, **given)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_ic(node, edge_names):
    node = _need_mapping(node, "ic")
    _reject_unknown(node, tuple(edge_names) + ("all",), "ic")
    default = _parse_profile(node["all"], "ic.all") if "all" in node else None
    ic = {}
    for name in edge_names:
        if name in node:
            ic[name] = _parse_profile(node[name], f"ic.{name}")
        elif default is not None:
            ic[name] = default
        else:
            raise ConfigError(f"ic: edge {name!r} has no initial condition")
    return ic


def _parse_output(node):
    if node is None:
        return "out", 0, 0.0
    node = _need_mapping(node, "output")
    _reject_unknown(node, ("dir", "snapshot_every_steps", "snapshot_every_time"), "output")
    outdir = str(node.get("dir", "out"))
    every_steps = _as_int(node.get("snapshot_every_steps", 0), "output.snapshot_every_steps")
    every_time = _as_float(node.get("snapshot_every_time", 0.0), "output.snapshot_every_time")
    if every_steps < 0 or every_time < 0:
        raise ConfigError("output: snapshot cadences must be >= 0")
    return outdir, every_steps, every_time


def parse_config(text, name="<config>") -> RunSpec:
    """Parse and fully validate config text into a RunSpec."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{name}: YAML parse error{where}: {exc}") from None
    doc = _need_mapping(doc, name)
    _reject_unknown(doc, ("graph", "grid", "solver", "ic", "output", "seed"), name)
    for key in ("graph", "grid", "ic"):
        if key not in doc:
            raise ConfigError(f"{name}: missing required section {key!r}")

    gspec, builtin = _parse_graph(doc["graph"])
    graph = build_graph(gspec)  # raises GraphError on structural problems
    cells = _parse_cells(doc["grid"], graph.edge_names)
    solver = _parse_solver(doc.get("solver"))
    ic = _parse_ic(doc["ic"], graph.edge_names)
    outdir, every_steps, every_time = _parse_output(doc.get("output"))
    seed = _as_int(doc.get("seed", 0), "seed")
    return RunSpec(
        graph=gspec, builtin=builtin, cells=cells, solver=solver, ic=ic,
        outdir=outdir, snapshot_every_steps=every_steps,
        snapshot_every_time=every_time, seed=seed,
    )


def load_config(path) -> RunSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), name=str(path))


def serialize_config(spec: RunSpec) -> str:
    """Canonical expanded YAML form; parse(serialize(spec)) == spec."""
    if spec.builtin is not None:
        graph_node = {"builtin": spec.builtin}
    else:
        graph_node = {
            "vertices": list(spec.graph.vertices),
            "edges": [
                {"tail": e.tail, "head": e.head, "length": e.length, "weight": e.weight}
                for e in spec.graph.edges
            ],
            "boundary": list(spec.graph.boundary),
        }
    sol = spec.solver
    doc = {
        "graph": graph_node,
        "grid": {"cells": dict(spec.cells)},
        "solver": {key: getattr(sol, key) for key in _SOLVER_FIELDS},
        "ic": {
            name: {"kind": prof.kind, **prof.as_dict()}
            for name, prof in spec.ic.items()
        },
        "output": {
            "dir": spec.outdir,
            "snapshot_every_steps": spec.snapshot_every_steps,
            "snapshot_every_time": spec.snapshot_every_time,
        },
        "seed": spec.seed,
    }
    return yaml.safe_dump(doc, sort_keys=True, default_flow_style=False)


def config_hash(spec: RunSpec) -> str:
    """Short stable digest of the canonical serialized config."""
    return hashlib.sha256(serialize_config(spec).encode()).hexdigest()[:12]

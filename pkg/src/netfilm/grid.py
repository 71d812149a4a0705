"""Finite-volume discretization of the film equation on a metric graph.

The film height obeys the fourth-order degenerate equation

    u_t + (u^n u_sss)_s = 0        on every edge,

solved in the regularized mixed form

    u_t = (f_eps(u) w_s)_s,   w = -u_ss,   f_eps(z) = |z|^n + eps,

with height and pressure (w) continuous across interior junctions, Kirchhoff
flux balance there, and no-flux conditions (first and third derivative) at
boundary vertices.

Each edge j is cut into N_j cells of physical width dx_j = l_j / N_j with
unknowns at the N_j + 1 nodes. Interior nodes are owned by the edge; the two
end nodes are the shared vertex unknowns, so a junction carries exactly one
height value regardless of its degree. Dual (control) volumes are d_j dx_j
around interior nodes and sum_{incident} d_j dx_j / 2 around a vertex. This
lumped measure makes the total state measure equal the network measure
sum_j d_j l_j exactly.

Two operators act on node vectors:

  L  = assemble_neg_laplacian:  (L u)_i = -(u_ss)_i, the negative second
       difference closed at vertices by one-sided gradient fluxes. L is
       symmetric positive semidefinite in the measure-weighted inner product
       with kernel spanned by constants; its vertex rows vanish exactly on
       discrete Kirchhoff-balanced data, so junction coupling and no-flux
       closure are weak/natural, never eliminated rows.

  B(u) = assemble_mobility_flux_div: (B w)_i = ((f_eps(u) w_s)_s)_i with the
       face mobility averaged from the two adjacent nodes (arithmetic by
       default). Face fluxes telescope, so the measure-weighted sum of B w is
       zero to rounding: mass is conserved by construction, not by penalty.

The semi-discrete system is u' = B(u) (L u).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import GridError
from .graph import MetricGraph, incidence

FACE_AVERAGES = ("arithmetic", "harmonic", "geometric")


def as_heights(u):
    """Accept a bare node vector or any state object exposing .u."""
    return np.asarray(getattr(u, "u", u), dtype=float)


@dataclass(frozen=True)
class GraphGrid:
    """Node layout, dual measures and face tables for one discretization.

    Global index order: one unknown per vertex (graph.vertices order), then
    the interior nodes of each edge in declaration order. Face arrays list
    every pair of adjacent nodes along every edge and are the single source
    for operator assembly, measures, and energy sums.
    """

    graph: MetricGraph
    cells: tuple[int, ...]
    dx: tuple[float, ...]
    n_total: int
    vertex_index: dict
    edge_nodes: tuple = field(repr=False)      # per edge: global node indices, tail..head
    measure: np.ndarray = field(repr=False)    # dual volume per unknown
    face_left: np.ndarray = field(repr=False)
    face_right: np.ndarray = field(repr=False)
    face_edge: np.ndarray = field(repr=False)  # owning edge index per face
    face_dx: np.ndarray = field(repr=False)
    face_weight: np.ndarray = field(repr=False)  # d_j per face

    @property
    def total_measure(self):
        return float(self.measure.sum())

    @property
    def edge_offsets(self):
        """Arc-length offset of each edge's s=0 end; edges laid end to end."""
        lengths = [e.length for e in self.graph.edges]
        return tuple(np.concatenate([[0.0], np.cumsum(lengths)[:-1]]))

    def edge_values(self, u, j):
        """Node values along edge j, tail to head, endpoints included."""
        return as_heights(u)[self.edge_nodes[j]]

    def edge_means(self, u):
        """Measure-weighted mean height per edge (trapezoid, own-edge share)."""
        vals = as_heights(u)
        out = np.empty(len(self.graph.edges))
        for j, nodes in enumerate(self.edge_nodes):
            v = vals[nodes]
            out[j] = (0.5 * v[0] + v[1:-1].sum() + 0.5 * v[-1]) / self.cells[j]
        return out


def build_grid(graph: MetricGraph, cells) -> GraphGrid:
    """Lay out the global unknown vector for a per-edge cell count.

    ``cells`` is a single int applied to every edge, a mapping from edge name
    to int, or a sequence in edge order. Every edge needs at least 3 cells so
    the second-difference stencil has interior room.
    """
    m = len(graph.edges)
    if isinstance(cells, int):
        counts = [cells] * m
    elif isinstance(cells, dict):
        missing = [n for n in graph.edge_names if n not in cells]
        unknown = [k for k in cells if k not in graph.edge_names]
        if missing or unknown:
            raise GridError(f"cell map mismatch; missing {missing}, unknown {unknown}")
        counts = [int(cells[n]) for n in graph.edge_names]
    else:
        counts = [int(c) for c in cells]
        if len(counts) != m:
            raise GridError(f"need {m} cell counts, got {len(counts)}")
    bad = [(graph.edge_names[j], c) for j, c in enumerate(counts) if c < 3]
    if bad:
        raise GridError(f"every edge needs >= 3 cells, got {bad}")

    nv = len(graph.vertices)
    vertex_index = {v: i for i, v in enumerate(graph.vertices)}
    dx = [e.length / c for e, c in zip(graph.edges, counts)]

    edge_nodes = []
    offset = nv
    for j, e in enumerate(graph.edges):
        inner = np.arange(offset, offset + counts[j] - 1)
        nodes = np.concatenate((
            [vertex_index[e.tail]], inner, [vertex_index[e.head]],
        )).astype(np.int64)
        edge_nodes.append(nodes)
        offset += counts[j] - 1
    n_total = offset

    fl, fr, fe = [], [], []
    for j, nodes in enumerate(edge_nodes):
        fl.append(nodes[:-1])
        fr.append(nodes[1:])
        fe.append(np.full(counts[j], j))
    face_left = np.concatenate(fl)
    face_right = np.concatenate(fr)
    face_edge = np.concatenate(fe)
    face_dx = np.array([dx[j] for j in face_edge])
    face_weight = np.array([graph.edges[j].weight for j in face_edge])

    # every face hands half its measure to each of its two nodes
    measure = np.zeros(n_total)
    half = 0.5 * face_weight * face_dx
    np.add.at(measure, face_left, half)
    np.add.at(measure, face_right, half)

    return GraphGrid(
        graph=graph, cells=tuple(counts), dx=tuple(dx), n_total=n_total,
        vertex_index=vertex_index, edge_nodes=tuple(edge_nodes),
        measure=measure, face_left=face_left, face_right=face_right,
        face_edge=face_edge, face_dx=face_dx, face_weight=face_weight,
    )


@dataclass(frozen=True)
class DiscreteOperator:
    """Sparse operator on node vectors with its symmetry class recorded.

    ``measure_symmetric`` means M @ matrix is symmetric (self-adjointness in
    the measure-weighted inner product), which both assembled operators have
    by construction.
    """

    matrix: sp.csr_matrix = field(repr=False)
    measure_symmetric: bool
    tag: str

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, other):
        return self.matrix @ other

    def toarray(self):
        return self.matrix.toarray()


def _stiffness(grid: GraphGrid, conductance) -> sp.csr_matrix:
    """Symmetric graph stiffness from per-face conductances g >= 0:
    row i gets sum of incident g on the diagonal, -g off-diagonal."""
    rows = np.concatenate([grid.face_left, grid.face_right,
                           grid.face_left, grid.face_right])
    cols = np.concatenate([grid.face_left, grid.face_right,
                           grid.face_right, grid.face_left])
    vals = np.concatenate([conductance, conductance, -conductance, -conductance])
    a = sp.coo_matrix((vals, (rows, cols)), shape=(grid.n_total, grid.n_total))
    return a.tocsr()


def assemble_neg_laplacian(grid: GraphGrid) -> DiscreteOperator:
    """The operator u -> -u_ss with natural vertex closure.

    Interior rows are the classic -(u_{i+1} - 2u_i + u_{i-1}) / dx_j^2; a
    vertex row is minus the sum of one-sided gradient fluxes toward the
    vertex divided by its dual volume. Boundary vertices thus see a weak
    homogeneous Neumann condition and interior ones a weak Kirchhoff balance.
    """
    g = grid.face_weight / grid.face_dx
    mat = sp.diags(1.0 / grid.measure) @ _stiffness(grid, g)
    return DiscreteOperator(mat.tocsr(), True, "neg_laplacian")


def mobility(z, n, eps):
    """Regularized mobility f_eps(z) = |z|^n + eps."""
    return np.abs(z) ** n + eps


def face_average(a, b, mode="arithmetic"):
    """Combine the two nodal mobilities adjacent to a face."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if mode == "arithmetic":
        return 0.5 * (a + b)
    if mode == "harmonic":
        s = a + b
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(s > 0, 2.0 * a * b / np.where(s > 0, s, 1.0), 0.0)
        return h
    if mode == "geometric":
        return np.sqrt(a * b)
    raise GridError(f"unknown face average {mode!r}; known: {', '.join(FACE_AVERAGES)}")


def assemble_mobility_flux_div(grid: GraphGrid, u, n, eps, avg="arithmetic",
                               allow_exponent_override=False) -> DiscreteOperator:
    """The operator w -> (f_eps(u) w_s)_s for the current height field u.

    Face mobilities come from the two adjacent unknowns (vertex faces use the
    vertex unknown directly), so the result is negative semidefinite in the
    measure inner product and its fluxes telescope: the measure-weighted sum
    of B w vanishes identically.

    eps < 0 is always rejected; n < 1 leaves the derivation's mobility class
    and is rejected unless allow_exponent_override is set (n = 0 with eps = 0
    is then the linear fourth-order equation, useful for validation).
    """
    if eps < 0:
        raise GridError(f"eps must be >= 0, got {eps}")
    if n < 1 and not allow_exponent_override:
        raise GridError(f"mobility exponent n={n} < 1 needs the explicit override flag")
    if n < 0:
        raise GridError(f"mobility exponent must be >= 0, got {n}")
    vals = as_heights(u)
    if vals.shape != (grid.n_total,):
        raise GridError(f"state has shape {vals.shape}, grid expects ({grid.n_total},)")
    f = mobility(vals, n, eps)
    fface = face_average(f[grid.face_left], f[grid.face_right], avg)
    g = grid.face_weight * fface / grid.face_dx
    mat = -(sp.diags(1.0 / grid.measure) @ _stiffness(grid, g))
    return DiscreteOperator(mat.tocsr(), True, "mobility_flux_div")


def evaluate_rhs(grid: GraphGrid, u, cfg):
    """Semi-discrete right-hand side B(u) (L u).

    ``cfg`` only needs n, eps, avg and mobility_exponent_override attributes
    (any SolverConfig works).
    """
    vals = as_heights(u)
    lap = assemble_neg_laplacian(grid)
    b = assemble_mobility_flux_div(
        grid, vals, cfg.n, cfg.eps, cfg.avg,
        getattr(cfg, "mobility_exponent_override", False))
    return b @ (lap @ vals)


def vertex_flux_residual(grid: GraphGrid, u, w):
    """First-derivative junction balances for height and pressure.

    For each interior vertex returns (res_u, res_w): the measure-weighted sum
    of incoming-end one-sided derivatives minus outgoing-end ones. These
    conditions hold weakly in the scheme, so residuals are diagnostics that
    shrink with dx on smooth data; they are not enforced rows. Boundary
    vertices are skipped (their natural condition is no-flux).
    """
    uv = as_heights(u)
    wv = as_heights(w)
    inc = incidence(grid.graph)
    out = {}
    for v in grid.graph.vertices:
        if v in grid.graph.boundary:
            continue
        incoming, outgoing = inc.at(v)
        ru = rw = 0.0
        for j in incoming:
            nodes = grid.edge_nodes[j]
            d = grid.graph.edges[j].weight
            ru += d * (uv[nodes[-1]] - uv[nodes[-2]]) / grid.dx[j]
            rw += d * (wv[nodes[-1]] - wv[nodes[-2]]) / grid.dx[j]
        for j in outgoing:
            nodes = grid.edge_nodes[j]
            d = grid.graph.edges[j].weight
            ru -= d * (uv[nodes[1]] - uv[nodes[0]]) / grid.dx[j]
            rw -= d * (wv[nodes[1]] - wv[nodes[0]]) / grid.dx[j]
        out[v] = (ru, rw)
    return out


def max_vertex_residual(grid: GraphGrid, u, w):
    """Largest junction balance violation over both fields; 0.0 if there are
    no interior vertices."""
    res = vertex_flux_residual(grid, u, w)
    if not res:
        return 0.0
    return max(max(abs(a), abs(b)) for a, b in res.values())

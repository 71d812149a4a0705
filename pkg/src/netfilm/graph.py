"""Metric graphs: networks of 1D edges with lengths and measure weights.

A network is a finite set of vertices joined by directed edges e_j = (tail, head).
Each edge carries a length l_j > 0 and a measure weight d_j > 0; the edge is
identified with the interval [0, l_j], coordinate s running from tail (s=0) to
head (s=l_j). Edge direction fixes the coordinate only; the flow itself is
orientation-free. A designated subset of vertices is the boundary of the
network, where no-flux conditions apply; all remaining vertices are interior
junctions with conservation (Kirchhoff) coupling.

Edges are auto-named "e1", "e2", ... in declaration order; vertices keep their
given names. These names key initial conditions and snapshot output.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import GraphError

BUILTIN_NAMES = ("star3", "cycle4", "paper-example-8", "interval")


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str
    length: float = 1.0
    weight: float = 1.0


@dataclass(frozen=True)
class GraphSpec:
    """Raw, unvalidated network description as read from a config."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    boundary: tuple[str, ...]


@dataclass(frozen=True)
class MetricGraph:
    """Validated immutable network. Construct through build_graph()."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    boundary: frozenset[str]
    edge_names: tuple[str, ...] = field(default=())

    @property
    def interior(self):
        return frozenset(self.vertices) - self.boundary

    @property
    def total_length(self):
        return sum(e.length for e in self.edges)

    @property
    def total_measure(self):
        return sum(e.weight * e.length for e in self.edges)

    def degree(self, vertex):
        return sum((e.tail == vertex) + (e.head == vertex) for e in self.edges)

    def edge_index(self, name):
        try:
            return self.edge_names.index(name)
        except ValueError:
            raise GraphError(f"unknown edge name {name!r}") from None


@dataclass(frozen=True)
class IncidenceSets:
    """Edge indices entering (head at vertex) and leaving (tail at vertex)."""

    incoming: dict
    outgoing: dict

    def at(self, vertex):
        return self.incoming.get(vertex, ()), self.outgoing.get(vertex, ())


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[ValidationCheck, ...]
    warnings: tuple[str, ...]

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]


def _as_edge(item):
    if isinstance(item, Edge):
        return item
    if isinstance(item, (tuple, list)):
        if len(item) == 2:
            return Edge(item[0], item[1])
        if len(item) == 3:
            return Edge(item[0], item[1], float(item[2]))
        if len(item) == 4:
            return Edge(item[0], item[1], float(item[2]), float(item[3]))
    raise GraphError(f"cannot interpret edge entry {item!r}")


def make_spec(vertices, edges, boundary=()) -> GraphSpec:
    return GraphSpec(
        vertices=tuple(str(v) for v in vertices),
        edges=tuple(_as_edge(e) for e in edges),
        boundary=tuple(str(v) for v in boundary),
    )


def _connected(vertices, edges):
    if not vertices:
        return False
    adj = {v: set() for v in vertices}
    for e in edges:
        if e.tail in adj and e.head in adj:
            adj[e.tail].add(e.head)
            adj[e.head].add(e.tail)
    seen = {vertices[0]}
    queue = deque([vertices[0]])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(vertices)


def validate_spec(spec: GraphSpec) -> ValidationReport:
    """Run every structural check on a raw description without raising.

    Returns a report with one entry per check plus advisory warnings
    (empty boundary, degree-1 interior vertices). build_graph() raises on
    the first failed check; this function is the non-throwing twin used by
    the CLI validate command.
    """
    checks = []
    warnings = []
    vset = set(spec.vertices)

    checks.append(ValidationCheck(
        "nonempty", len(spec.vertices) > 0 and len(spec.edges) > 0,
        "network needs at least one vertex and one edge"))
    dup_v = len(vset) != len(spec.vertices)
    checks.append(ValidationCheck(
        "unique-vertex-names", not dup_v, "duplicate vertex names"))

    bad_endpoint = [e for e in spec.edges if e.tail not in vset or e.head not in vset]
    checks.append(ValidationCheck(
        "declared-endpoints", not bad_endpoint,
        f"edges with undeclared endpoints: {[(e.tail, e.head) for e in bad_endpoint]}"))

    loops = [e for e in spec.edges if e.tail == e.head]
    checks.append(ValidationCheck(
        "no-self-loops", not loops,
        f"self-loops at: {[e.tail for e in loops]}"))

    pairs = [(e.tail, e.head) for e in spec.edges]
    dups = sorted({p for p in pairs if pairs.count(p) > 1})
    checks.append(ValidationCheck(
        "no-duplicate-edges", not dups, f"duplicate directed edges: {dups}"))

    bad_len = [e for e in spec.edges if not e.length > 0]
    checks.append(ValidationCheck(
        "positive-lengths", not bad_len,
        f"nonpositive lengths on: {[(e.tail, e.head, e.length) for e in bad_len]}"))

    bad_w = [e for e in spec.edges if not e.weight > 0]
    checks.append(ValidationCheck(
        "positive-weights", not bad_w,
        f"nonpositive measure weights on: {[(e.tail, e.head, e.weight) for e in bad_w]}"))

    stray = [v for v in spec.boundary if v not in vset]
    checks.append(ValidationCheck(
        "boundary-declared", not stray, f"boundary vertices not declared: {stray}"))

    ok_so_far = all(c.passed for c in checks)
    checks.append(ValidationCheck(
        "connected", ok_so_far and _connected(spec.vertices, spec.edges),
        "network is not connected"))

    if not spec.boundary:
        warnings.append("boundary set is empty (closed network, no no-flux vertices)")
    if ok_so_far:
        deg = {v: 0 for v in spec.vertices}
        for e in spec.edges:
            deg[e.tail] += 1
            deg[e.head] += 1
        bset = set(spec.boundary)
        for v in spec.vertices:
            if deg[v] == 1 and v not in bset:
                warnings.append(
                    f"vertex {v!r} has degree 1 but is not marked boundary; "
                    "its junction conditions degenerate to no-flux")
    return ValidationReport(tuple(checks), tuple(warnings))


def build_graph(spec: GraphSpec) -> MetricGraph:
    """Validate a description and freeze it into a MetricGraph.

    Raises GraphError listing every failed structural check.
    """
    report = validate_spec(spec)
    if not report.passed:
        msgs = "; ".join(f"{c.name}: {c.detail}" for c in report.failures())
        raise GraphError(msgs)
    names = tuple(f"e{j + 1}" for j in range(len(spec.edges)))
    return MetricGraph(
        vertices=spec.vertices,
        edges=spec.edges,
        boundary=frozenset(spec.boundary),
        edge_names=names,
    )


def incidence(graph: MetricGraph) -> IncidenceSets:
    """Incoming/outgoing edge-index sets per vertex.

    An edge is incoming at its head (coordinate s = l_j there) and outgoing
    at its tail (s = 0). Junction balances sum incoming-end derivatives minus
    outgoing-end derivatives.
    """
    inc = {v: [] for v in graph.vertices}
    out = {v: [] for v in graph.vertices}
    for j, e in enumerate(graph.edges):
        inc[e.head].append(j)
        out[e.tail].append(j)
    return IncidenceSets(
        incoming={v: tuple(ix) for v, ix in inc.items()},
        outgoing={v: tuple(ix) for v, ix in out.items()},
    )


def builtin_spec(name: str) -> GraphSpec:
    """Shipped topologies addressable by name from configs.

    star3           three unit edges meeting at a central junction
    cycle4          closed square of four unit edges, no boundary
    paper-example-8 four pendant edges attached to a unit 4-cycle
    interval        one unit edge, both ends boundary
    """
    if name == "star3":
        return make_spec(
            ["a0", "a1", "a2", "a3"],
            [("a1", "a0"), ("a2", "a0"), ("a3", "a0")],
            ["a1", "a2", "a3"],
        )
    if name == "cycle4":
        return make_spec(
            ["a1", "a2", "a3", "a4"],
            [("a1", "a2"), ("a2", "a3"), ("a3", "a4"), ("a4", "a1")],
            [],
        )
    if name == "paper-example-8":
        return make_spec(
            ["a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8"],
            [
                ("a1", "a5"), ("a2", "a6"), ("a3", "a7"), ("a4", "a8"),
                ("a5", "a6"), ("a6", "a8"), ("a7", "a8"), ("a5", "a7"),
            ],
            ["a1", "a2", "a3", "a4"],
        )
    if name == "interval":
        return make_spec(["a1", "a2"], [("a1", "a2")], ["a1", "a2"])
    raise GraphError(f"unknown builtin topology {name!r}; known: {', '.join(BUILTIN_NAMES)}")

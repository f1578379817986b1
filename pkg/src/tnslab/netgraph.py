"""Weighted tensor network graphs: torus and open grids, custom graphs, min-cuts.

Grid vertices are ``(row, col)`` tuples (0-based).  For two-row grids they
render as ``1, 1', 2, 2', ...`` and are ordered column-major, so the
canonical vertex order is ``1 < 1' < 2 < 2' < ...``.

Orientation convention for grids: horizontal edges point right
(``col -> col + 1 mod N``), vertical edges point down (``row -> row + 1 mod M``).
Every torus vertex therefore has ``up`` and ``left`` incoming and ``down`` and
``right`` outgoing.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from types import MappingProxyType
from typing import Hashable, Iterable, Mapping, Sequence

Vertex = Hashable

ENTANGLEMENT = "entanglement"
PHYSICAL = "physical"

TORUS = "torus"
OPEN = "open"
CUSTOM = "custom"

#: Role names of the five legs of a grid vertex, in the order used for
#: single-vertex ("role") tensors throughout the package.
VERTEX_ROLES = ("phys", "up", "right", "down", "left")

BRUTE_FORCE_LIMIT = 16


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    id: int
    kind: str
    weight: int
    tail: Vertex = None
    head: Vertex = None
    owner: Vertex = None
    external: bool = False

    @property
    def is_entanglement(self) -> bool:
        return self.kind == ENTANGLEMENT

    @property
    def is_physical(self) -> bool:
        return self.kind == PHYSICAL

    def endpoints(self) -> tuple:
        if self.is_entanglement:
            return (self.tail, self.head)
        return (self.owner,)

    def reversed(self) -> "Edge":
        if not self.is_entanglement:
            return self
        return Edge(self.id, self.kind, self.weight, tail=self.head, head=self.tail)


@dataclass(frozen=True)
class WeightProfile:
    """Edge-class weights: ``d`` entanglement, ``k`` internal physical, ``s`` external physical."""

    d: int
    k: int
    s: int | None = None

    def __post_init__(self):
        for name in ("d", "k", "s"):
            value = getattr(self, name)
            if value is None:
                continue
            if not isinstance(value, int) or value < 1:
                raise GraphError(f"weight {name} must be an integer >= 1, got {value!r}")


class TNGraph:
    """Immutable graph with oriented entanglement edges and dangling physical edges.

    Parallel entanglement edges are allowed; edges are identified by id only.
    ``roles`` (grids only) maps each vertex to ``{role: edge id}`` for the
    five roles in :data:`VERTEX_ROLES`.
    """

    def __init__(
        self,
        vertices: Iterable[Vertex],
        edges: Iterable[Edge],
        topology: str = CUSTOM,
        M: int | None = None,
        N: int | None = None,
        roles: Mapping[Vertex, Mapping[str, int]] | None = None,
    ):
        self._vertices = tuple(vertices)
        if len(set(self._vertices)) != len(self._vertices):
            raise GraphError("duplicate vertex")
        self._edges = tuple(sorted(edges, key=lambda e: e.id))
        self.topology = topology
        self.M = M
        self.N = N
        vset = set(self._vertices)
        self._by_id: dict[int, Edge] = {}
        for e in self._edges:
            if e.id in self._by_id:
                raise GraphError(f"duplicate edge id {e.id}")
            if e.kind not in (ENTANGLEMENT, PHYSICAL):
                raise GraphError(f"unknown edge kind {e.kind!r}")
            if not isinstance(e.weight, int) or e.weight < 1:
                raise GraphError(f"edge {e.id}: weight must be >= 1")
            for v in e.endpoints():
                if v not in vset:
                    raise GraphError(f"edge {e.id} names unknown vertex {v!r}")
            if e.is_entanglement and e.tail == e.head:
                raise GraphError(f"edge {e.id} is a self-loop; loops are not supported")
            self._by_id[e.id] = e
        self._order = {v: i for i, v in enumerate(self._vertices)}
        self._roles = None
        if roles is not None:
            self._roles = MappingProxyType(
                {v: MappingProxyType(dict(r)) for v, r in roles.items()}
            )

    # -- basic queries ---------------------------------------------------

    @property
    def vertices(self) -> tuple:
        return self._vertices

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    @property
    def entanglement_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self._edges if e.is_entanglement)

    @property
    def physical_edges(self) -> tuple[Edge, ...]:
        """Physical edges in canonical order: vertex order, external before internal."""
        phys = [e for e in self._edges if e.is_physical]
        phys.sort(key=lambda e: (self._order[e.owner], not e.external, e.id))
        return tuple(phys)

    @property
    def roles(self):
        return self._roles

    def edge(self, edge_id: int) -> Edge:
        try:
            return self._by_id[edge_id]
        except KeyError:
            raise GraphError(f"unknown edge {edge_id!r}") from None

    def vertex_index(self, v: Vertex) -> int:
        try:
            return self._order[v]
        except KeyError:
            raise GraphError(f"unknown vertex {v!r}") from None

    def __contains__(self, v) -> bool:
        return v in self._order

    def label(self, v: Vertex) -> str:
        self.vertex_index(v)
        if self.topology in (TORUS, OPEN):
            row, col = v
            if self.M == 2:
                return f"{col + 1}" + ("'" if row == 1 else "")
            return f"{row + 1},{col + 1}"
        return str(v)

    def vertex_by_label(self, label: str) -> Vertex:
        for v in self._vertices:
            if self.label(v) == label:
                return v
        raise GraphError(f"no vertex labelled {label!r}")

    def incident(self, v: Vertex) -> list[Edge]:
        self.vertex_index(v)
        return [e for e in self._edges if v in e.endpoints()]

    def physical_at(self, v: Vertex) -> list[Edge]:
        out = [e for e in self._edges if e.is_physical and e.owner == v]
        out.sort(key=lambda e: (not e.external, e.id))
        return out

    def in_edges(self, v: Vertex) -> list[Edge]:
        self.vertex_index(v)
        return [e for e in self._edges if e.is_entanglement and e.head == v]

    def out_edges(self, v: Vertex) -> list[Edge]:
        self.vertex_index(v)
        return [e for e in self._edges if e.is_entanglement and e.tail == v]

    def entanglement_degree(self, v: Vertex) -> int:
        return len(self.in_edges(v)) + len(self.out_edges(v))

    def reversed(self) -> "TNGraph":
        """The same graph with every entanglement edge's orientation flipped."""
        return TNGraph(
            self._vertices,
            [e.reversed() for e in self._edges],
            self.topology,
            self.M,
            self.N,
            self._roles,
        )

    def descriptor(self) -> dict:
        return {
            "topology": self.topology,
            "M": self.M,
            "N": self.N,
            "vertices": len(self._vertices),
            "entanglement_edges": len(self.entanglement_edges),
            "physical_edges": len(self.physical_edges),
            "weights": sorted({e.weight for e in self._edges}),
        }

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        edges = []
        for e in self._edges:
            edges.append(
                {
                    "id": e.id,
                    "kind": e.kind,
                    "tail": _vertex_to_json(e.tail),
                    "head": _vertex_to_json(e.head),
                    "owner": _vertex_to_json(e.owner),
                    "external": e.external,
                    "weight": e.weight,
                }
            )
        doc = {
            "schema": 1,
            "topology": self.topology,
            "M": self.M,
            "N": self.N,
            "vertices": [_vertex_to_json(v) for v in self._vertices],
            "edges": edges,
        }
        if self._roles is not None:
            doc["roles"] = [
                {"vertex": _vertex_to_json(v), **dict(r)} for v, r in self._roles.items()
            ]
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "TNGraph":
        vertices = [_vertex_from_json(v) for v in doc["vertices"]]
        edges = []
        for e in doc["edges"]:
            edges.append(
                Edge(
                    id=int(e["id"]),
                    kind=e["kind"],
                    weight=int(e["weight"]),
                    tail=_vertex_from_json(e.get("tail")),
                    head=_vertex_from_json(e.get("head")),
                    owner=_vertex_from_json(e.get("owner")),
                    external=bool(e.get("external", False)),
                )
            )
        roles = None
        if doc.get("roles") is not None:
            roles = {}
            for entry in doc["roles"]:
                entry = dict(entry)
                v = _vertex_from_json(entry.pop("vertex"))
                roles[v] = {k: int(val) for k, val in entry.items()}
        return cls(vertices, edges, doc.get("topology", CUSTOM), doc.get("M"), doc.get("N"), roles)

    def __eq__(self, other):
        if not isinstance(other, TNGraph):
            return NotImplemented
        return self.to_json() == other.to_json()

    def __hash__(self):
        return hash((self._vertices, self._edges))

    def __repr__(self):
        return (
            f"TNGraph({self.topology}, M={self.M}, N={self.N}, |V|={len(self._vertices)}, "
            f"|E_ent|={len(self.entanglement_edges)}, |E_phys|={len(self.physical_edges)})"
        )


def _vertex_to_json(v):
    if isinstance(v, tuple):
        return list(v)
    return v


def _vertex_from_json(v):
    if isinstance(v, list):
        return tuple(v)
    return v


def _grid_vertices(M: int, N: int) -> list[tuple[int, int]]:
    return [(r, c) for c in range(N) for r in range(M)]


def build_torus_grid(M: int, N: int, profile: WeightProfile) -> TNGraph:
    """M x N grid on a torus, one physical edge of weight ``k`` per vertex."""
    if M < 1 or N < 1:
        raise GraphError("grid dimensions must be >= 1")
    if M < 2 or N < 2:
        raise GraphError("torus grids need M, N >= 2 (smaller sizes wrap into self-loops)")
    vertices = _grid_vertices(M, N)
    edges: list[Edge] = []
    roles = {v: {} for v in vertices}
    eid = itertools.count()
    for c in range(N):
        for r in range(M):
            tail, head = (r, c), ((r + 1) % M, c)
            e = Edge(next(eid), ENTANGLEMENT, profile.d, tail=tail, head=head)
            edges.append(e)
            roles[tail]["down"] = e.id
            roles[head]["up"] = e.id
    for c in range(N):
        for r in range(M):
            tail, head = (r, c), (r, (c + 1) % N)
            e = Edge(next(eid), ENTANGLEMENT, profile.d, tail=tail, head=head)
            edges.append(e)
            roles[tail]["right"] = e.id
            roles[head]["left"] = e.id
    for v in vertices:
        e = Edge(next(eid), PHYSICAL, profile.k, owner=v, external=False)
        edges.append(e)
        roles[v]["phys"] = e.id
    return TNGraph(vertices, edges, TORUS, M, N, roles)


def build_open_grid(M: int, N: int, profile: WeightProfile) -> TNGraph:
    """M x N grid with dangling boundary edges of weight ``s`` on the outer ring."""
    if M < 1 or N < 1:
        raise GraphError("grid dimensions must be >= 1")
    if profile.s is None:
        raise GraphError("open grids need an external weight s")
    vertices = _grid_vertices(M, N)
    edges: list[Edge] = []
    roles = {v: {} for v in vertices}
    eid = itertools.count()
    for c in range(N):
        for r in range(M - 1):
            tail, head = (r, c), (r + 1, c)
            e = Edge(next(eid), ENTANGLEMENT, profile.d, tail=tail, head=head)
            edges.append(e)
            roles[tail]["down"] = e.id
            roles[head]["up"] = e.id
    for c in range(N - 1):
        for r in range(M):
            tail, head = (r, c), (r, c + 1)
            e = Edge(next(eid), ENTANGLEMENT, profile.d, tail=tail, head=head)
            edges.append(e)
            roles[tail]["right"] = e.id
            roles[head]["left"] = e.id
    for v in vertices:
        r, c = v
        boundary = (
            ("up", r == 0),
            ("right", c == N - 1),
            ("down", r == M - 1),
            ("left", c == 0),
        )
        for role, present in boundary:
            if present:
                e = Edge(next(eid), PHYSICAL, profile.s, owner=v, external=True)
                edges.append(e)
                roles[v][role] = e.id
        e = Edge(next(eid), PHYSICAL, profile.k, owner=v, external=False)
        edges.append(e)
        roles[v]["phys"] = e.id
    return TNGraph(vertices, edges, OPEN, M, N, roles)


def vertex_space_shape(G: TNGraph, v: Vertex) -> list[tuple[int, int, bool]]:
    """Axis layout ``(edge id, dimension, dual)`` of a tensor placed at ``v``.

    Physical edges first (external before internal), then incoming entanglement
    edges, then outgoing ones (dual).
    """
    shape = [(e.id, e.weight, False) for e in G.physical_at(v)]
    shape += [(e.id, e.weight, False) for e in G.in_edges(v)]
    shape += [(e.id, e.weight, True) for e in G.out_edges(v)]
    return shape


# -- min-cut -------------------------------------------------------------


def _check_terminals(G: TNGraph, sources, sinks) -> tuple[set, set]:
    sources, sinks = set(sources), set(sinks)
    if not sources or not sinks:
        raise GraphError("source and sink sets must be nonempty")
    if sources & sinks:
        raise GraphError("source and sink sets overlap")
    for v in sources | sinks:
        G.vertex_index(v)
    return sources, sinks


def _max_flow(capacity: dict, source, sink) -> int:
    """Edmonds-Karp on a dict-of-dicts residual network (mutated in place)."""
    flow = 0
    while True:
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for w, cap in capacity[u].items():
                if cap > 0 and w not in parent:
                    parent[w] = u
                    queue.append(w)
        if sink not in parent:
            return flow
        path_cap = math.inf
        w = sink
        while parent[w] is not None:
            path_cap = min(path_cap, capacity[parent[w]][w])
            w = parent[w]
        w = sink
        while parent[w] is not None:
            u = parent[w]
            capacity[u][w] -= path_cap
            capacity[w][u] += path_cap
            w = u
        flow += path_cap


def _flow_cut(G: TNGraph, sources: set, sinks: set, capacity_of) -> int:
    src, snk = object(), object()
    cap: dict = defaultdict(lambda: defaultdict(int))
    for e in G.entanglement_edges:
        c = capacity_of(e)
        if c:
            cap[e.tail][e.head] += c
            cap[e.head][e.tail] += c
    total = sum(capacity_of(e) for e in G.entanglement_edges) + 1
    for v in sources:
        cap[src][v] = total
    for v in sinks:
        cap[v][snk] = total
    return _max_flow(cap, src, snk)


def min_cut(G: TNGraph, sources: Iterable[Vertex], sinks: Iterable[Vertex]) -> int:
    """Number of entanglement edges in a minimum cut separating ``sources`` from ``sinks``."""
    sources, sinks = _check_terminals(G, sources, sinks)
    return _flow_cut(G, sources, sinks, lambda e: 1)


def _cut_cost(G: TNGraph, side: Mapping[Vertex, bool], weighted: bool) -> int:
    cost = 1 if weighted else 0
    for e in G.entanglement_edges:
        if side[e.tail] != side[e.head]:
            if weighted:
                cost *= e.weight
            else:
                cost += 1
    return cost


def _brute_force(G: TNGraph, sources: set, sinks: set, weighted: bool) -> int:
    free = [v for v in G.vertices if v not in sources and v not in sinks]
    if len(free) > BRUTE_FORCE_LIMIT:
        raise GraphError(
            f"brute-force cut over {len(free)} free vertices exceeds the limit {BRUTE_FORCE_LIMIT}"
        )
    side = {v: True for v in sources}
    side.update({v: False for v in sinks})
    best = None
    for bits in itertools.product((True, False), repeat=len(free)):
        side.update(zip(free, bits))
        cost = _cut_cost(G, side, weighted)
        if best is None or cost < best:
            best = cost
    return best


def brute_force_min_cut(G: TNGraph, sources: Iterable[Vertex], sinks: Iterable[Vertex]) -> int:
    """Exhaustive min-cut over all terminal-respecting bipartitions (test oracle)."""
    sources, sinks = _check_terminals(G, sources, sinks)
    return _brute_force(G, sources, sinks, weighted=False)


def brute_force_min_cut_weighted(G: TNGraph, sources, sinks) -> int:
    sources, sinks = _check_terminals(G, sources, sinks)
    return _brute_force(G, sources, sinks, weighted=True)


def _integer_root(w: int) -> tuple[int, int]:
    """Write ``w = b**e`` with ``b`` not itself a perfect power."""
    for e in range(w.bit_length(), 1, -1):
        b = round(w ** (1.0 / e))
        for cand in (b - 1, b, b + 1):
            if cand >= 2 and cand**e == w:
                base, exp = _integer_root(cand)
                return base, exp * e
    return w, 1


def common_base(weights: Iterable[int]) -> tuple[int, dict[int, int]] | None:
    """Common base ``b`` and exponents such that every weight is ``b**exp``; None if none exists."""
    weights = set(weights)
    nontrivial = {w for w in weights if w > 1}
    if not nontrivial:
        return 1, {w: 0 for w in weights}
    roots = {w: _integer_root(w) for w in nontrivial}
    bases = {b for b, _ in roots.values()}
    if len(bases) != 1:
        return None
    base = bases.pop()
    exps = {w: e for w, (_, e) in roots.items()}
    exps.update({w: 0 for w in weights if w == 1})
    return base, exps


def min_cut_weighted(G: TNGraph, sources: Iterable[Vertex], sinks: Iterable[Vertex]) -> int:
    """Minimum over separating bipartitions of the product of crossing edge weights."""
    sources, sinks = _check_terminals(G, sources, sinks)
    found = common_base(e.weight for e in G.entanglement_edges)
    if found is not None:
        base, exps = found
        if base == 1:
            return 1
        flow = _flow_cut(G, sources, sinks, lambda e: exps[e.weight])
        return base**flow
    return _brute_force(G, sources, sinks, weighted=True)


def parse_vertices(G: TNGraph, labels: Sequence[str]) -> list[Vertex]:
    return [G.vertex_by_label(s) for s in labels]

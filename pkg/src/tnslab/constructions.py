"""Explicit vertex tensors and assignments for the 2 x N grid constructions.

Single-vertex ("role") tensors use the axis labels of
:data:`~tnslab.netgraph.VERTEX_ROLES`: ``phys, up, right, down, left``.
Leg values in the docstrings are written 1-based (``e_1, e_2``) while array
indices are 0-based.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .netgraph import VERTEX_ROLES, TNGraph, WeightProfile, build_open_grid, build_torus_grid
from .tensor import Axis, SparseTensor, contract_pair, place

ENT_ROLES = VERTEX_ROLES[1:]
SURVIVAL_LABELS = ("A", "B", "C", "D")
DIRECTIONS = ("above", "right", "below", "left")


class ConstructionError(ValueError):
    pass


def role_axes(dims: dict[str, int]) -> tuple[Axis, ...]:
    return tuple(Axis(r, dims[r]) for r in VERTEX_ROLES)


def basis(dim: int, i: int) -> list[int]:
    """Dense basis vector ``e_{i+1}`` of length ``dim``."""
    v = [0] * dim
    v[i] = 1
    return v


# -- iterated matrix multiplication -----------------------------------------


def imm_vertex_tensor(s: int) -> SparseTensor:
    """Sum over i,j,k,l,m in [s] of a^i_j (x) b^m_i (x) c^k_l (x) d^j_k (x) e^l_m.

    Each leg is C^s (x) C^s, with the pair (sup, sub) stored at index
    ``sup * s + sub``.  ``a`` is the up leg, ``b`` physical, ``c`` right,
    ``d`` down and ``e`` left.
    """
    if s < 1:
        raise ConstructionError("s must be >= 1")
    axes = role_axes({r: s * s for r in VERTEX_ROLES})
    entries = {}
    for i, j, k, l, m in itertools.product(range(s), repeat=5):
        entries[(m * s + i, i * s + j, k * s + l, j * s + k, l * s + m)] = 1
    return SparseTensor(axes, entries, check=False)


def imm_graph(s: int, N: int) -> TNGraph:
    w = s * s
    return build_open_grid(2, N, WeightProfile(d=w, k=w, s=w))


# -- unbound construction on the open grid ----------------------------------


def thm14_graph(N: int, k: int, d: int) -> TNGraph:
    return build_open_grid(2, N, WeightProfile(d=1, k=k, s=d))


def thm14_assignment(N: int, k: int, d: int) -> tuple[TNGraph, dict]:
    """Open 2 x N grid with entanglement weight 1 and the two vertex tensors

    top:    sum_i e_i(up) (x) e_i(phys) (x) f (x) f (x) f
    bottom: sum_i f (x) e_i(phys) (x) f (x) e_i(down) (x) f

    where ``f = e_1`` and ``i`` runs over ``[k]``.  Returns ``(graph, assignment)``.
    """
    if N < 1 or k < 1:
        raise ConstructionError("N and k must be >= 1")
    if d < k:
        raise ConstructionError(f"need d >= k, got d={d}, k={k}")
    G = thm14_graph(N, k, d)
    asgn = {}
    for v in G.vertices:
        dims = {role: G.edge(eid).weight for role, eid in G.roles[v].items()}
        axes = role_axes(dims)
        carry = "up" if v[0] == 0 else "down"
        terms = []
        for i in range(k):
            vecs = []
            for role in VERTEX_ROLES:
                vecs.append(basis(dims[role], i if role in ("phys", carry) else 0))
            terms.append(vecs)
        asgn[v] = place(G, v, SparseTensor.from_terms(axes, terms))
    return G, asgn


def thm14_closed_form(N: int, k: int, d: int) -> SparseTensor:
    """The contracted state written out directly.

    sum over i, j in [k]^N of f^(x)4 on the four side edges, e_{i_p} on each
    upper edge and on the physical edge of p, e_{j_p} on each lower edge and
    on the physical edge of p'.
    """
    G = thm14_graph(N, k, d)
    phys = G.physical_edges
    role_of = {}
    for v, roles in G.roles.items():
        for role, eid in roles.items():
            role_of[eid] = (v, role)
    entries = {}
    top = [(0, c) for c in range(N)]
    bot = [(1, c) for c in range(N)]
    for ii in itertools.product(range(k), repeat=N):
        for jj in itertools.product(range(k), repeat=N):
            value = {}
            for c in range(N):
                value[(top[c], "up")] = ii[c]
                value[(top[c], "phys")] = ii[c]
                value[(bot[c], "down")] = jj[c]
                value[(bot[c], "phys")] = jj[c]
            idx = tuple(value.get(role_of[e.id], 0) for e in phys)
            entries[idx] = 1
    return SparseTensor([Axis(e.id, e.weight) for e in phys], entries, check=False)


# -- two-row torus family --------------------------------------------------


@dataclass
class Section3Params:
    """Vectors ``A[v][i]``, ``B[v][i]`` in C^2 for grid vertex ``v = (row, col)`` and ``i in {1, 2}``.

    Column 0 only uses ``i = 1``.
    """

    N: int
    A: dict = field(default_factory=dict)
    B: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 2 or self.N % 2:
            raise ConstructionError(f"N must be even and >= 2, got {self.N}")
        for v in self.vertices():
            for i in self.indices(v):
                for name, table in (("A", self.A), ("B", self.B)):
                    vec = table.get(v, {}).get(i)
                    if vec is None or len(vec) != 2:
                        raise ConstructionError(f"missing 2-vector {name}[{v}][{i}]")

    def vertices(self):
        return [(r, c) for c in range(self.N) for r in range(2)]

    @staticmethod
    def indices(v):
        return (1,) if v[1] == 0 else (1, 2)


def thm16_params(N: int) -> Section3Params:
    """Basis-vector choices that turn the family into sum_i e_{i1} e_{i1} ... e_{iN} e_{iN}."""
    if N < 2 or N % 2:
        raise ConstructionError(f"N must be even and >= 2, got {N}")
    e1, e2 = (1, 0), (0, 1)
    A = {(0, 0): {1: e1}, (1, 0): {1: e2}}
    B = {(0, 0): {1: e2}, (1, 0): {1: e1}}
    for c in range(1, N):
        for r in range(2):
            A[(r, c)] = {1: e1, 2: e2}
            B[(r, c)] = {1: e1, 2: e2}
    return Section3Params(N, A, B)


def random_section3_params(N: int, seed: int, lo: int = -9, hi: int = 9) -> Section3Params:
    rng = random.Random(seed)
    A, B = {}, {}
    for c in range(N):
        for r in range(2):
            idx = (1,) if c == 0 else (1, 2)
            A[(r, c)] = {i: (rng.randint(lo, hi), rng.randint(lo, hi)) for i in idx}
            B[(r, c)] = {i: (rng.randint(lo, hi), rng.randint(lo, hi)) for i in idx}
    return Section3Params(N, A, B)


def section3_graph(N: int) -> TNGraph:
    return build_torus_grid(2, N, WeightProfile(d=2, k=2))


def _horizontal_value(row: int, branch: int, j: int) -> int:
    # leg value (1 or 2) on the horizontal edge right of column j; it flips at every vertex
    start = 1 if (row == 0) == (branch == 1) else 2
    return start if j % 2 == 0 else 3 - start


def section3_vertex_terms(p: Section3Params, v) -> list[tuple[tuple, dict]]:
    """Rank-one terms ``(physical vector, {leg: value})`` of the tensor at ``v``.

    Horizontal legs alternate 1/2 along each row (hence N even); the branch
    bit is fixed by the column-0 pair.  At column 0 the vertical legs encode
    the branch, at later columns both vertical legs carry the choice ``g``.
    """
    r, c = v
    N = p.N
    terms = []
    if c == 0:
        if r == 0:
            terms.append((p.A[v][1], {"up": 1, "right": 1, "down": 2, "left": 2}))
            terms.append((p.B[v][1], {"up": 2, "right": 2, "down": 1, "left": 1}))
        else:
            terms.append((p.B[v][1], {"up": 2, "right": 2, "down": 1, "left": 1}))
            terms.append((p.A[v][1], {"up": 1, "right": 1, "down": 2, "left": 2}))
        return terms
    for branch in (1, 2):
        left = _horizontal_value(r, branch, (c - 1) % N)
        right = _horizontal_value(r, branch, c)
        # branch 1 puts B on top and A below; branch 2 the reverse
        table = p.B if (branch == 1) == (r == 0) else p.A
        for g in (1, 2):
            terms.append((table[v][g], {"up": g, "right": right, "down": g, "left": left}))
    return terms


def section3_vertex_tensor(p: Section3Params, v) -> SparseTensor:
    axes = role_axes({r: 2 for r in VERTEX_ROLES})
    terms = []
    for phys, legs in section3_vertex_terms(p, v):
        terms.append([list(phys)] + [basis(2, legs[r] - 1) for r in ENT_ROLES])
    return SparseTensor.from_terms(axes, terms)


def section3_assignment(p: Section3Params) -> tuple[TNGraph, dict]:
    """Per-vertex tensors on the 2 x N torus (d = k = 2); returns ``(graph, assignment)``."""
    G = section3_graph(p.N)
    return G, {v: place(G, v, section3_vertex_tensor(p, v)) for v in G.vertices}


def section3_closed_form(p: Section3Params, G: TNGraph | None = None) -> SparseTensor:
    """Expand the sum over gamma: {2..N} -> {1,2} of the two rank-one products directly."""
    G = G if G is not None else section3_graph(p.N)
    axes = [Axis(e.id, e.weight) for e in G.physical_edges]
    N = p.N
    top = lambda c: (0, c)  # noqa: E731
    bot = lambda c: (1, c)  # noqa: E731
    terms = []
    for gamma in itertools.product((1, 2), repeat=N - 1):
        first = [p.A[top(0)][1], p.B[bot(0)][1]]
        second = [p.B[top(0)][1], p.A[bot(0)][1]]
        for c, g in zip(range(1, N), gamma):
            first += [p.B[top(c)][g], p.A[bot(c)][g]]
            second += [p.A[top(c)][g], p.B[bot(c)][g]]
        terms.append([list(x) for x in first])
        terms.append([list(x) for x in second])
    return SparseTensor.from_terms(axes, terms)


# -- bound-state candidates ----------------------------------------------------

PATTERNS = tuple(itertools.product((1, 2), repeat=4))  # (up, right, down, left)


def _is_alternating(P) -> bool:
    return sorted(P) == [1, 1, 2, 2]


def two_term_tensor(x: int, P1: Sequence[int], y: int, P2: Sequence[int]) -> SparseTensor:
    """``e_x (x) e_P1 + e_y (x) e_P2`` in five 2-dimensional legs (values 1-based)."""
    axes = role_axes({r: 2 for r in VERTEX_ROLES})
    first = SparseTensor(axes, {(x - 1, *(q - 1 for q in P1)): 1})
    second = SparseTensor(axes, {(y - 1, *(q - 1 for q in P2)): 1})
    return first + second


def thm17_candidates(N: int) -> list[tuple[dict, SparseTensor]]:
    """Two-term vertex tensors ``e_x (x) P1 + e_y (x) P2`` with ``P1 != P2``.

    Complementary alternating pattern pairs (two 1s and two 2s, P2 the swap
    of P1) come first, then every other pair of distinct leg patterns.
    Returns ``(descriptor, tensor)`` pairs in enumeration order.
    """
    if N < 2 or N % 2:
        raise ConstructionError(f"N must be even and >= 2, got {N}")
    first, rest = [], []
    for P1, P2 in itertools.combinations(PATTERNS, 2):
        complementary = all(a != b for a, b in zip(P1, P2))
        bucket = first if complementary and _is_alternating(P1) else rest
        for x, y in itertools.product((1, 2), repeat=2):
            bucket.append((x, P1, y, P2))
    out = []
    for x, P1, y, P2 in first + rest:
        desc = {"x": x, "P1": list(P1), "y": y, "P2": list(P2)}
        out.append((desc, two_term_tensor(x, P1, y, P2)))
    return out


# -- survival tables -------------------------------------------------------------


@dataclass(frozen=True)
class SurvivalTable:
    """``directions[d][X]`` is the set of labels allowed in direction ``d`` of ``X``;
    ``vertical[X]`` is the two-row collapsed above/below set."""

    directions: dict
    vertical: dict

    def to_dict(self) -> dict:
        return {
            "directions": {d: {x: sorted(s) for x, s in t.items()} for d, t in self.directions.items()},
            "vertical": {x: sorted(s) for x, s in self.vertical.items()},
        }

    @classmethod
    def from_sets(cls, directions: dict, vertical: dict) -> "SurvivalTable":
        return cls(
            {d: {x: frozenset(s) for x, s in t.items()} for d, t in directions.items()},
            {x: frozenset(s) for x, s in vertical.items()},
        )

    def __eq__(self, other):
        if not isinstance(other, SurvivalTable):
            return NotImplemented
        return self.directions == other.directions and self.vertical == other.vertical

    def __hash__(self):
        return hash(str(self.to_dict()))


TARGET_SURVIVAL_TABLE = SurvivalTable.from_sets(
    {
        "above": {"A": "BD", "B": "BD", "C": "AC", "D": "AC"},
        "left": {"A": "AC", "B": "AC", "C": "BD", "D": "BD"},
        "right": {"A": "AB", "B": "CD", "C": "AB", "D": "CD"},
        "below": {"A": "CD", "B": "AB", "C": "CD", "D": "AB"},
    },
    {"A": "D", "B": "B", "C": "C", "D": "A"},
)


def _copy(T: SparseTensor, tag: str, duals: dict) -> SparseTensor:
    return T.relabel({r: f"{r}_{tag}" for r in VERTEX_ROLES}, duals)


def _surviving_pairs(T: SparseTensor, pairs: list[tuple[str, str]]) -> set[tuple[int, int]]:
    """Physical index pairs (first copy, second copy) left nonzero after contracting ``pairs``."""
    duals1 = {a: True for a, _ in pairs}
    duals2 = {b: False for _, b in pairs}
    t1 = _copy(T, "1", duals1)
    t2 = _copy(T, "2", duals2)
    out = contract_pair(t1, t2, [(f"{a}_1", f"{b}_2") for a, b in pairs])
    p1, p2 = out.position("phys_1"), out.position("phys_2")
    return {(idx[p1], idx[p2]) for idx in out.entries}


def survival_tables(T: SparseTensor, labels: Sequence[str] = SURVIVAL_LABELS) -> SurvivalTable:
    """Which physical labels can sit next to each other after one contraction.

    ``T`` is a role tensor with a physical leg of dimension ``len(labels)``
    and four 2-dimensional entanglement legs.
    """
    if set(T.labels) != set(VERTEX_ROLES) or T.axis("phys").dim != len(labels):
        raise ConstructionError(
            f"survival tables need a role tensor with a {len(labels)}-dimensional physical leg"
        )
    # (first copy's leg, second copy's leg); first copy holds X unless swapped
    specs = {
        "right": ([("right", "left")], False),
        "left": ([("right", "left")], True),
        "below": ([("down", "up")], False),
        "above": ([("down", "up")], True),
    }
    directions = {}
    for d, (pairs, swap) in specs.items():
        table = {x: set() for x in labels}
        for a, b in _surviving_pairs(T, pairs):
            x, y = (b, a) if swap else (a, b)
            table[labels[x]].add(labels[y])
        directions[d] = table
    vertical = {x: set() for x in labels}
    for a, b in _surviving_pairs(T, [("down", "up"), ("up", "down")]):
        vertical[labels[a]].add(labels[b])
    return SurvivalTable.from_sets(directions, vertical)


def table_diff(a: SurvivalTable, b: SurvivalTable) -> list[dict]:
    out = []
    for d in DIRECTIONS:
        for x in sorted(set(a.directions.get(d, {})) | set(b.directions.get(d, {}))):
            sa, sb = a.directions.get(d, {}).get(x, frozenset()), b.directions.get(d, {}).get(x, frozenset())
            if sa != sb:
                out.append({"label": x, "direction": d, "got": sorted(sa), "want": sorted(sb)})
    for x in sorted(set(a.vertical) | set(b.vertical)):
        sa, sb = a.vertical.get(x, frozenset()), b.vertical.get(x, frozenset())
        if sa != sb:
            out.append({"label": x, "direction": "vertical", "got": sorted(sa), "want": sorted(sb)})
    return out


def tensor_from_patterns(options: Sequence[Sequence[tuple]]) -> SparseTensor:
    """0/1 role tensor: physical label ``n`` carries each leg pattern in ``options[n]``."""
    axes = role_axes({"phys": len(options), "up": 2, "right": 2, "down": 2, "left": 2})
    entries = {}
    for n, pats in enumerate(options):
        for P in pats:
            entries[(n, *(q - 1 for q in P))] = 1
    return SparseTensor(axes, entries, check=False)


def _fast_signature(options) -> tuple:
    n = len(options)
    U = [{P[0] for P in o} for o in options]
    R = [{P[1] for P in o} for o in options]
    D = [{P[2] for P in o} for o in options]
    L = [{P[3] for P in o} for o in options]
    ud = [{(P[0], P[2]) for P in o} for o in options]
    right = tuple(frozenset(y for y in range(n) if R[x] & L[y]) for x in range(n))
    below = tuple(frozenset(y for y in range(n) if D[x] & U[y]) for x in range(n))
    vert = tuple(
        frozenset(y for y in range(n) if any((d, u) in ud[y] for u, d in ud[x]))
        for x in range(n)
    )
    return right, below, vert


def _target_signature(target: SurvivalTable, labels) -> tuple:
    idx = {x: i for i, x in enumerate(labels)}

    def conv(table):
        return tuple(frozenset(idx[y] for y in table[x]) for x in labels)

    return conv(target.directions["right"]), conv(target.directions["below"]), conv(target.vertical)


def _signature_distance(a, b) -> int:
    return sum(len(x ^ y) for ta, tb in zip(a, b) for x, y in zip(ta, tb))


@dataclass
class SurvivalSearch:
    tensor: SparseTensor | None
    examined: int
    patterns: list | None
    nearest_distance: int | None
    nearest_diff: list

    def to_dict(self) -> dict:
        return {
            "found": self.tensor is not None,
            "examined": self.examined,
            "patterns": self.patterns,
            "nearest_distance": self.nearest_distance,
            "nearest_diff": self.nearest_diff,
        }


def _survival_space(n: int, seed: int | None) -> Iterator[tuple]:
    singles = [(P,) for P in PATTERNS]
    pairs = list(itertools.combinations(PATTERNS, 2))
    yield from itertools.product(singles, repeat=n)
    options = singles + pairs
    rest = itertools.product(options, repeat=n)
    if seed is None:
        for combo in rest:
            if any(len(o) == 2 for o in combo):
                yield combo
        return
    rng = random.Random(seed)
    while True:
        combo = tuple(rng.choice(options) for _ in range(n))
        if any(len(o) == 2 for o in combo):
            yield combo


def survival_search(
    target: SurvivalTable,
    budget: int,
    seed: int | None = None,
    labels: Sequence[str] = SURVIVAL_LABELS,
) -> SurvivalSearch:
    """Find a 0/1 tensor, at most two leg patterns per physical label, with the target tables.

    All one-pattern-per-label tensors are tried first, then mixed ones (in
    enumeration order, or sampled from ``seed``).  At most ``budget``
    candidates are examined.  A hit is confirmed with :func:`survival_tables`.
    """
    want = _target_signature(target, labels)
    best, best_opts, examined = None, None, 0
    if budget > 0:
        for combo in _survival_space(len(labels), seed):
            examined += 1
            sig = _fast_signature(combo)
            dist = _signature_distance(sig, want)
            if best is None or dist < best:
                best, best_opts = dist, combo
            if dist == 0:
                T = tensor_from_patterns(combo)
                if survival_tables(T, labels) == target:
                    return SurvivalSearch(T, examined, [list(map(list, o)) for o in combo], 0, [])
            if examined >= budget:
                break
    diff = []
    if best_opts is not None:
        diff = table_diff(survival_tables(tensor_from_patterns(best_opts), labels), target)
    return SurvivalSearch(None, examined, None, best, diff)


def collapse_physical(T: SparseTensor, images: Sequence[int], dim: int) -> SparseTensor:
    """Map physical basis vector ``n`` to ``e_{images[n]}`` in a ``dim``-dimensional leg."""
    p = T.position("phys")
    axes = [Axis(a.label, dim if a.label == "phys" else a.dim, a.dual) for a in T.axes]
    out: dict = {}
    for idx, v in T.entries.items():
        new = idx[:p] + (images[idx[p]],) + idx[p + 1 :]
        out[new] = out.get(new, 0) + v
    return SparseTensor(axes, out, check=False)

"""Sparse exact tensors with labelled axes, contraction, and flattening.

A :class:`SparseTensor` stores only nonzero entries, keyed by multi-index.
Axes carry a label (an edge id for network tensors, a role name for
single-vertex tensors), a dimension, and a dual flag.  Contraction pairs a
primal axis with a dual axis of equal dimension and sums over the shared
index.
"""

from __future__ import annotations

import itertools
import random
import re
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from operator import itemgetter
from typing import Hashable, Iterable, Mapping, Sequence

from .exact import SparseMatrix, scalar
from .netgraph import TNGraph, Vertex, vertex_space_shape

Label = Hashable


class TensorError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    label: Label
    dim: int
    dual: bool = False

    def flipped(self) -> "Axis":
        return Axis(self.label, self.dim, not self.dual)


def _as_axis(a) -> Axis:
    if isinstance(a, Axis):
        return a
    return Axis(*a)


def _getter(positions: Sequence[int]):
    if not positions:
        return lambda idx: ()
    if len(positions) == 1:
        p = positions[0]
        return lambda idx: (idx[p],)
    return itemgetter(*positions)


class SparseTensor:
    """Immutable exact tensor; zero entries are never stored."""

    __slots__ = ("axes", "entries", "_pos")

    def __init__(self, axes: Iterable, entries: Mapping | Iterable = (), *, check: bool = True):
        axes = tuple(_as_axis(a) for a in axes)
        pos = {}
        for i, a in enumerate(axes):
            if a.label in pos:
                raise TensorError(f"duplicate axis label {a.label!r}")
            if not isinstance(a.dim, int) or a.dim < 1:
                raise TensorError(f"axis {a.label!r}: dimension must be >= 1")
            pos[a.label] = i
        if isinstance(entries, Mapping):
            entries = entries.items()
        clean = {}
        dims = [a.dim for a in axes]
        for idx, v in entries:
            idx = tuple(idx)
            if check:
                v = scalar(v)
                if len(idx) != len(axes):
                    raise TensorError(f"index {idx} has wrong length for {len(axes)} axes")
                for i, d in zip(idx, dims):
                    if not 0 <= i < d:
                        raise TensorError(f"index {idx} out of bounds for dims {dims}")
            if v:
                if idx in clean:
                    raise TensorError(f"repeated index {idx}")
                clean[idx] = v
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "entries", clean)
        object.__setattr__(self, "_pos", pos)

    def __setattr__(self, name, value):
        raise AttributeError("SparseTensor is immutable")

    # -- construction helpers -------------------------------------------

    @classmethod
    def zeros(cls, axes) -> "SparseTensor":
        return cls(axes, {})

    @classmethod
    def outer(cls, axes, vectors: Sequence[Sequence], coef=1) -> "SparseTensor":
        """Rank-one tensor ``coef * v1 (x) v2 (x) ...`` from dense vectors."""
        axes = tuple(_as_axis(a) for a in axes)
        if len(vectors) != len(axes):
            raise TensorError("one vector per axis required")
        supports = []
        for a, vec in zip(axes, vectors):
            if len(vec) != a.dim:
                raise TensorError(f"vector for axis {a.label!r} has length {len(vec)} != {a.dim}")
            supports.append([(i, scalar(x)) for i, x in enumerate(vec) if x != 0])
        coef = scalar(coef)
        entries = {}
        for combo in itertools.product(*supports):
            v = coef
            for _, x in combo:
                v *= x
            entries[tuple(i for i, _ in combo)] = v
        return cls(axes, entries, check=False)

    @classmethod
    def from_terms(cls, axes, terms: Iterable[Sequence[Sequence]]) -> "SparseTensor":
        """Sum of rank-one terms, each given as a list of dense vectors."""
        axes = tuple(_as_axis(a) for a in axes)
        total = cls(axes)
        for vectors in terms:
            total = total + cls.outer(axes, vectors)
        return total

    # -- queries ---------------------------------------------------------

    @property
    def labels(self) -> tuple:
        return tuple(a.label for a in self.axes)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(a.dim for a in self.axes)

    @property
    def order(self) -> int:
        return len(self.axes)

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def axis(self, label) -> Axis:
        try:
            return self.axes[self._pos[label]]
        except KeyError:
            raise TensorError(f"unknown axis label {label!r}") from None

    def position(self, label) -> int:
        try:
            return self._pos[label]
        except KeyError:
            raise TensorError(f"unknown axis label {label!r}") from None

    def __getitem__(self, idx):
        return self.entries.get(tuple(idx), 0)

    def __eq__(self, other):
        if not isinstance(other, SparseTensor):
            return NotImplemented
        return self.axes == other.axes and self.entries == other.entries

    def __hash__(self):
        return hash((self.axes, frozenset(self.entries.items())))

    def __repr__(self):
        ax = " ".join(f"{a.label}:{a.dim}{'*' if a.dual else ''}" for a in self.axes)
        return f"SparseTensor([{ax}], nnz={self.nnz})"

    def is_zero(self) -> bool:
        return not self.entries

    # -- arithmetic ------------------------------------------------------

    def _check_same_axes(self, other: "SparseTensor"):
        if self.axes != other.axes:
            raise TensorError("tensors have different axes")

    def __add__(self, other: "SparseTensor") -> "SparseTensor":
        self._check_same_axes(other)
        out = dict(self.entries)
        for idx, v in other.entries.items():
            out[idx] = out.get(idx, 0) + v
        return SparseTensor(self.axes, out, check=False)

    def __neg__(self) -> "SparseTensor":
        return SparseTensor(self.axes, {i: -v for i, v in self.entries.items()}, check=False)

    def __sub__(self, other: "SparseTensor") -> "SparseTensor":
        return self + (-other)

    def scale(self, c) -> "SparseTensor":
        c = scalar(c)
        return SparseTensor(self.axes, {i: c * v for i, v in self.entries.items()}, check=False)

    __rmul__ = scale

    # -- axis manipulation ----------------------------------------------

    def transpose(self, labels: Sequence) -> "SparseTensor":
        """Reorder axes to ``labels`` (a permutation of the current labels)."""
        labels = list(labels)
        if len(labels) != self.order or set(labels) != set(self.labels):
            raise TensorError(f"transpose labels {labels} do not permute {list(self.labels)}")
        perm = [self.position(lab) for lab in labels]
        if perm == list(range(self.order)):
            return self
        get = _getter(perm)
        axes = [self.axes[p] for p in perm]
        return SparseTensor(axes, {get(i): v for i, v in self.entries.items()}, check=False)

    def relabel(self, mapping: Mapping, dual: Mapping | None = None) -> "SparseTensor":
        """Rename axes (labels not in ``mapping`` are kept); optionally reset dual flags."""
        dual = dual or {}
        axes = []
        for a in self.axes:
            new = mapping.get(a.label, a.label)
            axes.append(Axis(new, a.dim, dual.get(a.label, a.dual)))
        return SparseTensor(axes, self.entries, check=False)

    def with_duals(self, flags: Mapping) -> "SparseTensor":
        return SparseTensor(
            [Axis(a.label, a.dim, flags.get(a.label, a.dual)) for a in self.axes],
            self.entries,
            check=False,
        )

    def restrict(self, label, index: int) -> "SparseTensor":
        """Slice at ``label = index``; the axis is removed."""
        p = self.position(label)
        axes = [a for i, a in enumerate(self.axes) if i != p]
        out = {k[:p] + k[p + 1 :]: v for k, v in self.entries.items() if k[p] == index}
        return SparseTensor(axes, out, check=False)


# -- contraction ---------------------------------------------------------


def contract_pair(T: SparseTensor, U: SparseTensor, pairs: Iterable[tuple] = ()) -> SparseTensor:
    """Contract matched axes of ``T`` and ``U``; result axes are T's free axes then U's."""
    pairs = list(pairs)
    t_pos, u_pos = [], []
    for lt, lu in pairs:
        at, au = T.axis(lt), U.axis(lu)
        if at.dim != au.dim:
            raise TensorError(f"dimension mismatch contracting {lt!r} ({at.dim}) with {lu!r} ({au.dim})")
        if at.dual == au.dual:
            raise TensorError(f"contraction of {lt!r} with {lu!r} must pair a primal with a dual axis")
        t_pos.append(T.position(lt))
        u_pos.append(U.position(lu))
    if len(set(t_pos)) != len(t_pos) or len(set(u_pos)) != len(u_pos):
        raise TensorError("an axis appears in more than one contraction pair")
    t_keep = [i for i in range(T.order) if i not in t_pos]
    u_keep = [j for j in range(U.order) if j not in u_pos]
    axes = [T.axes[i] for i in t_keep] + [U.axes[j] for j in u_keep]
    if len({a.label for a in axes}) != len(axes):
        raise TensorError("uncontracted axes of the two tensors share a label")

    t_key, t_rest = _getter(t_pos), _getter(t_keep)
    u_key, u_rest = _getter(u_pos), _getter(u_keep)
    buckets = defaultdict(list)
    for idx, v in U.entries.items():
        buckets[u_key(idx)].append((u_rest(idx), v))
    out: dict = defaultdict(int)
    for idx, v in T.entries.items():
        b = buckets.get(t_key(idx))
        if not b:
            continue
        rest = t_rest(idx)
        for r, w in b:
            out[rest + r] += v * w
    return SparseTensor(axes, out, check=False)


Assignment = dict  # Vertex -> SparseTensor with axes == vertex_space_shape(G, v)


def shape_axes(G: TNGraph, v: Vertex) -> tuple[Axis, ...]:
    return tuple(Axis(*t) for t in vertex_space_shape(G, v))


def default_schedule(G: TNGraph) -> list[int]:
    """Column-by-column sweep for grids (wrap-around edges last); id order otherwise."""
    ents = list(G.entanglement_edges)
    if G.roles is None or G.N is None:
        return [e.id for e in ents]

    def key(e):
        (r1, c1), (r2, c2) = e.tail, e.head
        if c1 == c2:
            return (c1, 0, e.id)
        lo, hi = min(c1, c2), max(c1, c2)
        if hi - lo == 1:
            return (lo, 1, e.id)
        return (G.N, 2, e.id)

    return [e.id for e in sorted(ents, key=key)]


def _validate_assignment(G: TNGraph, asgn: Mapping) -> None:
    missing = [v for v in G.vertices if v not in asgn]
    if missing:
        raise TensorError(f"assignment is missing vertices {missing}")
    extra = [v for v in asgn if v not in G]
    if extra:
        raise TensorError(f"assignment names unknown vertices {extra}")
    for v in G.vertices:
        want = shape_axes(G, v)
        if asgn[v].axes != want:
            raise TensorError(
                f"tensor at {G.label(v)} has axes {asgn[v].axes}, expected {want}"
            )


def network_contract(
    G: TNGraph,
    asgn: Mapping,
    schedule: Sequence[int] | None = None,
    stats: dict | None = None,
    max_nnz: int | None = None,
) -> SparseTensor:
    """Contract every entanglement edge of ``G``; one output axis per physical edge.

    ``schedule`` orders the entanglement edges; unlisted edges follow in the
    default order.  The result does not depend on the schedule.  When given,
    ``stats["peak_nnz"]`` records the largest intermediate tensor and
    ``max_nnz`` aborts once an intermediate grows past it.
    """
    _validate_assignment(G, asgn)
    order = list(schedule) if schedule is not None else []
    for eid in order:
        if not G.edge(eid).is_entanglement:
            raise TensorError(f"schedule names non-entanglement edge {eid}")
    seen = set(order)
    order += [eid for eid in default_schedule(G) if eid not in seen]

    clusters: dict[int, SparseTensor] = {}
    owner: dict = {}
    for i, v in enumerate(G.vertices):
        clusters[i] = asgn[v]
        owner[v] = i
    members = {i: [v] for i, v in enumerate(G.vertices)}
    peak = max((t.nnz for t in clusters.values()), default=0)

    for eid in order:
        e = G.edge(eid)
        a, b = owner[e.tail], owner[e.head]
        if a == b:
            continue
        Ta, Tb = clusters[a], clusters[b]
        shared = [lab for lab in Ta.labels if lab in Tb._pos]
        merged = contract_pair(Ta, Tb, [(lab, lab) for lab in shared])
        peak = max(peak, merged.nnz)
        if max_nnz is not None and peak > max_nnz:
            raise TensorError(f"intermediate with {peak} nonzeros exceeds the guard {max_nnz}")
        clusters[a] = merged
        del clusters[b]
        for v in members[b]:
            owner[v] = a
        members[a] += members.pop(b)

    keys = sorted(clusters)
    result = clusters[keys[0]]
    for k in keys[1:]:
        result = contract_pair(result, clusters[k])
        peak = max(peak, result.nnz)
    if stats is not None:
        stats["peak_nnz"] = peak
    return result.transpose([e.id for e in G.physical_edges])


def place(G: TNGraph, v: Vertex, role_tensor: SparseTensor) -> SparseTensor:
    """Put a role-labelled tensor at grid vertex ``v``: axes become edge ids in shape order."""
    if G.roles is None:
        raise TensorError("graph has no vertex roles (not a grid)")
    roles = G.roles[v]
    if set(role_tensor.labels) != set(roles):
        raise TensorError(
            f"role tensor axes {sorted(map(str, role_tensor.labels))} do not match "
            f"roles {sorted(roles)} at {G.label(v)}"
        )
    shape = shape_axes(G, v)
    by_edge = {a.label: a for a in shape}
    mapping, duals = {}, {}
    for role, eid in roles.items():
        want = by_edge[eid]
        if role_tensor.axis(role).dim != want.dim:
            raise TensorError(
                f"role {role!r} at {G.label(v)} has dimension {role_tensor.axis(role).dim}, "
                f"edge {eid} needs {want.dim}"
            )
        mapping[role] = eid
        duals[role] = want.dual
    return role_tensor.relabel(mapping, duals).transpose([a.label for a in shape])


def bound_contract(
    G: TNGraph,
    T: SparseTensor,
    schedule: Sequence[int] | None = None,
    stats: dict | None = None,
    max_nnz: int | None = None,
) -> SparseTensor:
    """Place the same role tensor at every vertex of a grid and contract."""
    if G.roles is None:
        raise TensorError("bound contraction needs a regular grid graph")
    role_sets = {frozenset(r) for r in G.roles.values()}
    if len(role_sets) != 1:
        raise TensorError("graph is not regular: vertices carry different roles")
    asgn = {v: place(G, v, T) for v in G.vertices}
    return network_contract(G, asgn, schedule, stats, max_nnz)


# -- flattening ----------------------------------------------------------


def flatten(T: SparseTensor, rows: Sequence, cols: Sequence | None = None) -> SparseMatrix:
    """Matrix with rows indexed by ``rows`` axes and columns by the rest (colexicographic)."""
    rows = list(rows)
    if cols is None:
        cols = [lab for lab in T.labels if lab not in set(rows)]
    cols = list(cols)
    if len(rows) + len(cols) != T.order or set(rows) & set(cols):
        raise TensorError("flattening must partition the tensor's axes")
    r_pos = [T.position(lab) for lab in rows]
    c_pos = [T.position(lab) for lab in cols]

    def strides(positions):
        out, acc = [], 1
        for p in positions:
            out.append(acc)
            acc *= T.axes[p].dim
        return out, acc

    r_str, nrows = strides(r_pos)
    c_str, ncols = strides(c_pos)
    data: dict = {}
    for idx, v in T.entries.items():
        i = sum(idx[p] * s for p, s in zip(r_pos, r_str))
        j = sum(idx[p] * s for p, s in zip(c_pos, c_str))
        data.setdefault(i, {})[j] = v
    return SparseMatrix(nrows, ncols, data)


# -- random tensors ------------------------------------------------------


def random_tensor(shape, seed: int, mode: str = "dense", density: float = 0.5) -> SparseTensor:
    """Seeded random integer tensor with entries uniform in [-9, 9].

    ``shape`` is a list of dims (axes labelled 0, 1, ...) or of :class:`Axis`.
    ``mode="sparse"`` keeps each entry with probability ``density``.
    """
    axes = [a if isinstance(a, Axis) else Axis(i, a) for i, a in enumerate(shape)]
    rng = random.Random(seed)
    entries = {}
    for idx in itertools.product(*(range(a.dim) for a in axes)):
        if mode == "dense":
            entries[idx] = rng.randint(-9, 9)
        elif mode == "sparse":
            if rng.random() < density:
                entries[idx] = rng.choice([x for x in range(-9, 10) if x])
        else:
            raise TensorError(f"unknown random mode {mode!r}")
    return SparseTensor(axes, entries, check=False)


def random_assignment(G: TNGraph, seed: int, mode: str = "dense", density: float = 0.5) -> dict:
    rng = random.Random(seed)
    return {
        v: random_tensor(shape_axes(G, v), rng.getrandbits(63), mode, density) for v in G.vertices
    }


# -- text format ---------------------------------------------------------

_INT = re.compile(r"-?\d+$")


def _label_str(label) -> str:
    s = str(label)
    if not s or any(ch.isspace() for ch in s) or ":" in s:
        raise TensorError(f"axis label {label!r} cannot be written to the text format")
    return s


def _parse_label(s: str):
    return int(s) if _INT.match(s) else s


def dumps(T: SparseTensor) -> str:
    """Serialize ``T``: an ``axes:`` header, then one ``i1 ... ik : num/den`` line per entry."""
    head = ["axes:"]
    for a in T.axes:
        head.append(f"{_label_str(a.label)}:{a.dim}" + (":dual" if a.dual else ""))
    lines = [" ".join(head)]
    for idx in sorted(T.entries):
        v = Fraction(T.entries[idx])
        lines.append(f"{' '.join(map(str, idx))} : {v.numerator}/{v.denominator}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> SparseTensor:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or not lines[0].startswith("axes:"):
        raise TensorError("tensor text must start with an 'axes:' header")
    axes = []
    for tok in lines[0][len("axes:") :].split():
        parts = tok.split(":")
        if len(parts) == 2:
            axes.append(Axis(_parse_label(parts[0]), int(parts[1]), False))
        elif len(parts) == 3 and parts[2] == "dual":
            axes.append(Axis(_parse_label(parts[0]), int(parts[1]), True))
        else:
            raise TensorError(f"bad axis token {tok!r}")
    entries = []
    for ln in lines[1:]:
        try:
            left, right = ln.split(":")
            idx = tuple(int(x) for x in left.split())
            entries.append((idx, Fraction(right.strip())))
        except ValueError as exc:
            raise TensorError(f"bad entry line {ln!r}") from exc
    return SparseTensor(axes, entries)


def write_tensor(path, T: SparseTensor) -> None:
    from .io import atomic_write_text

    atomic_write_text(path, dumps(T))


def read_tensor(path) -> SparseTensor:
    with open(path) as fh:
        return loads(fh.read())

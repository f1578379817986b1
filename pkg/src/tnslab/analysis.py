"""Flattening ranks against dimension and min-cut bounds, verification drivers, searches."""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import constructions as cons
from .exact import DEFAULT_PRIME, rank, scalar_mode
from .netgraph import (
    ENTANGLEMENT,
    OPEN,
    CUSTOM,
    Edge,
    TNGraph,
    WeightProfile,
    build_torus_grid,
    min_cut_weighted,
)
from .tensor import SparseTensor, bound_contract, dumps, flatten, network_contract, random_assignment

SCHEMA_VERSION = 1

# desk-scale guards
MAX_SWEEP_SUBSETS = 1 << 20
MAX_VR_NNZ = 1 << 16
MAX_THM16_N = 8
MAX_THM17_N = 6
MAX_CONJECTURE_CELLS = 1 << 20
WITNESS_TEXT_LIMIT = 4096


class AnalysisError(ValueError):
    pass


class QMFViolation(AssertionError):
    """A flattening rank exceeded its dimension or min-cut bound."""


# -- bounds ------------------------------------------------------------------


def _owners(G: TNGraph, labels: Iterable) -> dict:
    out = {}
    for lab in labels:
        e = G.edge(lab)
        if not e.is_physical:
            raise AnalysisError(f"axis {lab!r} is not a physical edge of the graph")
        out[lab] = e.owner
    return out


def qmf_details(G: TNGraph, rows: Sequence, cols: Sequence | None = None) -> tuple[int, bool]:
    """Min-cut bound for the ``rows | cols`` flattening and whether a vertex straddles the cut.

    A vertex owning physical edges on both sides is left free; putting it on
    one side costs the dimensions of its physical edges on the other side.
    """
    rows = list(rows)
    if cols is None:
        cols = [e.id for e in G.physical_edges if e.id not in set(rows)]
    cols = list(cols)
    if set(rows) & set(cols):
        raise AnalysisError("rows and columns overlap")
    if not rows or not cols:
        return 1, False
    row_own, col_own = _owners(G, rows), _owners(G, cols)
    straddle = set(row_own.values()) & set(col_own.values())
    if not straddle:
        return min_cut_weighted(G, set(row_own.values()), set(col_own.values())), False

    leaf = lambda eid: ("leaf", eid)  # noqa: E731
    vertices = list(G.vertices)
    edges = list(G.entanglement_edges)
    next_id = max(e.id for e in G.edges) + 1
    sources, sinks = set(), set()
    for side, owners, terminals in ((rows, row_own, sources), (cols, col_own, sinks)):
        for eid in side:
            v = owners[eid]
            if v in straddle:
                vertices.append(leaf(eid))
                edges.append(Edge(next_id, ENTANGLEMENT, G.edge(eid).weight, tail=v, head=leaf(eid)))
                next_id += 1
                terminals.add(leaf(eid))
            else:
                terminals.add(v)
    aux = TNGraph(vertices, edges, CUSTOM)
    return min_cut_weighted(aux, sources, sinks), True


def qmf_bound(G: TNGraph, rows: Sequence, cols: Sequence | None = None) -> int:
    return qmf_details(G, rows, cols)[0]


def dim_bound(T: SparseTensor, rows: Sequence, cols: Sequence) -> int:
    r = math.prod(T.axis(lab).dim for lab in rows)
    c = math.prod(T.axis(lab).dim for lab in cols)
    return min(r, c)


@dataclass
class FlatteningReport:
    rows: tuple
    cols: tuple
    rank: int
    dim_bound: int
    qmf_bound: int | None
    straddling: bool = False
    names: tuple | None = None

    @property
    def cap(self) -> int:
        return self.dim_bound if self.qmf_bound is None else min(self.dim_bound, self.qmf_bound)

    @property
    def saturated(self) -> bool:
        return self.rank == self.cap

    def to_dict(self) -> dict:
        d = {
            "rows": list(self.rows),
            "cols": list(self.cols),
            "rank": self.rank,
            "dim_bound": self.dim_bound,
            "qmf_bound": self.qmf_bound,
            "saturated": self.saturated,
            "straddling": self.straddling,
        }
        if self.names is not None:
            d["row_names"] = list(self.names)
        return d


def edge_name(G: TNGraph, eid) -> str:
    e = G.edge(eid)
    name = G.label(e.owner)
    if e.external and G.roles is not None:
        role = next(r for r, x in G.roles[e.owner].items() if x == eid)
        name += f":{role}"
    return name


def flattening_report(
    T: SparseTensor,
    rows: Sequence,
    G: TNGraph | None = None,
    prime: int | None = None,
    qmf_cache: dict | None = None,
) -> FlatteningReport:
    """Rank of one flattening with its bounds; raises :class:`QMFViolation` if a bound fails."""
    rows = tuple(rows)
    row_set = set(rows)
    cols = tuple(lab for lab in T.labels if lab not in row_set)
    r = rank(flatten(T, rows, cols), prime)
    dims = dim_bound(T, rows, cols)
    q, straddle, names = None, False, None
    if G is not None:
        key = frozenset(rows)
        if qmf_cache is not None and key in qmf_cache:
            q, straddle = qmf_cache[key]
        else:
            q, straddle = qmf_details(G, rows, cols)
            if qmf_cache is not None:
                qmf_cache[key] = (q, straddle)
        names = tuple(edge_name(G, lab) for lab in rows)
    rep = FlatteningReport(rows, cols, r, dims, q, straddle, names)
    if r > rep.cap:
        raise QMFViolation(f"flattening {rows}: rank {r} exceeds bound {rep.cap}")
    return rep


def edge_vertex_flattening(G: TNGraph, T: SparseTensor, prime: int | None = None) -> FlatteningReport:
    """External physical axes as rows, internal physical axes as columns."""
    if G.topology != OPEN:
        raise AnalysisError("edge/vertex flattening needs an open grid")
    rows = [e.id for e in G.physical_edges if e.external]
    return flattening_report(T, rows, G, prime)


def sweep_family(labels: Sequence, family: str, listed: Iterable | None = None) -> list[tuple]:
    """Row sets of a flattening family; a set and its complement are never both listed."""
    labels = tuple(labels)
    n = len(labels)
    if family == "listed":
        if listed is None:
            raise AnalysisError("family 'listed' needs row sets")
        return [tuple(r) for r in listed]
    if family == "all":
        if (1 << n) > MAX_SWEEP_SUBSETS:
            raise AnalysisError(f"'all' sweep over {n} axes exceeds {MAX_SWEEP_SUBSETS} subsets")
        out = []
        rest = labels[1:]
        for size in range(0, n - 1):
            for combo in itertools.combinations(rest, size):
                out.append((labels[0],) + combo)
        return out
    if family == "balanced":
        if n < 2:
            return []
        if math.comb(n, n // 2) > MAX_SWEEP_SUBSETS:
            raise AnalysisError("balanced sweep too large")
        if n % 2:
            return [tuple(c) for c in itertools.combinations(labels, n // 2)]
        return [(labels[0],) + c for c in itertools.combinations(labels[1:], n // 2 - 1)]
    raise AnalysisError(f"unknown flattening family {family!r}")


def flattening_sweep(
    G: TNGraph | None,
    T: SparseTensor,
    family: str = "balanced",
    listed: Iterable | None = None,
    prime: int | None = None,
    qmf_cache: dict | None = None,
) -> list[FlatteningReport]:
    if G is not None:
        want = {e.id for e in G.physical_edges}
        if set(T.labels) != want:
            raise AnalysisError("tensor axes must be the graph's physical edges")
    cache = {} if qmf_cache is None else qmf_cache
    return [
        flattening_report(T, rows, G, prime, cache)
        for rows in sweep_family(T.labels, family, listed)
    ]


def border_rank_lower_bound(
    T: SparseTensor, extra: Iterable[Sequence] = (), prime: int | None = None
) -> int:
    """Largest flattening rank over ``extra`` row sets and the balanced family.

    Stops early once a flattening reaches the largest dimension cap of the family.
    """
    families = [tuple(r) for r in extra] + sweep_family(T.labels, "balanced")
    if not families:
        return 1 if T.nnz else 0
    caps = []
    for rows in families:
        cols = [lab for lab in T.labels if lab not in set(rows)]
        caps.append(dim_bound(T, rows, cols))
    top = max(caps)
    best = 0
    for rows in families:
        best = max(best, rank(flatten(T, rows), prime))
        if best == top:
            break
    return best


# -- reports -----------------------------------------------------------------


@dataclass
class Report:
    kind: str
    params: dict
    verdict: str = "FAIL"
    seed: int | None = None
    scalar: str = "rational"
    graph: dict | None = None
    construction: dict | None = None
    flattenings: list = field(default_factory=list)
    derived: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    timing: dict | None = None

    @property
    def run_id(self) -> str:
        key = json.dumps([self.kind, self.params, self.seed, self.scalar], sort_keys=True)
        return hashlib.sha256(key.encode()).hexdigest()[:16]

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "schema": SCHEMA_VERSION,
            "run_id": self.run_id,
            "kind": self.kind,
            "params": self.params,
            "seed": self.seed,
            "scalar": self.scalar,
            "graph": self.graph,
            "construction": self.construction,
            "flattenings": [f.to_dict() for f in self.flattenings],
            "derived": self.derived,
            "checks": self.checks,
            "verdict": self.verdict,
        }
        if timing:
            d["timing"] = self.timing
        return d

    def summary(self) -> str:
        bits = [f"{self.kind}", " ".join(f"{k}={v}" for k, v in self.params.items())]
        if "rank" in self.derived:
            bits.append(f"rank={self.derived['rank']}")
        if "expected_rank" in self.derived:
            bits.append(f"expected={self.derived['expected_rank']}")
        bits.append(self.verdict)
        return " ".join(b for b in bits if b)


def _finish(report: Report, t0: float) -> Report:
    report.timing = {"seconds": round(time.perf_counter() - t0, 6)}
    report.verdict = "PASS" if report.checks and all(report.checks.values()) else "FAIL"
    return report


def _audit(M_rank: int, T: SparseTensor, rows, prime: int) -> dict:
    fp = rank(flatten(T, rows), prime)
    return {"prime": prime, "rank": fp, "agrees": fp == M_rank}


def verify_vr_bound(s: int, N: int, prime: int | None = None) -> Report:
    """Same IMM tensor at every vertex of the open 2 x N grid; edge/vertex flattening full rank."""
    if s < 1 or N < 1:
        raise AnalysisError("need s >= 1 and N >= 1")
    est = s ** (4 * N + 4)
    if est > MAX_VR_NNZ:
        raise AnalysisError(f"estimated {est} nonzeros exceeds the desk-scale guard {MAX_VR_NNZ}")
    t0 = time.perf_counter()
    G = cons.imm_graph(s, N)
    stats: dict = {}
    T = bound_contract(G, cons.imm_vertex_tensor(s), stats=stats)
    rep = edge_vertex_flattening(G, T, prime)
    expected = (s * s) ** (2 * N)
    report = Report(
        "vr-bound",
        {"s": s, "N": N},
        scalar=scalar_mode(prime),
        graph=G.descriptor(),
        construction={"name": "imm", "s": s, "vertex_nnz": s**5},
        flattenings=[rep],
    )
    report.derived = {
        "rank": rep.rank,
        "expected_rank": expected,
        "nnz": T.nnz,
        "peak_nnz": stats["peak_nnz"],
        "audit": _audit(rep.rank, T, rep.rows, DEFAULT_PRIME if prime is None else prime),
    }
    report.checks = {
        "full_rank": rep.rank == expected,
        "peak_nnz_within_guard": stats["peak_nnz"] <= MAX_VR_NNZ,
    }
    return _finish(report, t0)


def verify_vr_unbound(k: int, d: int, N: int, prime: int | None = None) -> Report:
    """Per-row vertex tensors on the open 2 x N grid with trivial entanglement."""
    if d < k:
        raise AnalysisError(f"need d >= k, got d={d}, k={k}")
    if k < 1 or N < 1:
        raise AnalysisError("need k >= 1 and N >= 1")
    if k ** (2 * N) > MAX_VR_NNZ:
        raise AnalysisError(f"k^(2N) = {k ** (2 * N)} exceeds the desk-scale guard {MAX_VR_NNZ}")
    t0 = time.perf_counter()
    G, asgn = cons.thm14_assignment(N, k, d)
    T = network_contract(G, asgn)
    rep = edge_vertex_flattening(G, T, prime)
    expected = k ** (2 * N)
    report = Report(
        "vr-unbound",
        {"k": k, "d": d, "N": N},
        scalar=scalar_mode(prime),
        graph=G.descriptor(),
        construction={"name": "thm14", "k": k, "d": d},
        flattenings=[rep],
    )
    report.derived = {
        "rank": rep.rank,
        "expected_rank": expected,
        "nnz": T.nnz,
        "audit": _audit(rep.rank, T, rep.rows, DEFAULT_PRIME if prime is None else prime),
    }
    report.checks = {
        "matches_closed_form": T == cons.thm14_closed_form(N, k, d),
        "full_rank": rep.rank == expected,
    }
    return _finish(report, t0)


def _check_even(N: int, limit: int) -> None:
    if N < 2 or N % 2:
        raise AnalysisError(f"N must be even and >= 2, got {N}")
    if N > limit:
        raise AnalysisError(f"N = {N} exceeds the desk-scale guard {limit}")


def verify_thm16(N: int, prime: int | None = None) -> Report:
    """Basis choices in the two-row torus family; top/bottom flattening rank 2^N."""
    _check_even(N, MAX_THM16_N)
    t0 = time.perf_counter()
    p = cons.thm16_params(N)
    G, asgn = cons.section3_assignment(p)
    T = network_contract(G, asgn)
    closed = cons.section3_closed_form(p, G)
    top = [G.roles[(0, c)]["phys"] for c in range(N)]
    rep = flattening_report(T, top, G, prime)
    terms = 2**N
    lower = border_rank_lower_bound(T, extra=[top], prime=prime)
    report = Report(
        "thm16",
        {"N": N},
        scalar=scalar_mode(prime),
        graph=G.descriptor(),
        construction={"name": "thm16", "terms": terms},
        flattenings=[rep],
    )
    report.derived = {
        "rank": rep.rank,
        "expected_rank": terms,
        "nnz": T.nnz,
        "entries": sorted({str(v) for v in T.entries.values()}),
        "border_rank_lower_bound": lower,
        "rank_upper_bound_terms": terms,
        "audit": _audit(rep.rank, T, top, DEFAULT_PRIME if prime is None else prime),
    }
    report.checks = {
        "matches_closed_form": T == closed,
        "rank_2N": rep.rank == terms,
        "lower_bound_equals_terms": lower == terms,
    }
    return _finish(report, t0)


def thm17_rows(G: TNGraph, N: int) -> list:
    """Physical axes of 1, 1', 2, 3, ..., N."""
    verts = [(0, 0), (1, 0)] + [(0, c) for c in range(1, N)]
    return [G.roles[v]["phys"] for v in verts]


def _basis_input_coefficient(T: SparseTensor, G: TNGraph, N: int) -> dict:
    # fix 1 and 1' to e_1; the rest should read c * sum_i e_i(top) (x) e_i(bottom)
    S = T.restrict(G.roles[(0, 0)]["phys"], 0).restrict(G.roles[(1, 0)]["phys"], 0)
    tops = [S.position(G.roles[(0, c)]["phys"]) for c in range(1, N)]
    bots = [S.position(G.roles[(1, c)]["phys"]) for c in range(1, N)]
    diagonal = all(tuple(i[p] for p in tops) == tuple(i[p] for p in bots) for i in S.entries)
    values = sorted({str(v) for v in S.entries.values()})
    full = S.nnz == 2 ** (N - 1)
    coef = values[0] if diagonal and full and len(values) == 1 else None
    return {"diagonal": diagonal and full, "coefficient": coef}


def verify_thm17(N: int, prime: int | None = None) -> Report:
    """Exhaustive two-term candidate search for the (N+1, N-1) flattening of rank 2^(N-1)."""
    _check_even(N, MAX_THM17_N)
    t0 = time.perf_counter()
    G = cons.section3_graph(N)
    rows = thm17_rows(G, N)
    expected = 2 ** (N - 1)
    candidates = cons.thm17_candidates(N)
    hits, alt_best = [], 0
    witness = None
    for idx, (desc, Tv) in enumerate(candidates):
        phi = bound_contract(G, Tv)
        r = rank(flatten(phi, rows), prime)
        if desc["P1"].count(1) == 2 and all(a != b for a, b in zip(desc["P1"], desc["P2"])):
            alt_best = max(alt_best, r)
        if r == expected:
            hits.append({"index": idx, **desc})
            if witness is None:
                witness = (idx, desc, Tv, phi)
    report = Report(
        "thm17",
        {"N": N},
        scalar=scalar_mode(prime),
        graph=G.descriptor(),
        construction={"name": "thm17-search", "candidates": len(candidates)},
    )
    report.derived = {
        "expected_rank": expected,
        "candidates": len(candidates),
        "hits": hits,
        "alternating_pairs_best_rank": alt_best,
    }
    if witness is not None:
        idx, desc, Tv, phi = witness
        rep = flattening_report(phi, rows, G, prime)
        report.flattenings.append(rep)
        top = [G.roles[(0, c)]["phys"] for c in range(N)]
        report.derived.update(
            {
                "rank": rep.rank,
                "witness": {"index": idx, **desc, "tensor": dumps(Tv)},
                "witness_basis_inputs": _basis_input_coefficient(phi, G, N),
                "witness_top_bottom_rank": rank(flatten(phi, top), prime),
                "witness_border_rank_lower_bound": border_rank_lower_bound(phi, extra=[rows, top], prime=prime),
            }
        )
    report.checks = {"rank_found": witness is not None}
    return _finish(report, t0)


# -- conjecture evidence -------------------------------------------------------


def _witness_record(T: SparseTensor) -> dict:
    text = dumps(T)
    rec = {"nnz": T.nnz, "sha256": hashlib.sha256(text.encode()).hexdigest()}
    if T.nnz <= WITNESS_TEXT_LIMIT:
        rec["tensor"] = text
    return rec


def conjecture_search(
    N: int,
    d: int,
    k: int,
    trials: int,
    seed: int,
    prime: int | None = DEFAULT_PRIME,
    candidate: SparseTensor | None = None,
    audit: bool = False,
    mode: str = "dense",
) -> Report:
    """Random unbound states on the 2 x N torus, swept over all flattenings.

    Records per-trial saturation counts and the best witness.  The verdict is
    always ``EVIDENCE``: sampling cannot settle the existence question.
    """
    if N < 2 or d < 1 or k < 1:
        raise AnalysisError("need N >= 2, d >= 1, k >= 1")
    if k ** (2 * N) > MAX_CONJECTURE_CELLS:
        raise AnalysisError(f"k^(2N) = {k ** (2 * N)} exceeds the guard {MAX_CONJECTURE_CELLS}")
    if trials < 0:
        raise AnalysisError("trials must be >= 0")
    t0 = time.perf_counter()
    G = build_torus_grid(2, N, WeightProfile(d=d, k=k))
    labels = [e.id for e in G.physical_edges]
    family = sweep_family(labels, "all")
    cache: dict = {}
    rng = random.Random(seed)
    records, best, best_seed, best_T = [], -1, None, None
    best_so_far = []
    for trial in range(trials):
        tseed = rng.getrandbits(63)
        T = network_contract(G, random_assignment(G, tseed, mode))
        reps = flattening_sweep(G, T, "listed", family, prime, cache)
        sat = sum(r.saturated for r in reps)
        dropped = [list(r.names) for r in reps if not r.saturated]
        records.append({"trial": trial, "seed": tseed, "saturated": sat, "dropped": dropped})
        if sat > best:
            best, best_seed, best_T = sat, tseed, T
        best_so_far.append(best)
    report = Report(
        "conjecture42",
        {"N": N, "d": d, "k": k, "trials": trials, "mode": mode},
        verdict="EVIDENCE",
        seed=seed,
        scalar=scalar_mode(prime),
        graph=G.descriptor(),
        construction={"name": "random-unbound", "flattenings": len(family)},
    )
    report.derived = {
        "flattenings_per_trial": len(family),
        "trials": records,
        "best_saturated": best if trials else None,
        "best_so_far": best_so_far,
        "all_saturated_found": bool(trials) and best == len(family),
    }
    if best_T is not None:
        report.derived["best_witness"] = {"seed": best_seed, **_witness_record(best_T)}
        if audit:
            exact = flattening_sweep(G, best_T, "listed", family, None, cache)
            report.derived["audit"] = {
                "saturated_rational": sum(r.saturated for r in exact),
                "agrees": sum(r.saturated for r in exact) == best,
            }
    if candidate is not None:
        phi = bound_contract(G, candidate)
        reps = flattening_sweep(G, phi, "listed", family, prime, cache)
        report.flattenings = reps
        report.derived["candidate"] = {
            "tensor": dumps(candidate),
            "saturated": sum(r.saturated for r in reps),
            "dropped": [
                {"rows": list(r.names), "rank": r.rank, "cap": r.cap} for r in reps if not r.saturated
            ],
            "state": _witness_record(phi),
        }
    report.timing = {"seconds": round(time.perf_counter() - t0, 6)}
    return report

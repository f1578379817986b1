"""``tns-lab`` command line: grids, contraction, ranks, constructions, verification, searches."""

from __future__ import annotations

import argparse
import secrets
import sys
from pathlib import Path

from . import analysis as an
from . import constructions as cons
from .exact import DEFAULT_PRIME, rank, scalar_mode
from .io import atomic_write_text, read_json, write_json
from .netgraph import (
    GraphError,
    TNGraph,
    VERTEX_ROLES,
    WeightProfile,
    build_open_grid,
    build_torus_grid,
)
from .tensor import (
    SparseTensor,
    TensorError,
    bound_contract,
    flatten,
    network_contract,
    place,
    read_tensor,
    write_tensor,
)

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
DEFAULT_MAX_CELLS = 1 << 22


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="RNG seed (generated and recorded if omitted)")
    p.add_argument(
        "--scalar",
        nargs="+",
        metavar="MODE",
        default=None,
        help="'rat' for exact rationals or 'fp PRIME' for a prime field",
    )
    p.add_argument("--json", dest="json_path", default=None, help="write the full report here")
    p.add_argument("--max-cells", type=int, default=DEFAULT_MAX_CELLS, help="nonzero-count guard")
    p.add_argument("--no-timing", action="store_true", help="omit timing fields from JSON")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="tns-lab", description="Exact tensor network state lab for 2 x N grids.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("grid", parents=[common], help="build a grid graph")
    topo = g.add_mutually_exclusive_group(required=True)
    topo.add_argument("--torus", action="store_true")
    topo.add_argument("--open", action="store_true")
    g.add_argument("-M", type=int, default=2)
    g.add_argument("-N", type=int, required=True)
    g.add_argument("-d", type=int, required=True)
    g.add_argument("-k", type=int, required=True)
    g.add_argument("-s", type=int, default=None)
    g.add_argument("--out", required=True)

    c = sub.add_parser("contract", parents=[common], help="contract an assignment")
    c.add_argument("--graph", required=True)
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--assign", help="directory of <vertex label>.tns files")
    src.add_argument("--bound", help="one role tensor placed at every vertex")
    c.add_argument("--out", required=True)

    r = sub.add_parser("rank", parents=[common], help="rank of a flattening")
    r.add_argument("--tensor", required=True)
    r.add_argument("--rows", required=True, help="comma-separated row axis labels")
    r.add_argument("--graph", default=None, help="resolve vertex labels and add the min-cut bound")

    m = sub.add_parser("make", parents=[common], help="write a construction")
    m.add_argument(
        "--construction",
        required=True,
        choices=["imm", "thm14", "sec3", "thm16", "thm17-search", "qmf4-search"],
    )
    m.add_argument("-s", type=int, default=2)
    m.add_argument("-N", type=int, default=2)
    m.add_argument("-k", type=int, default=2)
    m.add_argument("-d", type=int, default=2)
    m.add_argument("--budget", type=int, default=100_000)
    m.add_argument("--out", required=True)

    v = sub.add_parser("verify", parents=[common], help="reproduce a rank statement")
    v.add_argument("target", choices=["vr-bound", "vr-unbound", "thm16", "thm17"])
    v.add_argument("-s", type=int, default=2)
    v.add_argument("-N", type=int, default=2)
    v.add_argument("-k", type=int, default=2)
    v.add_argument("-d", type=int, default=2)

    w = sub.add_parser("sweep", parents=[common], help="flattening sweep against the bounds")
    w.add_argument("--tensor", required=True)
    w.add_argument("--graph", required=True)
    w.add_argument("--family", choices=["all", "balanced", "listed"], default="balanced")
    w.add_argument("--rows", action="append", default=None, help="row set for 'listed' (repeatable)")

    s = sub.add_parser("search", parents=[common], help="randomized saturation search")
    s.add_argument("--conjecture42", action="store_true", required=True)
    s.add_argument("-N", type=int, default=2)
    s.add_argument("-d", type=int, default=2)
    s.add_argument("-k", type=int, default=2)
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--mode", choices=["dense", "sparse"], default="dense")
    s.add_argument("--candidate", default=None, help="role tensor to sweep alongside the trials")
    s.add_argument("--audit", action="store_true", help="recompute the best witness over Q")
    return parser


# -- helpers -------------------------------------------------------------------


def _is_prime(n: int) -> bool:
    # deterministic Miller-Rabin for n < 3.3e24
    if n < 2:
        return False
    bases = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    if n in bases:
        return True
    if any(n % b == 0 for b in bases):
        return False
    d, r = n - 1, 0
    while d % 2 == 0:
        d, r = d // 2, r + 1
    for a in bases:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _prime(args, default: int | None) -> int | None:
    if args.scalar is None:
        return default
    mode = args.scalar
    if mode == ["rat"]:
        return None
    if len(mode) == 2 and mode[0] == "fp":
        try:
            p = int(mode[1])
        except ValueError:
            raise UsageError(f"bad prime {mode[1]!r}") from None
        if not _is_prime(p):
            raise UsageError(f"{p} is not prime")
        return p
    raise UsageError("--scalar takes 'rat' or 'fp PRIME'")


def _seed(args) -> int:
    return args.seed if args.seed is not None else secrets.randbits(63)


def _emit(args, doc: dict | None, summary: str) -> None:
    if args.json_path and doc is not None:
        if args.no_timing:
            doc = {k: v for k, v in doc.items() if k != "timing"}
        write_json(args.json_path, doc)
    print(summary)


def _load_graph(path) -> TNGraph:
    return TNGraph.from_json(read_json(path))


def _axis_lookup(T: SparseTensor, G: TNGraph | None, token: str):
    # with a graph, tokens name vertices (their internal physical edge); else raw axis labels
    if G is not None:
        for v in G.vertices:
            if G.label(v) == token:
                return G.roles[v]["phys"] if G.roles is not None else G.physical_at(v)[0].id
    for lab in T.labels:
        if str(lab) == token:
            return lab
    raise UsageError(f"unknown axis {token!r}")


def _parse_rows(T, G, text: str) -> list:
    return [_axis_lookup(T, G, t.strip()) for t in text.split(",") if t.strip()]


def _is_role_tensor(T: SparseTensor) -> bool:
    return set(T.labels) == set(VERTEX_ROLES)


def _write_assignment(out, G: TNGraph, asgn: dict) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "graph.json", G.to_json())
    for v in G.vertices:
        write_tensor(out / f"{G.label(v)}.tns", asgn[v])


def _read_assignment(directory, G: TNGraph) -> dict:
    asgn = {}
    for v in G.vertices:
        path = Path(directory) / f"{G.label(v)}.tns"
        if not path.exists():
            raise UsageError(f"missing tensor file {path}")
        T = read_tensor(path)
        asgn[v] = place(G, v, T) if _is_role_tensor(T) else T
    return asgn


# -- subcommands ---------------------------------------------------------------


def cmd_grid(args) -> int:
    profile = WeightProfile(d=args.d, k=args.k, s=args.s)
    G = build_torus_grid(args.M, args.N, profile) if args.torus else build_open_grid(args.M, args.N, profile)
    write_json(args.out, G.to_json())
    desc = G.descriptor()
    _emit(args, desc, f"grid {G.topology} {args.M}x{args.N}: {len(G.vertices)} vertices, "
          f"{len(G.entanglement_edges)} entanglement edges -> {args.out}")
    return EXIT_OK


def cmd_contract(args) -> int:
    G = _load_graph(args.graph)
    stats: dict = {}
    if args.bound:
        T = bound_contract(G, read_tensor(args.bound), stats=stats, max_nnz=args.max_cells)
    else:
        T = network_contract(G, _read_assignment(args.assign, G), stats=stats, max_nnz=args.max_cells)
    write_tensor(args.out, T)
    doc = {"graph": G.descriptor(), "nnz": T.nnz, "peak_nnz": stats["peak_nnz"], "out": args.out}
    _emit(args, doc, f"contracted {len(G.vertices)} vertices: nnz={T.nnz} peak={stats['peak_nnz']} -> {args.out}")
    return EXIT_OK


def cmd_rank(args) -> int:
    T = read_tensor(args.tensor)
    G = _load_graph(args.graph) if args.graph else None
    prime = _prime(args, None)
    rows = _parse_rows(T, G, args.rows)
    M = flatten(T, rows)
    if M.nnz > args.max_cells:
        raise UsageError(f"flattening has {M.nnz} nonzeros, above --max-cells {args.max_cells}")
    if G is not None:
        rep = an.flattening_report(T, rows, G, prime)
        doc = {"scalar": scalar_mode(prime), **rep.to_dict()}
        r = rep.rank
    else:
        r = rank(M, prime)
        cols = [lab for lab in T.labels if lab not in set(rows)]
        doc = {"scalar": scalar_mode(prime), "rows": rows, "cols": cols, "rank": r,
               "dim_bound": an.dim_bound(T, rows, cols)}
    _emit(args, doc, f"rank={r} ({M.nrows}x{M.ncols}, {scalar_mode(prime)})")
    return EXIT_OK


def cmd_make(args) -> int:
    kind = args.construction
    if kind == "imm":
        write_tensor(args.out, cons.imm_vertex_tensor(args.s))
        summary, doc = f"imm s={args.s} -> {args.out}", {"construction": "imm", "s": args.s}
    elif kind == "thm14":
        G, asgn = cons.thm14_assignment(args.N, args.k, args.d)
        _write_assignment(args.out, G, asgn)
        doc = {"construction": "thm14", "N": args.N, "k": args.k, "d": args.d}
        summary = f"thm14 N={args.N} k={args.k} d={args.d} -> {args.out}/"
    elif kind in ("sec3", "thm16"):
        if kind == "thm16":
            p = cons.thm16_params(args.N)
            doc = {"construction": "thm16", "N": args.N}
        else:
            seed = _seed(args)
            p = cons.random_section3_params(args.N, seed)
            doc = {"construction": "sec3", "N": args.N, "seed": seed}
        G, asgn = cons.section3_assignment(p)
        _write_assignment(args.out, G, asgn)
        summary = f"{kind} N={args.N} -> {args.out}/"
    elif kind == "thm17-search":
        report = an.verify_thm17(args.N, _prime(args, None))
        if not report.passed:
            _emit(args, report.to_dict(not args.no_timing), report.summary())
            return EXIT_FAIL
        w = report.derived["witness"]
        atomic_write_text(args.out, w["tensor"])
        doc = report.to_dict(not args.no_timing)
        summary = f"thm17-search N={args.N}: witness #{w['index']} rank={report.derived['rank']} -> {args.out}"
    else:
        res = cons.survival_search(cons.TARGET_SURVIVAL_TABLE, args.budget, args.seed)
        doc = {"construction": "qmf4-search", "seed": args.seed, **res.to_dict()}
        if res.tensor is None:
            _emit(args, doc, f"qmf4-search: no match in {res.examined} candidates "
                  f"(nearest distance {res.nearest_distance})")
            return EXIT_OK
        write_tensor(args.out, res.tensor)
        summary = f"qmf4-search: match after {res.examined} candidates -> {args.out}"
    _emit(args, doc, summary)
    return EXIT_OK


def cmd_verify(args) -> int:
    prime = _prime(args, None)
    t = args.target
    if t == "vr-bound":
        report = an.verify_vr_bound(args.s, args.N, prime)
    elif t == "vr-unbound":
        report = an.verify_vr_unbound(args.k, args.d, args.N, prime)
    elif t == "thm16":
        report = an.verify_thm16(args.N, prime)
    else:
        report = an.verify_thm17(args.N, prime)
    _emit(args, report.to_dict(not args.no_timing), report.summary())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    G = _load_graph(args.graph)
    T = read_tensor(args.tensor)
    prime = _prime(args, None)
    listed = None
    if args.family == "listed":
        if not args.rows:
            raise UsageError("--family listed needs at least one --rows")
        listed = [_parse_rows(T, G, r) for r in args.rows]
    reps = an.flattening_sweep(G, T, args.family, listed, prime)
    report = an.Report(
        "sweep",
        {"family": args.family, "tensor": Path(args.tensor).name},
        verdict="PASS",
        scalar=scalar_mode(prime),
        graph=G.descriptor(),
        flattenings=reps,
        derived={
            "count": len(reps),
            "saturated": sum(r.saturated for r in reps),
            "max_rank": max((r.rank for r in reps), default=0),
        },
    )
    _emit(args, report.to_dict(not args.no_timing),
          f"sweep {args.family}: {report.derived['saturated']}/{len(reps)} saturated, "
          f"max rank {report.derived['max_rank']}")
    return EXIT_OK


def cmd_search(args) -> int:
    prime = _prime(args, DEFAULT_PRIME)
    seed = _seed(args)
    candidate = read_tensor(args.candidate) if args.candidate else None
    report = an.conjecture_search(
        args.N, args.d, args.k, args.trials, seed, prime, candidate, args.audit, args.mode
    )
    d = report.derived
    summary = (f"search N={args.N} d={args.d} k={args.k} trials={args.trials} seed={seed}: "
               f"best {d['best_saturated']}/{d['flattenings_per_trial']} saturated EVIDENCE")
    _emit(args, report.to_dict(not args.no_timing), summary)
    return EXIT_OK


COMMANDS = {
    "grid": cmd_grid,
    "contract": cmd_contract,
    "rank": cmd_rank,
    "make": cmd_make,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "search": cmd_search,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except an.QMFViolation as exc:
        print(f"tns-lab: bound violated: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, an.AnalysisError, GraphError, TensorError, cons.ConstructionError,
            OSError, KeyError, ValueError) as exc:
        print(f"tns-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

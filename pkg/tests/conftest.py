"""Independent oracles shared by the test modules."""

from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from tnslab.netgraph import ENTANGLEMENT, Edge, TNGraph


def dense_rank(rows) -> int:
    """Plain Gauss-Jordan over Fraction on a dense list of lists."""
    A = [[Fraction(x) for x in r] for r in rows]
    if not A:
        return 0
    m, n = len(A), len(A[0])
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(m):
            if i != r and A[i][c] != 0:
                f = A[i][c] / A[r][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        r += 1
        if r == m:
            break
    return r


def naive_contract(T, U, pairs):
    """Loop over every index of the result and of the contracted axes."""
    tp = [T.position(a) for a, _ in pairs]
    up = [U.position(b) for _, b in pairs]
    t_keep = [i for i in range(T.order) if i not in tp]
    u_keep = [j for j in range(U.order) if j not in up]
    out_dims = [T.dims[i] for i in t_keep] + [U.dims[j] for j in u_keep]
    sum_dims = [T.dims[i] for i in tp]
    out = {}
    for idx in itertools.product(*(range(d) for d in out_dims)):
        ti_free, ui_free = idx[: len(t_keep)], idx[len(t_keep) :]
        total = 0
        for s in itertools.product(*(range(d) for d in sum_dims)):
            ti = [0] * T.order
            ui = [0] * U.order
            for p, x in zip(t_keep, ti_free):
                ti[p] = x
            for p, x in zip(u_keep, ui_free):
                ui[p] = x
            for p, q, x in zip(tp, up, s):
                ti[p] = x
                ui[q] = x
            total += T[ti] * U[ui]
        if total:
            out[idx] = total
    return out


def random_graph(rng, n_vertices: int, n_edges: int, max_weight: int = 1) -> TNGraph:
    verts = list(range(n_vertices))
    edges = []
    for eid in range(n_edges):
        a, b = rng.sample(verts, 2)
        edges.append(Edge(eid, ENTANGLEMENT, rng.randint(1, max_weight), tail=a, head=b))
    return TNGraph(verts, edges)


@pytest.fixture
def rng():
    import random

    return random.Random(20261019)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

import random

import pytest

from tnslab import analysis as an
from tnslab import constructions as cons
from tnslab.exact import DEFAULT_PRIME, rank
from tnslab.netgraph import (
    ENTANGLEMENT,
    PHYSICAL,
    Edge,
    TNGraph,
    WeightProfile,
    brute_force_min_cut,
    build_open_grid,
    build_torus_grid,
)
from tnslab.tensor import Axis, SparseTensor, flatten, network_contract, random_assignment, random_tensor


def _phys(G, *labels):
    return [G.roles[G.vertex_by_label(x)]["phys"] for x in labels]


def test_qmf_torus_2x2_top_bottom():
    G = build_torus_grid(2, 2, WeightProfile(d=2, k=2))
    rows = _phys(G, "1", "2")
    expected = 2 ** brute_force_min_cut(G, [(0, 0), (0, 1)], [(1, 0), (1, 1)])
    assert an.qmf_bound(G, rows) == expected == 16


def test_qmf_empty_rows():
    G = build_torus_grid(2, 2, WeightProfile(d=2, k=2))
    assert an.qmf_bound(G, []) == 1


def test_qmf_open_grid_edge_vertex():
    G = build_open_grid(2, 2, WeightProfile(d=4, k=4, s=4))
    ext = [e.id for e in G.physical_edges if e.external]
    # every vertex owns external and internal edges, so all straddle; the cheapest cut
    # is then the internal physical edges themselves
    bound, straddle = an.qmf_details(G, ext)
    assert straddle
    assert bound == 4**4


def test_qmf_rejects_overlap():
    G = build_torus_grid(2, 2, WeightProfile(d=2, k=2))
    r = _phys(G, "1")
    with pytest.raises(an.AnalysisError):
        an.qmf_bound(G, r, r)


def test_qmf_straddling_custom_graph():
    a, b = "a", "b"
    edges = [
        Edge(0, ENTANGLEMENT, 2, tail=a, head=b),
        Edge(1, PHYSICAL, 2, owner=a),
        Edge(2, PHYSICAL, 3, owner=a),
        Edge(3, PHYSICAL, 2, owner=b),
    ]
    G = TNGraph([a, b], edges)
    bound, straddle = an.qmf_details(G, [1])
    assert straddle and bound == 2
    bound, straddle = an.qmf_details(G, [3])
    assert not straddle and bound == 2


def test_edge_vertex_flattening_zero_and_guard():
    G = build_open_grid(2, 1, WeightProfile(d=2, k=2, s=2))
    Z = SparseTensor([Axis(e.id, e.weight) for e in G.physical_edges])
    assert an.edge_vertex_flattening(G, Z).rank == 0
    T = build_torus_grid(2, 2, WeightProfile(2, 2))
    with pytest.raises(an.AnalysisError):
        an.edge_vertex_flattening(T, Z)


@pytest.mark.parametrize("s,N,expected", [(2, 2, 256)])
def test_edge_vertex_flattening_imm(s, N, expected):
    r = an.verify_vr_bound(s, N)
    assert r.flattenings[0].rank == expected and r.flattenings[0].saturated


def test_sweep_family_canonical():
    labels = list(range(6))
    fam = an.sweep_family(labels, "all")
    assert len(fam) == 2**5 - 1
    keys = {frozenset(f) for f in fam}
    assert all(frozenset(labels) - k not in keys for k in keys)
    bal = an.sweep_family(labels, "balanced")
    assert len(bal) == 10 and all(len(b) == 3 for b in bal)
    assert len(an.sweep_family(list(range(5)), "balanced")) == 10
    with pytest.raises(an.AnalysisError):
        an.sweep_family(list(range(21)), "all")
    with pytest.raises(an.AnalysisError):
        an.sweep_family(labels, "listed")


def test_sweep_thm16_top_bottom():
    p = cons.thm16_params(4)
    G, asgn = cons.section3_assignment(p)
    T = network_contract(G, asgn)
    reps = an.flattening_sweep(G, T, "balanced")
    top = set(_phys(G, "1", "2", "3", "4"))
    hit = [r for r in reps if set(r.rows) == top or set(r.cols) == top]
    assert len(hit) == 1 and hit[0].rank == 16 and hit[0].saturated


def test_sweep_rank_one():
    G = build_torus_grid(2, 2, WeightProfile(2, 2))
    axes = [Axis(e.id, 2) for e in G.physical_edges]
    T = SparseTensor.outer(axes, [[1, 2]] * 4)
    assert all(r.rank == 1 for r in an.flattening_sweep(G, T, "all"))


def test_sweep_without_graph_uses_dimension_bound():
    T = random_tensor([2, 2, 2, 2], 3)
    for r in an.flattening_sweep(None, T, "all"):
        assert r.qmf_bound is None and r.rank <= r.dim_bound


def test_sweep_complement_spot_check():
    G = build_torus_grid(2, 3, WeightProfile(2, 2))
    T = network_contract(G, random_assignment(G, 5))
    for rep in an.flattening_sweep(G, T, "all")[:10]:
        assert rank(flatten(T, rep.cols)) == rep.rank
        assert an.qmf_bound(G, rep.cols) == rep.qmf_bound


def test_qmf_violation_raised():
    # a graph whose cut bound is 1 while the tensor has rank 2 between the sides
    a, b = "a", "b"
    G = TNGraph([a, b], [Edge(0, ENTANGLEMENT, 1, tail=a, head=b), Edge(1, PHYSICAL, 2, owner=a),
                         Edge(2, PHYSICAL, 2, owner=b)])
    T = SparseTensor([Axis(1, 2), Axis(2, 2)], {(0, 0): 1, (1, 1): 1})
    with pytest.raises(an.QMFViolation):
        an.flattening_report(T, [1], G)


def test_border_rank_lower_bound_basic():
    axes = [Axis(i, 2) for i in range(4)]
    assert an.border_rank_lower_bound(SparseTensor.outer(axes, [[1, 1]] * 4)) == 1
    p = cons.thm16_params(4)
    G, asgn = cons.section3_assignment(p)
    assert an.border_rank_lower_bound(network_contract(G, asgn)) == 16


def test_border_rank_bounded_by_term_count():
    rng = random.Random(6)
    axes = [Axis(i, 3) for i in range(4)]
    for _ in range(20):
        r = rng.randint(1, 4)
        terms = [[[rng.randint(-3, 3) for _ in range(3)] for _ in range(4)] for _ in range(r)]
        T = SparseTensor.from_terms(axes, terms)
        assert an.border_rank_lower_bound(T) <= r


@pytest.mark.parametrize("N", [2, 4, 6])
def test_verify_thm16(N):
    r = an.verify_thm16(N)
    assert r.passed and r.derived["rank"] == 2**N
    assert r.derived["audit"]["agrees"]


@pytest.mark.parametrize("N", [3, 0, 10])
def test_verify_thm16_guards(N):
    with pytest.raises(an.AnalysisError):
        an.verify_thm16(N)


def test_verify_vr_guards():
    with pytest.raises(an.AnalysisError):
        an.verify_vr_bound(3, 2)
    with pytest.raises(an.AnalysisError):
        an.verify_vr_unbound(3, 2, 2)


@pytest.mark.parametrize("k,d,N,expected", [(2, 2, 3, 64), (2, 3, 2, 16), (3, 3, 2, 81)])
def test_verify_vr_unbound(k, d, N, expected):
    r = an.verify_vr_unbound(k, d, N)
    assert r.passed and r.derived["rank"] == expected


def test_verify_thm17_report():
    r = an.verify_thm17(4)
    assert r.passed and r.derived["rank"] == 8
    assert r.derived["candidates"] == 480
    assert r.derived["alternating_pairs_best_rank"] <= 2
    assert r.derived["witness_border_rank_lower_bound"] >= 8
    assert r.derived["witness_basis_inputs"]["diagonal"]


def test_verify_thm17_prime_mode_agrees():
    assert an.verify_thm17(2, DEFAULT_PRIME).derived["hits"] == an.verify_thm17(2).derived["hits"]


def test_report_run_id_deterministic():
    a, b = an.verify_thm16(2), an.verify_thm16(2)
    assert a.run_id == b.run_id
    assert a.to_dict(timing=False) == b.to_dict(timing=False)
    assert "timing" not in a.to_dict(timing=False)


def test_conjecture_search_zero_trials():
    r = an.conjecture_search(2, 2, 2, 0, 1)
    assert r.verdict == "EVIDENCE"
    assert r.derived["trials"] == [] and r.derived["best_saturated"] is None


def test_conjecture_search_monotone_and_reproducible():
    r = an.conjecture_search(2, 2, 2, 50, 7)
    best = r.derived["best_so_far"]
    assert len(r.derived["trials"]) == 50
    assert all(x <= y for x, y in zip(best, best[1:]))
    assert best[-1] == max(t["saturated"] for t in r.derived["trials"])
    assert r.to_dict(timing=False) == an.conjecture_search(2, 2, 2, 50, 7).to_dict(timing=False)
    assert r.verdict == "EVIDENCE"


def test_conjecture_search_guard():
    with pytest.raises(an.AnalysisError):
        an.conjecture_search(6, 2, 4, 1, 0)


def test_conjecture_search_candidate_dropped_flattenings():
    found = cons.survival_search(cons.TARGET_SURVIVAL_TABLE, 20_000).tensor
    r = an.conjecture_search(2, 2, 4, 1, 3, candidate=found, audit=True)
    cand = r.derived["candidate"]
    assert cand["saturated"] + len(cand["dropped"]) == r.derived["flattenings_per_trial"]
    assert all(d["rank"] < d["cap"] for d in cand["dropped"])
    assert r.derived["audit"]["agrees"]


# -- QMF inequality, small sample (the full 200-run suite is in test_acceptance) --


@pytest.mark.parametrize(
    "make,family,runs",
    [
        (lambda: build_torus_grid(2, 2, WeightProfile(d=2, k=2)), "all", 30),
        (lambda: build_torus_grid(2, 3, WeightProfile(d=2, k=2)), "all", 20),
        (lambda: build_torus_grid(2, 2, WeightProfile(d=2, k=3)), "all", 10),
        (lambda: build_open_grid(2, 2, WeightProfile(d=2, k=2, s=2)), "balanced", 1),
    ],
)
def test_qmf_inequality_random_networks(make, family, runs):
    G = make()
    rng = random.Random(runs)
    for i in range(runs):
        mode = "sparse" if i % 2 or family == "balanced" else "dense"
        T = network_contract(G, random_assignment(G, rng.getrandbits(63), mode, 0.3))
        for rep in an.flattening_sweep(G, T, family):
            assert rep.rank <= min(rep.dim_bound, rep.qmf_bound)

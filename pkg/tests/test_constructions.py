import itertools

import pytest

from tnslab import constructions as cons
from tnslab.exact import rank
from tnslab.netgraph import VERTEX_ROLES
from tnslab.tensor import Axis, SparseTensor, bound_contract, flatten, network_contract


def test_imm_vertex_tensor_shape_and_support():
    for s in (1, 2, 3):
        T = cons.imm_vertex_tensor(s)
        assert T.labels == VERTEX_ROLES
        assert T.dims == (s * s,) * 5
        assert T.nnz == s**5
        assert set(T.entries.values()) == {1}


def test_imm_s1_contracts_to_single_entry():
    G = cons.imm_graph(1, 2)
    T = bound_contract(G, cons.imm_vertex_tensor(1))
    assert T.nnz == 1


def _thm14_oracle_222():
    # N = k = d = 2 written out: top physical and up legs copy i_c, bottom physical and down legs copy j_c
    G = cons.thm14_graph(2, 2, 2)
    order = [e.id for e in G.physical_edges]
    entries = {}
    for i0, i1, j0, j1 in itertools.product(range(2), repeat=4):
        val = {eid: 0 for eid in order}
        val[G.roles[(0, 0)]["up"]] = i0
        val[G.roles[(0, 0)]["phys"]] = i0
        val[G.roles[(0, 1)]["up"]] = i1
        val[G.roles[(0, 1)]["phys"]] = i1
        val[G.roles[(1, 0)]["down"]] = j0
        val[G.roles[(1, 0)]["phys"]] = j0
        val[G.roles[(1, 1)]["down"]] = j1
        val[G.roles[(1, 1)]["phys"]] = j1
        entries[tuple(val[e] for e in order)] = 1
    return SparseTensor([Axis(e.id, e.weight) for e in G.physical_edges], entries)


def test_thm14_matches_hand_expanded_oracle():
    G, asgn = cons.thm14_assignment(2, 2, 2)
    T = network_contract(G, asgn)
    assert T == _thm14_oracle_222()
    assert T == cons.thm14_closed_form(2, 2, 2)


@pytest.mark.parametrize("N,k,d", [(1, 2, 2), (3, 2, 2), (2, 2, 3), (2, 3, 3)])
def test_thm14_closed_form(N, k, d):
    G, asgn = cons.thm14_assignment(N, k, d)
    assert network_contract(G, asgn) == cons.thm14_closed_form(N, k, d)


def test_thm14_guards():
    with pytest.raises(cons.ConstructionError):
        cons.thm14_assignment(2, 3, 2)


@pytest.mark.parametrize("N", [2, 4])
def test_section3_closed_form_random_draws(N):
    for seed in range(10):
        p = cons.random_section3_params(N, seed)
        G, asgn = cons.section3_assignment(p)
        assert network_contract(G, asgn) == cons.section3_closed_form(p, G)


@pytest.mark.parametrize("N", [2, 4, 6])
def test_thm16_params_give_basis_sum(N):
    p = cons.thm16_params(N)
    G, asgn = cons.section3_assignment(p)
    T = network_contract(G, asgn)
    assert T == cons.section3_closed_form(p, G)
    assert T.nnz == 2**N
    assert set(T.entries.values()) == {1}
    # each term repeats the top row's basis choice on the bottom row
    top = [G.roles[(0, c)]["phys"] for c in range(N)]
    bot = [G.roles[(1, c)]["phys"] for c in range(N)]
    seen = set()
    for idx in T.entries:
        t = tuple(idx[T.position(e)] for e in top)
        assert t == tuple(idx[T.position(e)] for e in bot)
        seen.add(t)
    assert len(seen) == 2**N


@pytest.mark.parametrize("N", [1, 3, 0])
def test_section3_rejects_odd_N(N):
    with pytest.raises(cons.ConstructionError):
        cons.thm16_params(N)


def test_section3_entries_are_input_products():
    p = cons.random_section3_params(2, 3)
    for v in p.vertices():
        T = cons.section3_vertex_tensor(p, v)
        assert T.labels == VERTEX_ROLES
        assert len(cons.section3_vertex_terms(p, v)) == (2 if v[1] == 0 else 4)


def test_thm17_candidates_family():
    cands = cons.thm17_candidates(4)
    assert len(cands) == 480
    descs = [tuple(map(tuple, (d["P1"], d["P2"]))) + (d["x"], d["y"]) for d, _ in cands]
    assert len(set(descs)) == len(descs)
    for d, T in cands:
        assert T.nnz == 2
        assert d["P1"] != d["P2"]
    for d, _ in cands[:12]:
        assert sorted(d["P1"]) == [1, 1, 2, 2]
        assert all(a != b for a, b in zip(d["P1"], d["P2"]))
    with pytest.raises(cons.ConstructionError):
        cons.thm17_candidates(3)


def test_survival_tables_rank_one():
    # physical support {A, B}; right/left legs pair, vertical legs do not
    axes = cons.role_axes({"phys": 4, "up": 2, "right": 2, "down": 2, "left": 2})
    T = SparseTensor.outer(axes, [[1, 1, 0, 0], [1, 0], [1, 0], [0, 1], [1, 0]])
    tab = cons.survival_tables(T)
    assert tab.directions["right"]["A"] == {"A", "B"}
    assert tab.directions["left"]["B"] == {"A", "B"}
    assert tab.directions["right"]["C"] == frozenset()
    assert all(not s for s in tab.directions["below"].values())
    assert all(not s for s in tab.vertical.values())


def test_survival_tables_shape_check():
    with pytest.raises(cons.ConstructionError):
        cons.survival_tables(cons.two_term_tensor(1, (1, 1, 1, 1), 2, (2, 2, 2, 2)))


def test_survival_search_budget_zero():
    res = cons.survival_search(cons.TARGET_SURVIVAL_TABLE, 0)
    assert res.tensor is None and res.examined == 0


def test_survival_search_recovers_known_target():
    known = cons.tensor_from_patterns([[(1, 1, 1, 1)]] * 4)
    res = cons.survival_search(cons.survival_tables(known), 10)
    assert res.tensor is not None and res.examined == 1
    assert cons.survival_tables(res.tensor) == cons.survival_tables(known)


def test_survival_search_target_table_round_trip():
    res = cons.survival_search(cons.TARGET_SURVIVAL_TABLE, 20_000)
    assert res.tensor is not None
    assert cons.survival_tables(res.tensor) == cons.TARGET_SURVIVAL_TABLE
    assert cons.table_diff(cons.survival_tables(res.tensor), cons.TARGET_SURVIVAL_TABLE) == []


def test_survival_search_reports_nearest_miss():
    res = cons.survival_search(cons.TARGET_SURVIVAL_TABLE, 50)
    assert res.tensor is None
    assert res.nearest_distance > 0 and res.nearest_diff


def test_target_table_internal_consistency():
    t = cons.TARGET_SURVIVAL_TABLE.directions
    # Y right of X iff X left of Y, and likewise vertically
    for x, y in itertools.product("ABCD", repeat=2):
        assert (y in t["right"][x]) == (x in t["left"][y])
        assert (y in t["below"][x]) == (x in t["above"][y])


def test_collapse_physical():
    T = cons.tensor_from_patterns([[(1, 1, 1, 1)], [(2, 2, 2, 2)], [(1, 1, 1, 1)], [(1, 2, 1, 2)]])
    C = cons.collapse_physical(T, [0, 1, 0, 1], 2)
    assert C.axis("phys").dim == 2
    assert C[(0, 0, 0, 0, 0)] == 2
    assert C.nnz == 3


def test_two_term_rank_bound():
    G = cons.section3_graph(2)
    T = bound_contract(G, cons.two_term_tensor(1, (1, 1, 2, 2), 2, (2, 2, 1, 1)))
    assert rank(flatten(T, [T.labels[0]])) <= 2

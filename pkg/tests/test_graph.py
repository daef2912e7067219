import math

import networkx as nx
import numpy as np
import pytest

from gmrf_fmp import (
    ModelValueError,
    brute_force_min_fvs,
    build_graph,
    connected_components,
    find_cycle,
    girth,
    greedy_fvs,
    is_acyclic,
    select_pseudo_fvs,
    two_core,
)
from helpers import grid_edge_list, unit_model


def graph_of(n, pairs, weights=None):
    if weights is None:
        weights = [0.5] * len(pairs)
    return build_graph(unit_model(n, [(i, j, w) for (i, j), w in zip(pairs, weights)]))


def nx_of(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    for i in range(g.n):
        for j in g.neighbors[i]:
            if i < j:
                G.add_edge(i, j)
    return G


def random_graph(rng, n, p):
    return graph_of(
        n,
        [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p],
    )


def test_build_graph_structure():
    c3 = unit_model(3, [(0, 1, -0.3), (0, 2, 0.3), (1, 2, -0.3)])
    g = build_graph(c3)
    assert g.n == 3 and g.m == 3
    assert g.neighbors == ((1, 2), (0, 2), (0, 1))
    assert all(w == 0.3 for ws in g.weights for w in ws)

    empty = build_graph(unit_model(4, []))
    assert empty.m == 0

    grid = build_graph(unit_model(9, [(i, j, 0.1) for i, j in grid_edge_list(3)]))
    assert grid.n == 9 and grid.m == 12


def test_build_graph_drops_zero_weight_edges():
    g = build_graph(unit_model(3, [(0, 1, 0.0), (1, 2, 0.5)]))
    assert g.m == 1
    assert g.neighbors[0] == ()


def test_is_acyclic():
    path = graph_of(5, [(i, i + 1) for i in range(4)])
    assert is_acyclic(path)
    c4 = graph_of(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    assert not is_acyclic(c4)
    forest = graph_of(6, [(0, 1), (1, 2), (3, 4)])
    assert is_acyclic(forest)
    assert is_acyclic(c4, removed=(0,))


def test_find_cycle_returns_a_real_cycle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(3, 20))
        g = random_graph(rng, n, 0.25)
        cyc = find_cycle(g)
        G = nx_of(g)
        try:
            nx.find_cycle(G)
            has_cycle = True
        except nx.NetworkXNoCycle:
            has_cycle = False
        assert (cyc is not None) == has_cycle
        assert is_acyclic(g) == (not has_cycle)
        if cyc is not None:
            assert len(cyc) >= 3
            assert len(set(cyc)) == len(cyc)
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                assert b in g.neighbors[a]


def test_girth_examples():
    grid = graph_of(9, grid_edge_list(3))
    assert girth(grid) == 4
    c5 = graph_of(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)])
    assert girth(c5) == 5
    tree = graph_of(4, [(0, 1), (0, 2), (2, 3)])
    assert girth(tree) == math.inf
    triangle = graph_of(3, [(0, 1), (1, 2), (0, 2)])
    assert girth(triangle) == 3


def test_girth_matches_networkx_on_random_graphs():
    rng = np.random.default_rng(17)
    for _ in range(60):
        n = int(rng.integers(3, 25))
        g = random_graph(rng, n, float(rng.uniform(0.05, 0.4)))
        expected = nx.girth(nx_of(g))
        assert girth(g) == expected


def test_girth_never_decreases_when_removing_a_node():
    rng = np.random.default_rng(23)
    for _ in range(20):
        n = int(rng.integers(4, 15))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
        g = graph_of(n, pairs)
        v = int(rng.integers(0, n))
        without = graph_of(n, [(i, j) for i, j in pairs if v not in (i, j)])
        assert girth(without) >= girth(g)


def test_two_core_examples():
    tree = graph_of(5, [(0, 1), (1, 2), (1, 3), (3, 4)])
    core, removed = two_core(tree)
    assert core.m == 0
    assert removed == frozenset(range(5))

    pendant = graph_of(6, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (4, 5)])
    core, removed = two_core(pendant)
    assert removed == frozenset({5})
    assert core.m == 5

    c4 = graph_of(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    core, removed = two_core(c4)
    assert removed == frozenset()
    assert core.neighbors == c4.neighbors


def test_two_core_matches_networkx():
    rng = np.random.default_rng(29)
    for _ in range(40):
        n = int(rng.integers(3, 30))
        g = random_graph(rng, n, 0.15)
        core, removed = two_core(g)
        expected = set(nx.k_core(nx_of(g), 2).nodes)
        assert set(range(n)) - removed == expected


def test_connected_components():
    g = graph_of(6, [(0, 1), (1, 2), (3, 4)])
    comps = connected_components(g)
    assert sorted(sorted(c) for c in comps) == [[0, 1, 2], [3, 4], [5]]


def test_brute_force_min_fvs():
    c4 = graph_of(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    res = brute_force_min_fvs(c4)
    assert res.nodes == (0,) and res.is_full_fvs

    k4 = graph_of(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert len(brute_force_min_fvs(k4).nodes) == 2

    tree = graph_of(3, [(0, 1), (1, 2)])
    assert brute_force_min_fvs(tree).nodes == ()

    assert brute_force_min_fvs(k4, max_k=1) is None


def test_greedy_fvs_examples():
    c4 = graph_of(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    res = greedy_fvs(c4)
    assert len(res.nodes) == 1 and res.is_full_fvs

    two_triangles = graph_of(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    res = greedy_fvs(two_triangles)
    assert len(res.nodes) == 2
    assert is_acyclic(two_triangles, removed=res.nodes)

    forest = graph_of(4, [(0, 1), (2, 3)])
    assert greedy_fvs(forest).nodes == ()


def test_greedy_fvs_is_valid_and_brute_force_is_no_larger():
    rng = np.random.default_rng(31)
    for _ in range(25):
        n = int(rng.integers(4, 15))
        g = random_graph(rng, n, 0.3)
        greedy = greedy_fvs(g)
        assert greedy.is_full_fvs
        assert is_acyclic(g, removed=greedy.nodes)
        best = brute_force_min_fvs(g)
        assert len(best.nodes) <= len(greedy.nodes)
        assert is_acyclic(g, removed=best.nodes)


def test_select_pseudo_fvs_weighted_c4_example():
    m = unit_model(4, [(0, 1, 0.3), (1, 2, 0.2), (2, 3, 0.2), (0, 3, 0.1)])
    res = select_pseudo_fvs(m, 3)
    assert res.nodes == (1,)
    assert res.scores == (0.5,)
    assert res.is_full_fvs


def test_select_pseudo_fvs_tree_and_ties():
    tree = unit_model(5, [(0, 1, 0.9), (1, 2, 0.9), (1, 3, 0.9), (3, 4, 0.9)])
    res = select_pseudo_fvs(tree, 5)
    assert res.nodes == () and res.is_full_fvs

    c3 = unit_model(3, [(0, 1, 0.3), (0, 2, 0.3), (1, 2, 0.3)])
    res = select_pseudo_fvs(c3, 1)
    assert res.nodes == (0,)  # equal scores, lowest index wins
    assert res.is_full_fvs


def test_select_pseudo_fvs_k_zero_and_negative():
    c3 = unit_model(3, [(0, 1, 0.3), (0, 2, 0.3), (1, 2, 0.3)])
    res = select_pseudo_fvs(c3, 0)
    assert res.nodes == () and not res.is_full_fvs
    with pytest.raises(ModelValueError):
        select_pseudo_fvs(c3, -1)


def test_select_pseudo_fvs_worst_mode_picks_argmin():
    m = unit_model(4, [(0, 1, 0.3), (1, 2, 0.2), (2, 3, 0.2), (0, 3, 0.1)])
    res = select_pseudo_fvs(m, 1, worst=True)
    assert res.nodes == (3,)  # score 0.3, the smallest
    assert res.scores == pytest.approx((0.3,))


def test_select_pseudo_fvs_never_picks_pendant_tree_nodes():
    # a triangle with a long pendant path: only triangle nodes are eligible
    m = unit_model(
        6,
        [(0, 1, 0.2), (1, 2, 0.2), (0, 2, 0.2), (2, 3, 0.9), (3, 4, 0.9), (4, 5, 0.9)],
    )
    res = select_pseudo_fvs(m, 2)
    assert set(res.nodes) <= {0, 1, 2}
    assert res.is_full_fvs


def test_select_pseudo_fvs_prefix_monotone():
    rng = np.random.default_rng(37)
    for _ in range(20):
        n = int(rng.integers(5, 20))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
        m = unit_model(n, [(i, j, float(rng.uniform(-1, 1))) for i, j in pairs])
        short = select_pseudo_fvs(m, 2)
        long = select_pseudo_fvs(m, 6)
        assert long.nodes[: len(short.nodes)] == short.nodes
        if long.is_full_fvs:
            g = build_graph(m)
            assert is_acyclic(g, removed=long.nodes)


def test_fvs_result_json_shape():
    m = unit_model(4, [(0, 1, 0.3), (1, 2, 0.2), (2, 3, 0.2), (0, 3, 0.1)])
    res = select_pseudo_fvs(m, 2)
    d = res.to_json_dict()
    assert set(d) == {"nodes", "full", "scores"}
    assert d["nodes"] == [1]
    assert d["full"] is True

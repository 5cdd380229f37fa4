import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mixlab.chain import build_chain
from mixlab.constructions import decorated_tree, random_network, random_regular_expander, torus3d
from mixlab.hitting import absorption_probabilities
from mixlab.network import NetworkBuilder, NetworkError
from mixlab.spectral import spectrum
from mixlab.transforms import (EdgeSelector, decorate, edge_state, lump, nbrw_lift, perturb_edges,
                               reverse_edge_state, stretch_edges)

from conftest import edge_net, networks


def _labelled(net, rng, label="p", frac=0.5):
    b = NetworkBuilder()
    for v, lab in zip(net.ids, net.labels):
        b.add_vertex(v, lab)
    for u, v, w, lab in net.edges():
        b.add_edge(u, v, w, set(lab) | ({label} if rng.random() < frac else set()))
    return b.build()


# selectors

def test_selector_grammar():
    net = NetworkBuilder()
    net.add_vertex("a", {"hub"})
    net.add_edge("a", "b", 1.0, {"left", "plevel:1"})
    net.add_edge("b", "c", 1.0, {"left", "plevel:5"})
    net.add_edge("c", "d", 1.0, {"right", "plevel:2"})
    net = net.build()
    m = lambda q: EdgeSelector(q).mask(net).tolist()
    assert m("left") == [True, True, False]
    assert m("left & plevel<=2") == [True, False, False]
    assert m("!left | plevel>4") == [False, True, True]
    assert m("(left | right) & !(plevel==5)") == [True, False, True]
    assert m("@hub") == [True, False, False]
    assert m("*") == [True] * 3
    assert m("nothing") == [False] * 3
    for bad in ("left &", "(left", "left right", "plevel<="):
        with pytest.raises(ValueError):
            EdgeSelector(bad)


# perturbation

def test_unit_factor_is_identity():
    net = random_network(8, np.random.default_rng(0))
    out = perturb_edges(net, "*", 1.0)
    np.testing.assert_array_equal(out.weights, net.weights)


def test_decorated_tree_selector_counts_left_edges():
    net = decorated_tree(k=2, depth_override=8, seed=0)
    out = perturb_edges(net, net.metadata["perturbation_selector"], 2.0)
    changed = int(np.sum(out.weights != net.weights))
    # left edges leaving levels 0..4: 1 + 2 + 4 + 8 + 16
    expected = sum(1 for u, v, _, lab in net.edges()
                   if "tree" in lab and v == u + "L" and len(u) - 1 <= 4)
    assert changed == expected == 31
    assert out.metadata["perturbation"]["edges"] == 31


def test_single_edge_scaling_leaves_chain_unchanged(two_state):
    a = build_chain(two_state, 0.5)
    b = build_chain(perturb_edges(two_state, "*", 2.0), 0.5)
    np.testing.assert_array_equal(a.kernel.toarray(), b.kernel.toarray())
    np.testing.assert_array_equal(a.stationary, b.stationary)


def test_factor_below_one_rejected(two_state):
    with pytest.raises(ValueError, match=">= 1"):
        perturb_edges(two_state, "*", 0.5)


@given(networks(min_states=3), st.floats(1.0, 4.0), st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_relaxation_time_robust_under_perturbation(net, M, seed):
    lab = _labelled(net, np.random.default_rng(seed))
    base = spectrum(build_chain(lab, 0.5)).relaxation_time
    pert = spectrum(build_chain(perturb_edges(lab, "p", M), 0.5)).relaxation_time
    assert M ** -2 - 1e-9 <= pert / base <= M ** 2 + 1e-9


# lumping

def test_singleton_partition_is_identity():
    net = random_network(6, np.random.default_rng(1))
    out = lump(net, [[v] for v in net.ids])
    assert out.ids == net.ids
    assert sorted(out.edges(), key=str) == sorted(net.edges(), key=str)


def test_lumped_path_gets_weight_two_loop():
    net = edge_net([("u", "w", 1.0), ("w", "x", 1.0), ("x", "v", 1.0)], ["u", "w", "x", "v"])
    out = lump(net, [["u"], ["w", "x"], ["v"]], ["u", "z", "v"])
    assert out.edge_weight("z", "z") == 2.0
    assert out.edge_weight("u", "z") == 1.0 and out.edge_weight("z", "v") == 1.0
    assert "lumped" in out.labels[out.index_of("z")]


def test_lumped_stationary_and_kernel_are_projections():
    rng = np.random.default_rng(5)
    net = random_network(8, rng)
    blocks = [list(net.ids[:3]), list(net.ids[3:5]), list(net.ids[5:])]
    base, lumped = build_chain(net, 0.5), build_chain(lump(net, blocks), 0.5)
    P, pi = base.kernel.toarray(), base.stationary
    idx = [[net.index_of(v) for v in b] for b in blocks]
    for i, bi in enumerate(idx):
        assert abs(lumped.stationary[i] - pi[bi].sum()) <= 1e-12
        for j, bj in enumerate(idx):
            want = (pi[bi] @ P[np.ix_(bi, bj)]).sum() / pi[bi].sum()
            assert abs(lumped.kernel[i, j] - want) <= 1e-12


@given(networks(min_states=3, max_states=12), st.integers(0, 10 ** 6), st.sampled_from([0.0, 0.5]))
@settings(max_examples=40, deadline=None)
def test_lumping_never_shrinks_gap(net, seed, holding):
    rng = np.random.default_rng(seed)
    lab = rng.integers(0, rng.integers(1, net.n_vertices) + 1, net.n_vertices)
    blocks = [[net.ids[i] for i in np.flatnonzero(lab == c)] for c in np.unique(lab)]
    assume(len(blocks) > 1)
    g0 = spectrum(build_chain(net, holding)).gap
    g1 = spectrum(build_chain(lump(net, blocks), holding)).gap
    assert g1 >= g0 - 1e-9


def test_lumping_validation_names_vertex():
    net = edge_net([("a", "b", 1.0), ("b", "c", 1.0)])
    with pytest.raises(NetworkError, match="'c'"):
        lump(net, [["a", "b"]])
    with pytest.raises(NetworkError, match="'b'"):
        lump(net, [["a", "b"], ["b", "c"]])
    with pytest.raises(NetworkError, match="'q'"):
        lump(net, [["a", "b", "c", "q"]])


# stretching

def _effective_conductance(net, u, v):
    L = np.diag(net.vertex_weights) - net.adjacency.toarray()
    np.fill_diagonal(L, np.diag(L) + np.diag(net.adjacency.toarray()))
    e = np.zeros(net.n_vertices)
    e[net.index_of(u)], e[net.index_of(v)] = 1, -1
    return 1 / (e @ np.linalg.pinv(L) @ e)


def test_stretched_edge_is_series_path():
    out = stretch_edges(edge_net([("u", "v", 0.7)]), "*", 3)
    assert out.n_vertices == 4 and out.n_edges == 3
    assert np.all(out.weights == 0.7)
    assert abs(_effective_conductance(out, "u", "v") - 0.7 / 3) < 1e-12
    mid = out.labels[out.index_of("u~v:1")]
    assert {"stretch", "orig-u:u", "orig-v:v", "index:1"} <= mid


def test_empty_selection_is_identity():
    net = random_network(5, np.random.default_rng(2))
    out = stretch_edges(net, "nothing", 4)
    assert out.ids == net.ids and np.array_equal(out.weights, net.weights)


def test_stretch_rejects_loops_and_bad_factor():
    with pytest.raises(NetworkError, match="self-loop"):
        stretch_edges(edge_net([("a", "a", 1.0), ("a", "b", 1.0)]), "*", 2)
    with pytest.raises(ValueError):
        stretch_edges(edge_net([("a", "b", 1.0)]), "*", 1)


@given(networks(min_states=4, max_states=9), st.integers(2, 5), st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_stretch_matches_series_reduction(net, s, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(net.n_edges))
    u, v, w, _ = list(net.edges())[k]
    b1, b2 = NetworkBuilder(), NetworkBuilder()
    for x in net.ids:
        b1.add_vertex(x), b2.add_vertex(x)
    for j, (a, c, ww, _) in enumerate(net.edges()):
        b1.add_edge(a, c, ww, {"target"} if j == k else set())
        b2.add_edge(a, c, ww / s if j == k else ww)
    stretched, reduced = stretch_edges(b1.build(), "target", s), b2.build()
    order = list(rng.permutation(net.ids))
    start, ga, gb = order[0], order[1:2], order[2:3]
    p1 = absorption_probabilities(build_chain(stretched, 0.5), start, [ga, gb])
    p2 = absorption_probabilities(build_chain(reduced, 0.5), start, [ga, gb])
    assert np.abs(p1 - p2).max() <= 1e-10


# decoration

def test_decorate_edge_with_triangle():
    tri = edge_net([("t0", "t1", 1.0), ("t1", "t2", 1.0), ("t2", "t0", 1.0)])
    out = decorate(edge_net([("u", "v", 1.0)]), "u", tri, "t0")
    assert out.n_vertices == 4
    assert out.degrees[out.index_of("u")] == 3
    assert "decorated" in out.labels[out.index_of("u")]


def test_torus_decoration_degree():
    net = edge_net([("u", "v", 1.0)])
    out = decorate(net, "u", torus3d(2), "0,0,0")
    assert out.degrees[out.index_of("u")] == 1 + 3


def test_two_decorations_count():
    net = random_network(6, np.random.default_rng(3))
    w = torus3d(3)
    out = decorate(net, [net.ids[0], net.ids[4]], w, "0,0,0")
    assert out.n_vertices == net.n_vertices + 2 * (w.n_vertices - 1)


def test_decoration_name_collision_is_renamed():
    net = edge_net([("u", "u/x", 1.0)])
    out = decorate(net, "u", edge_net([("a", "x", 1.0)]), "a")
    assert "u/x#2" in out.ids
    assert out.metadata["decoration_renames"] == {"u/x": "u/x#2"}


# non-backtracking lift

def _cycle(n):
    return edge_net([(f"c{i}", f"c{(i + 1) % n}", 1.0) for i in range(n)])


@pytest.mark.parametrize("n", [3, 5])
def test_nbrw_on_cycle_is_deterministic(n):
    k = nbrw_lift(_cycle(n), 0.0).kernel.toarray()
    assert np.all((k == 0) | (k == 1))
    assert np.all(k.sum(axis=1) == 1)


def test_nbrw_three_regular_rows():
    k4 = edge_net([(a, b, 1.0) for a in "abcd" for b in "abcd" if a < b])
    lift = nbrw_lift(k4, 0.5)
    k = lift.kernel.toarray()
    off = k - np.diag(np.diag(k))
    assert np.allclose(np.sort(off, axis=1)[:, -2:], 0.25)
    assert np.allclose(np.diag(k), 0.5)
    np.testing.assert_allclose(lift.stationary, 1 / 12, atol=1e-12)


def test_nbrw_rejects_degree_one():
    with pytest.raises(NetworkError, match="degree 1"):
        nbrw_lift(edge_net([("a", "b", 1.0), ("b", "c", 1.0)]), 0.0)


def test_edge_state_helpers():
    assert reverse_edge_state(edge_state("x", "y")) == "y>x"


def _tree_with_leaf_expander(depth, stretch_right):
    b = NetworkBuilder()
    b.add_vertex("o")
    frontier = ["o"]
    for _ in range(depth):
        nxt = []
        for u in frontier:
            for side in "LR":
                b.add_edge(u, u + side, 1.0, {"left" if side == "L" else "right"})
                nxt.append(u + side)
        frontier = nxt
    exp = random_regular_expander(len(frontier), 3, 0, 0.01)
    for u, v, w, _ in exp.edges():
        b.add_edge(frontier[int(u[1:])], frontier[int(v[1:])], w)
    net = b.build()
    return (stretch_edges(net, "right", 2) if stretch_right else net), frontier


def _first_subtree_law(net, leaves, walk):
    left = [v for v in leaves if v[1] == "L"]
    right = [v for v in leaves if v[1] == "R"]
    if walk == "srw":
        return absorption_probabilities(build_chain(net, 0.5), "o", [left, right])
    lift = nbrw_lift(net, 0.5)
    groups = [[s for s in lift.states if s.split(">")[1] in set(g)] for g in (left, right)]
    start = np.zeros(lift.n_states)
    out = [s for s in lift.states if s.startswith("o>")]
    start[lift.indices_of(out)] = 1 / len(out)
    return absorption_probabilities(lift, start, groups)


def test_nbrw_harmonic_measure_ignores_stretching():
    plain, leaves = _tree_with_leaf_expander(6, False)
    stretched, _ = _tree_with_leaf_expander(6, True)
    a = _first_subtree_law(plain, leaves, "nbrw")
    b = _first_subtree_law(stretched, leaves, "nbrw")
    assert np.abs(a - b).max() <= 1e-12
    s1 = _first_subtree_law(plain, leaves, "srw")
    s2 = _first_subtree_law(stretched, leaves, "srw")
    assert abs(s1[0] - 0.5) < 1e-12 and abs(s2[0] - 0.5) > 0.05

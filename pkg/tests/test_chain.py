import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from mixlab.chain import (ChainInvariantError, build_chain, chain_from_kernel, check_reversibility,
                          heat_kernel_row, heat_kernel_rows, poisson_truncation)
from mixlab.network import NetworkBuilder, NetworkError
from mixlab.spectral import spectrum
from mixlab.transforms import nbrw_lift, reverse_edge_state

from conftest import edge_net, networks


def test_two_state_lazy(two_state):
    ch = build_chain(two_state, 0.5)
    np.testing.assert_allclose(ch.kernel.toarray(), [[0.5, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(ch.stationary, [0.5, 0.5])


def test_path_stationary_law():
    ch = build_chain(edge_net([("u", "v", 1.0), ("v", "w", 2.0)]), 0.0)
    np.testing.assert_allclose(ch.stationary, [1 / 6, 1 / 2, 1 / 3], atol=1e-15)


@given(networks())
@settings(max_examples=40, deadline=None)
def test_lazification_is_averaging(net):
    p = build_chain(net, 0.0).kernel.toarray()
    pl = build_chain(net, 0.5).kernel.toarray()
    assert np.max(np.abs(pl - (np.eye(len(p)) + p) / 2)) <= 1e-15


@given(networks(), st.sampled_from([0.0, 0.3, 0.5, 0.9]))
@settings(max_examples=40, deadline=None)
def test_chain_invariants(net, holding):
    ch = build_chain(net, holding)
    k = ch.kernel.toarray()
    assert np.all(k >= 0)
    assert np.max(np.abs(k.sum(axis=1) - 1)) <= 1e-12
    assert np.all(np.diag(k) >= holding - 1e-12)
    assert abs(ch.stationary.sum() - 1) <= 1e-12
    assert np.max(np.abs(ch.stationary @ k - ch.stationary)) <= 1e-10
    assert check_reversibility(ch).reversible


@given(networks(max_states=12))
@settings(max_examples=30, deadline=None)
def test_lazy_spectrum_is_nonnegative(net):
    ev = spectrum(build_chain(net, 0.5), "dense").eigenvalues
    assert ev.min() >= -1e-12 and ev.max() <= 1 + 1e-12


def test_loop_enters_holding():
    ch = build_chain(edge_net([("a", "a", 2.0), ("a", "b", 1.0)]), 0.0)
    np.testing.assert_allclose(ch.kernel.toarray()[0], [2 / 3, 1 / 3])
    np.testing.assert_allclose(ch.stationary, [3 / 4, 1 / 4])


def test_rejections():
    b = NetworkBuilder()
    b.add_edge("a", "b", 1.0)
    b.add_edge("c", "d", 1.0)
    b.add_edge("c", "e", 1.0)
    with pytest.raises(NetworkError, match="disconnected.*2 vertices.*'a'"):
        build_chain(b.build(), 0.5)
    with pytest.raises(ValueError, match="holding"):
        build_chain(edge_net([("a", "b", 1.0)]), 1.0)


def test_heat_kernel_at_zero_is_point_mass(two_state):
    ch = build_chain(two_state, 0.0)
    np.testing.assert_array_equal(heat_kernel_row(ch, "u", 0.0), [1.0, 0.0])


@pytest.mark.parametrize("t", [0.1, 1.0, 3.7])
def test_two_state_swap_heat_kernel(two_state, t):
    tol = 1e-12
    ch = build_chain(two_state, 0.0)
    assert abs(heat_kernel_row(ch, "u", t, tol)[0] - (1 + math.exp(-2 * t)) / 2) <= tol


@given(networks(max_states=8))
@settings(max_examples=25, deadline=None)
def test_two_speed_identity(net):
    tol = 1e-10
    fast, lazy = build_chain(net, 0.0), build_chain(net, 0.5)
    for t in (0.5, 2.0):
        a = heat_kernel_rows(fast, list(fast.states), [t], tol)[0]
        b = heat_kernel_rows(lazy, list(lazy.states), [2 * t], tol)[0]
        assert np.abs(a - b).max() <= 2 * tol
        assert np.abs(a - expm(t * (fast.kernel.toarray() - np.eye(fast.n_states)))).max() <= 2 * tol


def test_poisson_truncation_is_minimal():
    from scipy.stats import poisson
    for t in (0.5, 5.0, 80.0):
        K = poisson_truncation(t, 1e-9)
        assert poisson.sf(K, t) < 1e-9 <= poisson.sf(K - 1, t)


def test_directed_cycle_is_not_reversible():
    k = sp.csr_matrix(np.roll(np.eye(3), 1, axis=1))
    ch = chain_from_kernel(k, ["1", "2", "3"], np.full(3, 1 / 3))
    rep = check_reversibility(ch)
    assert not rep.reversible
    assert abs(rep.violation - 1 / 3) < 1e-15
    assert not ch.reversible


def test_nbrw_cycle_balance_under_edge_reversal():
    net = edge_net([(f"c{i}", f"c{(i + 1) % 5}", 1.0) for i in range(5)])
    lift = nbrw_lift(net, 0.0)
    # plain detailed balance fails for the rotation; the edge-reversal twist restores it
    assert not check_reversibility(lift).reversible
    assert check_reversibility(lift, involution=reverse_edge_state).reversible


def test_chain_from_kernel_checks_invariants():
    with pytest.raises(ValueError, match="row 0 sums to"):
        chain_from_kernel(sp.csr_matrix([[0.5, 0.4], [0.5, 0.5]]))
    with pytest.raises(ChainInvariantError, match="not invariant"):
        chain_from_kernel(sp.csr_matrix([[0.5, 0.5], [0.0, 1.0]]), stationary=np.array([0.5, 0.5]))

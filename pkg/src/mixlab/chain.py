"""Markov kernels built from weighted networks, plus the continuous-time heat kernel."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.stats import poisson

from .network import NetworkError, WeightedNetwork

ROW_SUM_TOL = 1e-12
STATIONARITY_TOL = 1e-10
BALANCE_TOL = 1e-12


class ChainInvariantError(RuntimeError):
    """A freshly built kernel violated a structural invariant."""


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Row-stochastic sparse kernel with its stationary distribution.

    ``holding`` is the extra holding probability mixed in on top of the
    network walk (``None`` when the kernel was supplied directly).
    """

    kernel: sp.csr_matrix
    stationary: np.ndarray
    states: tuple[str, ...]
    holding: float | None = None
    network: WeightedNetwork | None = None
    reversible: bool = True
    metadata: dict = field(default_factory=dict)

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    @cached_property
    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    def index_of(self, state) -> int:
        if isinstance(state, (int, np.integer)):
            if not 0 <= state < self.n_states:
                raise ValueError(f"state index {state} out of range")
            return int(state)
        try:
            return self.index[state]
        except KeyError:
            raise ValueError(f"unknown state {state!r}") from None

    def indices_of(self, states) -> np.ndarray:
        return np.array([self.index_of(s) for s in states], dtype=np.int64)

    @cached_property
    def transpose(self) -> sp.csr_matrix:
        """``P^T`` in CSR form, used to push row vectors forward."""
        return self.kernel.T.tocsr()

    def step(self, mu: np.ndarray) -> np.ndarray:
        """One step of ``mu -> mu P`` (``mu`` may be a matrix of column vectors)."""
        return self.transpose @ mu

    def point_mass(self, state) -> np.ndarray:
        mu = np.zeros(self.n_states)
        mu[self.index_of(state)] = 1.0
        return mu

    def lazy(self, holding: float = 0.5) -> "MarkovChain":
        """Mix in extra holding: ``holding*I + (1-holding)*P``."""
        if not 0 <= holding < 1:
            raise ValueError("holding must lie in [0, 1)")
        n = self.n_states
        k = (holding * sp.identity(n, format="csr") + (1 - holding) * self.kernel).tocsr()
        return MarkovChain(k, self.stationary, self.states, holding, self.network,
                           self.reversible, dict(self.metadata))


def build_chain(net: WeightedNetwork, holding: float) -> MarkovChain:
    """Random walk on ``net`` with extra holding probability ``holding``.

    ``P(v,u) = (1-holding) c_vu / c_v`` for ``u != v`` and
    ``P(v,v) = holding + (1-holding) c_vv / c_v``.  The stationary law is
    ``c_v / sum(c)``; all three invariants are checked before returning.
    """
    if not 0 <= holding < 1:
        raise ValueError(f"holding probability {holding} outside [0, 1)")
    if net.n_vertices == 0:
        raise NetworkError("network has no vertices")
    bad = np.flatnonzero(~(np.isfinite(net.weights) & (net.weights > 0)))
    if bad.size:
        k = bad[0]
        raise NetworkError(
            f"edge ({net.ids[net.heads[k]]!r}, {net.ids[net.tails[k]]!r}) has non-positive weight {net.weights[k]}")
    comps = net.components()
    if len(comps) > 1:
        small = min(comps, key=len)
        shown = ", ".join(map(repr, small[:5])) + (" ..." if len(small) > 5 else "")
        raise NetworkError(f"network is disconnected: component of {len(small)} vertices [{shown}] is separated")

    adj = net.adjacency
    c = net.vertex_weights
    inv = sp.diags(1.0 / c)
    kernel = ((1 - holding) * (inv @ adj) + holding * sp.identity(net.n_vertices)).tocsr()
    kernel.sort_indices()
    pi = c / c.sum()
    chain = MarkovChain(kernel, pi, net.ids, holding, net, True, dict(net.metadata))
    _check_invariants(chain, reversible=True)
    return chain


def chain_from_kernel(kernel, states: Sequence[str] | None = None,
                      stationary: np.ndarray | None = None,
                      reversible: bool | None = None) -> MarkovChain:
    """Wrap an explicit stochastic matrix.  The stationary law is computed when absent."""
    k = sp.csr_matrix(kernel, dtype=float)
    n = k.shape[0]
    if k.shape != (n, n):
        raise ValueError("kernel must be square")
    if k.nnz and k.data.min() < 0:
        raise ValueError("kernel has negative entries")
    rows = np.asarray(k.sum(axis=1)).ravel()
    worst = int(np.argmax(np.abs(rows - 1)))
    if abs(rows[worst] - 1) > 1e-10:
        raise ValueError(f"row {worst} sums to {rows[worst]!r}, not 1")
    states = tuple(states) if states is not None else tuple(str(i) for i in range(n))
    pi = stationary_by_power_iteration(k) if stationary is None else np.asarray(stationary, float)
    chain = MarkovChain(k, pi, states, None, None, True)
    if reversible is None:
        reversible = check_reversibility(chain).reversible
    chain = MarkovChain(k, pi, states, None, None, bool(reversible))
    _check_invariants(chain, reversible=bool(reversible))
    return chain


def stationary_by_power_iteration(kernel, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    """Stationary law of an irreducible kernel.

    Iterates the half-lazy kernel so that periodic chains converge too
    (it has the same stationary law).
    """
    kt = sp.csr_matrix(kernel).T.tocsr()
    n = kt.shape[0]
    mu = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = 0.5 * (mu + kt @ mu)
        nxt /= nxt.sum()
        if np.abs(nxt - mu).sum() < tol:
            return nxt
        mu = nxt
    raise RuntimeError("power iteration did not converge")


def _check_invariants(chain: MarkovChain, reversible: bool) -> None:
    k, pi = chain.kernel, chain.stationary
    rows = np.asarray(k.sum(axis=1)).ravel()
    if np.max(np.abs(rows - 1)) > ROW_SUM_TOL:
        raise ChainInvariantError(f"row sums deviate from 1 by {np.max(np.abs(rows - 1)):.3e}")
    drift = np.max(np.abs(k.T @ pi - pi))
    if drift > STATIONARITY_TOL:
        raise ChainInvariantError(f"stationary law not invariant (max error {drift:.3e})")
    if reversible:
        rep = check_reversibility(chain, BALANCE_TOL)
        if not rep.reversible:
            raise ChainInvariantError(f"detailed balance fails at {rep.worst_pair} by {rep.violation:.3e}")


@dataclass(frozen=True)
class ReversibilityReport:
    reversible: bool
    worst_pair: tuple[str, str] | None
    violation: float


def check_reversibility(chain: MarkovChain, tol: float = 1e-12,
                        involution: Callable[[str], str] | None = None) -> ReversibilityReport:
    """Detailed balance ``pi(x)P(x,y) = pi(y)P(y,x)``.

    With ``involution`` (a state map ``s`` with ``s(s(x)) = x``) the twisted
    balance ``pi(x)P(x,y) = pi(s y)P(s y, s x)`` is checked instead; edge
    reversal turns a non-backtracking walk into its own time reversal.
    """
    flow = (sp.diags(chain.stationary) @ chain.kernel).tocsr()
    if involution is None:
        other = flow.T.tocsr()
    else:
        perm = np.array([chain.index_of(involution(s)) for s in chain.states])
        # other[x, y] = flow[s y, s x]
        other = flow[perm][:, perm].T.tocsr()
    diff = (flow - other).tocoo()
    if diff.nnz == 0:
        return ReversibilityReport(True, None, 0.0)
    k = int(np.argmax(np.abs(diff.data)))
    worst = float(abs(diff.data[k]))
    pair = (chain.states[diff.row[k]], chain.states[diff.col[k]])
    return ReversibilityReport(worst <= tol, pair if worst > 0 else None, worst)


# heat kernel --------------------------------------------------------------

def poisson_truncation(t: float, tol: float) -> int:
    """Smallest ``K`` with ``P[Poisson(t) > K] < tol``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    if not 0 < tol < 1:
        raise ValueError("tolerance must lie in (0, 1)")
    if t == 0:
        return 0
    k = int(max(0, poisson.ppf(1 - tol, t)))
    while poisson.sf(k, t) >= tol:
        k += 1
    while k > 0 and poisson.sf(k - 1, t) < tol:
        k -= 1
    return k


def poisson_weights(t: float, K: int) -> np.ndarray:
    """``e^{-t} t^k / k!`` for ``k = 0..K`` (computed in log space)."""
    k = np.arange(K + 1)
    return poisson.pmf(k, t) if t > 0 else (k == 0).astype(float)


def heat_kernel_rows(chain: MarkovChain, starts, times: Sequence[float],
                     tol: float = 1e-12) -> np.ndarray:
    """``H_t(x, .) = sum_k e^{-t} t^k/k! P^k(x, .)`` for every start and time.

    Returns an array of shape ``(len(times), len(starts), n_states)``.  The
    series is cut at the first ``K`` whose Poisson tail is below ``tol``, so
    each row is within ``tol`` (in total variation mass) of the exact kernel.
    """
    if not 0 < tol <= 1e-3:
        raise ValueError("tolerance must lie in (0, 1e-3]")
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    idx = chain.indices_of(starts)
    cuts = [poisson_truncation(t, tol) for t in times]
    kmax = max(cuts) if cuts else 0
    wts = [poisson_weights(t, K) for t, K in zip(times, cuts)]
    mu = np.zeros((chain.n_states, len(idx)))
    mu[idx, np.arange(len(idx))] = 1.0
    out = np.zeros((len(times), chain.n_states, len(idx)))
    for k in range(kmax + 1):
        if k:
            mu = chain.step(mu)
        for j, (K, w) in enumerate(zip(cuts, wts)):
            if k <= K:
                out[j] += w[k] * mu
    return out.transpose(0, 2, 1)


def heat_kernel_row(chain: MarkovChain, start, t: float, tol: float = 1e-12) -> np.ndarray:
    return heat_kernel_rows(chain, [start], [t], tol)[0, 0]

"""Spectral quantities of reversible chains.

Eigenvalues come from the symmetrised kernel ``D^{1/2} P D^{-1/2}`` with
``D = diag(pi)``; conductance is computed exactly by subset enumeration on
small chains or by a sweep over the second eigenvector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh

from .chain import MarkovChain, build_chain
from .distances import ALL, DistanceProfile, HorizonExhausted, mixing_time, tv_profile, tv_distance, evolve
from .network import NetworkError, NetworkBuilder, WeightedNetwork

DENSE_LIMIT = 3000
EXACT_CHEEGER_LIMIT = 22
ITERATIVE_RESIDUAL = 1e-8


class NotReversibleError(ValueError):
    pass


@dataclass
class SpectralSummary:
    eigenvalues: np.ndarray        # all (dense) or [1, lambda_2, lambda_min] (iterative)
    lambda2: float
    lambda_min: float
    method: str
    residual: float
    fiedler: np.ndarray | None = field(default=None, repr=False)   # lambda_2 eigenvector over pi

    @property
    def gap(self) -> float:
        return 1.0 - self.lambda2

    @property
    def absolute_gap(self) -> float:
        return 1.0 - max(abs(self.lambda2), abs(self.lambda_min))

    @property
    def relaxation_time(self) -> float:
        return math.inf if self.gap <= 0 else 1.0 / self.gap

    @property
    def absolute_relaxation_time(self) -> float:
        g = self.absolute_gap
        return math.inf if g <= 0 else 1.0 / g


def _symmetrised(chain: MarkovChain) -> sp.csr_matrix:
    r = np.sqrt(chain.stationary)
    s = sp.diags(r) @ chain.kernel @ sp.diags(1.0 / r)
    return ((s + s.T) * 0.5).tocsr()


def spectrum(chain: MarkovChain, mode: str = "auto") -> SpectralSummary:
    """Eigen-summary of a reversible chain (dense up to 3000 states)."""
    if not chain.reversible:
        raise NotReversibleError("spectrum needs a reversible chain; this kernel fails detailed balance")
    n = chain.n_states
    if mode == "auto":
        mode = "dense" if n <= DENSE_LIMIT else "iterative"
    s = _symmetrised(chain)
    root = np.sqrt(chain.stationary)
    if mode == "dense":
        vals, vecs = np.linalg.eigh(s.toarray())
        vals, vecs = vals[::-1], vecs[:, ::-1]
        resid = float(np.max(np.abs(s @ vecs - vecs * vals))) if n <= 400 else \
            float(np.max(np.abs(s @ vecs[:, 1] - vals[1] * vecs[:, 1]))) if n > 1 else 0.0
        l2 = float(vals[1]) if n > 1 else -math.inf
        fied = vecs[:, 1] / root if n > 1 else None
        return SpectralSummary(vals, l2, float(vals[-1]), "dense", resid, fied)
    if mode != "iterative":
        raise ValueError(f"unknown spectrum mode {mode!r}")
    deflated = LinearOperator((n, n), dtype=float,
                              matvec=lambda v: s @ v - root * (root @ v))
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(n)
    lam2, vec2 = eigsh(deflated, k=1, which="LA", tol=1e-12, v0=v0, maxiter=20 * n)
    lmin, vecm = eigsh(s, k=1, which="SA", tol=1e-12, v0=v0, maxiter=20 * n)
    v2, vm = vec2[:, 0], vecm[:, 0]
    resid = max(np.linalg.norm(s @ v2 - lam2[0] * v2), np.linalg.norm(s @ vm - lmin[0] * vm))
    if resid > ITERATIVE_RESIDUAL:
        raise RuntimeError(f"iterative eigensolver residual {resid:.2e} exceeds {ITERATIVE_RESIDUAL}")
    vals = np.array([1.0, lam2[0], lmin[0]])
    return SpectralSummary(vals, float(lam2[0]), float(lmin[0]), "iterative", float(resid), v2 / root)


# conductance ---------------------------------------------------------------

@dataclass
class CheegerResult:
    phi: float
    subset: tuple[str, ...]
    exact: bool
    method: str


def _flow_matrix(chain: MarkovChain) -> sp.csr_matrix:
    f = (sp.diags(chain.stationary) @ chain.kernel).tocsr()
    f.setdiag(0.0)
    f.eliminate_zeros()
    return f


def conductance(chain: MarkovChain, subset: Sequence[str]) -> float:
    """``Q(A, A^c) / pi(A)`` for the given set of states."""
    idx = chain.indices_of(subset)
    inside = np.zeros(chain.n_states, bool)
    inside[idx] = True
    f = _flow_matrix(chain).tocoo()
    q = f.data[inside[f.row] & ~inside[f.col]].sum()
    return float(q / chain.stationary[inside].sum())


def cheeger(chain: MarkovChain, mode: str = "auto") -> CheegerResult:
    """Bottleneck ratio ``min_{pi(A) <= 1/2} Q(A, A^c)/pi(A)``.

    ``exact`` enumerates all subsets (at most 22 states); ``sweep`` scans the
    level sets of the second eigenvector and gives an upper bound.
    """
    n = chain.n_states
    if n < 2:
        raise ValueError("conductance needs at least two states")
    if mode == "auto":
        mode = "exact" if n <= EXACT_CHEEGER_LIMIT else "sweep"
    if mode == "exact":
        if n > EXACT_CHEEGER_LIMIT:
            raise ValueError(f"exact conductance is limited to {EXACT_CHEEGER_LIMIT} states (got {n})")
        return _cheeger_exact(chain)
    if mode == "sweep":
        return _cheeger_sweep(chain)
    raise ValueError(f"unknown conductance mode {mode!r}")


def _cheeger_exact(chain: MarkovChain) -> CheegerResult:
    n = chain.n_states
    f = _flow_matrix(chain).toarray()
    pi = chain.stationary
    out = f.sum(axis=1)
    sym = f + f.T
    q = np.zeros(1)
    mass = np.zeros(1)
    # bitmask DP: adding state b to a set A of lower states changes the
    # boundary flow by out[b] - sum_{y in A} (F[b,y] + F[y,b])
    for b in range(n):
        inner = np.zeros(1)
        for y in range(b):
            inner = np.concatenate([inner, inner + sym[b, y]])
        q = np.concatenate([q, q + out[b] - inner])
        mass = np.concatenate([mass, mass + pi[b]])
    ok = (mass > 0) & (mass <= 0.5 + 1e-12)
    ratio = np.full(mass.shape, np.inf)
    ratio[ok] = q[ok] / mass[ok]
    best = int(np.argmin(ratio))
    members = tuple(chain.states[i] for i in range(n) if best >> i & 1)
    return CheegerResult(float(ratio[best]), members, True, "exact")


def _cheeger_sweep(chain: MarkovChain) -> CheegerResult:
    summ = spectrum(chain)
    order = np.argsort(-summ.fiedler, kind="stable")
    f = _flow_matrix(chain)
    sym = (f + f.T).tocsr()
    out = np.asarray(f.sum(axis=1)).ravel()
    pi = chain.stationary
    inside = np.zeros(chain.n_states, bool)
    q = mass = 0.0
    best, best_k, best_side = math.inf, 0, True
    for k, b in enumerate(order[:-1]):
        row = sym.getrow(b)
        q += out[b] - row.data[inside[row.indices]].sum()
        mass += pi[b]
        inside[b] = True
        small = min(mass, 1.0 - mass)
        if small <= 0:
            continue
        ratio = q / small
        if ratio < best:
            best, best_k, best_side = ratio, k, mass <= 0.5
    chosen = order[:best_k + 1] if best_side else order[best_k + 1:]
    members = tuple(chain.states[i] for i in sorted(chosen))
    return CheegerResult(float(best), members, False, "sweep")


@dataclass
class CheegerInequalityReport:
    lower: float      # phi^2 / 2
    gap: float
    upper: float      # 2 phi
    phi: float
    exact: bool
    holds: bool


def check_cheeger_inequality(chain: MarkovChain, mode: str = "auto",
                             slack: float = 1e-9) -> CheegerInequalityReport:
    """``phi^2/2 <= 1 - lambda_2 <= 2 phi`` with ``slack`` on both sides."""
    ch = cheeger(chain, mode)
    gap = spectrum(chain).gap
    lo, hi = ch.phi ** 2 / 2, 2 * ch.phi
    return CheegerInequalityReport(lo, gap, hi, ch.phi, ch.exact,
                                   lo - slack <= gap <= hi + slack)


# mixing / relaxation bounds --------------------------------------------------

@dataclass
class TrelBoundRow:
    eps: float
    lower: float
    t_mix: float | HorizonExhausted
    upper: float
    holds: bool


def check_relaxation_bounds(chain: MarkovChain, eps_list: Sequence[float] = (0.05, 0.25, 0.45),
                            profile: DistanceProfile | None = None) -> list[TrelBoundRow]:
    """``(t_rel - 1)|log 2 eps| <= t_mix(eps) <= t_rel |log(eps min pi)|``.

    Uses the absolute spectral gap; ``profile`` must be a worst-case (all
    starts) TV profile.  When omitted it is computed up to the largest upper
    bound.
    """
    summ = spectrum(chain)
    trel = summ.absolute_relaxation_time
    pmin = float(chain.stationary.min())
    bounds = [((trel - 1) * abs(math.log(2 * e)), trel * abs(math.log(e * pmin))) for e in eps_list]
    if profile is None:
        horizon = int(math.ceil(max(u for _, u in bounds))) + 1
        profile = tv_profile(chain, horizon, ALL)
    elif profile.starts != ALL:
        raise ValueError("relaxation-time bounds need a worst-case (all starts) profile")
    rows = []
    for e, (lo, hi) in zip(eps_list, bounds):
        tm = mixing_time(profile, e)
        ok = not isinstance(tm, HorizonExhausted) and lo - 1e-9 <= tm <= hi + 1e-9
        rows.append(TrelBoundRow(float(e), lo, tm, hi, ok))
    return rows


def subchain_radius(cheeger_const: float, max_weight: float, size: int, eps: float) -> int:
    """``ceil((2/c^2) ln(3 D |A| / (2 eps)))``."""
    if not (0 < cheeger_const and 0 < eps <= 1 and size >= 1 and max_weight > 0):
        raise ValueError("need c > 0, 0 < eps <= 1, |A| >= 1, D > 0")
    return int(math.ceil(2.0 / cheeger_const ** 2 * math.log(3 * max_weight * size / (2 * eps))))


@dataclass
class SubchainReport:
    radius: int
    cheeger_const: float
    cheeger_exact: bool
    max_weight: float
    size: int
    interior_mass: float
    interior_mass_ok: bool
    early_exit: float
    early_exit_ok: bool
    tv_at_radius: float
    bound_holds: bool

    @property
    def hypotheses_hold(self) -> bool:
        return self.interior_mass_ok and self.early_exit_ok


def induced_subnetwork(net: WeightedNetwork, subset: Sequence[str]) -> WeightedNetwork:
    keep = set(subset)
    bld = NetworkBuilder()
    for v in subset:
        bld.add_vertex(v, net.labels[net.index_of(v)])
    for u, v, w, lab in net.edges():
        if u in keep and v in keep:
            bld.add_edge(u, v, w, lab)
    return bld.build()


def induced_subchain_bound(net: WeightedNetwork, subset: Sequence[str], eps: float, start: str,
                           holding: float = 0.5) -> SubchainReport:
    """Local mixing certificate for a start deep inside ``subset``.

    Weights are rescaled so the smallest vertex weight is 1.  The interior
    excludes vertices of ``subset`` with a neighbour outside it.  When the
    induced chain is too large for exact conductance, ``gap / 2`` (a proven
    lower bound) is used instead.  Both hypotheses are reported; the TV
    distance after ``radius`` steps is computed exactly.
    """
    from .hitting import hitting_pmf

    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    subset = list(dict.fromkeys(subset))
    inside = np.zeros(net.n_vertices, bool)
    inside[[net.index_of(v) for v in subset]] = True
    adj = net.adjacency.tocoo()
    leaks = np.zeros(net.n_vertices, bool)
    leaks[adj.row[inside[adj.row] & ~inside[adj.col]]] = True
    boundary = [net.ids[i] for i in np.flatnonzero(leaks)]
    if leaks[net.index_of(start)]:
        raise ValueError(f"start {start!r} lies on the vertex boundary of the subset")
    c = net.vertex_weights
    scale = 1.0 / c.min() if c.min() < 1 else 1.0
    dmax = float(c[inside].max() * scale)

    sub = induced_subnetwork(net, subset)
    if len(sub.components()) > 1:
        raise NetworkError("the induced subnetwork is disconnected")
    sub_chain = build_chain(sub, holding)
    if sub.n_vertices < 2:
        raise ValueError("subset needs at least two vertices")
    if sub.n_vertices <= EXACT_CHEEGER_LIMIT:
        cc, exact = cheeger(sub_chain, "exact").phi, True
    else:
        cc, exact = spectrum(sub_chain).gap / 2, False
    r = subchain_radius(cc, dmax, len(subset), eps)

    full = build_chain(net, holding)
    pi = full.stationary
    interior_mass = float(pi[inside & ~leaks].sum())
    if boundary:
        pmf = hitting_pmf(full, start, boundary, r - 1)
        escape = float(pmf.masses.sum())
    else:
        escape = 0.0
    tv = tv_distance(evolve(full, start, r), pi)
    return SubchainReport(r, cc, exact, dmax, len(subset), interior_mass,
                          interior_mass >= 1 - eps / 3, escape, escape <= eps / 3,
                          tv, tv <= eps)


@dataclass
class RelaxationScalingReport:
    params: list[float]
    relaxation_times: list[float]
    exponent: float
    ratios: list[float]
    kind: str

    @property
    def ratio_spread(self) -> float:
        return max(self.ratios) / min(self.ratios)


def relaxation_scaling(family: Sequence[tuple[float, MarkovChain]], kind: str) -> RelaxationScalingReport:
    """Fit ``log t_rel`` against ``log param``.

    ``kind='stretch'`` normalises by ``s^2``, ``kind='decoration'`` by ``k^3``.
    """
    if len(family) < 3:
        raise ValueError("relaxation scaling needs at least three family members")
    power = {"stretch": 2, "decoration": 3}.get(kind)
    if power is None:
        raise ValueError("kind must be 'stretch' or 'decoration'")
    params = [float(p) for p, _ in family]
    trels = [spectrum(ch).relaxation_time for _, ch in family]
    slope = float(np.polyfit(np.log(params), np.log(trels), 1)[0])
    ratios = [t / p ** power for p, t in zip(params, trels)]
    return RelaxationScalingReport(params, trels, slope, ratios, kind)

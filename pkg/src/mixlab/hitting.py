"""Exact hitting-time laws by absorbing forward iteration, and the identities
and large-deviation quantities built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import bisect, minimize_scalar
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve
from scipy.stats import poisson

from .chain import MarkovChain
from .distances import HorizonExhausted


@dataclass
class HittingPMF:
    """``masses[k] = P[T = k]`` for ``k <= horizon``; ``residual = P[T > horizon]``."""

    masses: np.ndarray
    residual: float

    @property
    def horizon(self) -> int:
        return len(self.masses) - 1

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.masses)

    def mean(self) -> float:
        """Mean of the observed part (exact only when the residual is negligible)."""
        return float(np.arange(len(self.masses)) @ self.masses)

    def total(self) -> float:
        return float(self.masses.sum() + self.residual)

    def to_csv(self) -> str:
        """``t,mass`` rows followed by a ``residual,<value>`` row."""
        lines = ["t,mass"] + [f"{k},{float(m)!r}" for k, m in enumerate(self.masses)]
        lines.append(f"residual,{float(self.residual)!r}")
        return "\n".join(lines) + "\n"


def _start_vector(chain: MarkovChain, start) -> np.ndarray:
    if isinstance(start, np.ndarray) and start.ndim == 1 and start.size == chain.n_states:
        return start.astype(float).copy()
    return chain.point_mass(start)


def absorption_masses(chain: MarkovChain, start, targets: Sequence, horizon: int) -> tuple[np.ndarray, float]:
    """Per-target absorption masses ``out[k, j] = P[T = k, X_T = targets[j]]``."""
    if horizon < 0 or int(horizon) != horizon:
        raise ValueError("horizon must be a non-negative integer")
    if isinstance(targets, str):
        targets = [targets]
    tgt = chain.indices_of(targets)
    if tgt.size == 0:
        raise ValueError("target set is empty")
    if len(set(tgt.tolist())) != tgt.size:
        raise ValueError("target set has repeated states")
    mu = _start_vector(chain, start)
    out = np.zeros((int(horizon) + 1, tgt.size))
    out[0] = mu[tgt]
    mu[tgt] = 0.0
    for k in range(1, int(horizon) + 1):
        mu = chain.step(mu)
        out[k] = mu[tgt]
        mu[tgt] = 0.0
    return out, float(mu.sum())


def hitting_pmf(chain: MarkovChain, start, targets, horizon: int) -> HittingPMF:
    """Law of the first time the chain started at ``start`` is in ``targets``."""
    out, res = absorption_masses(chain, start, targets, horizon)
    return HittingPMF(out.sum(axis=1), res)


def absorption_probabilities(chain: MarkovChain, start, groups: Sequence[Sequence]) -> np.ndarray:
    """``out[j]`` is the probability that the first visit to the union of
    ``groups`` lands in ``groups[j]`` (exact sparse linear solve).

    ``start`` is a state or a distribution; mass escaping every group (only
    possible when some class never reaches them) is left out of the sum.
    """
    idx = [chain.indices_of(g) for g in groups]
    owner = np.full(chain.n_states, -1)
    for j, g in enumerate(idx):
        if g.size == 0:
            raise ValueError(f"group {j} is empty")
        if np.any(owner[g] >= 0):
            raise ValueError("groups overlap")
        owner[g] = j
    free = np.flatnonzero(owner < 0)
    P = chain.kernel.tocsr()
    hits = np.zeros((chain.n_states, len(idx)))
    for j, g in enumerate(idx):
        hits[g, j] = 1.0
    if free.size:
        A = sp.identity(free.size, format="csc") - P[free][:, free].tocsc()
        rhs = np.column_stack([np.asarray(P[free][:, g].sum(axis=1)).ravel() for g in idx])
        sol = spsolve(A, rhs)
        hits[free] = sol.reshape(free.size, len(idx))
    return _start_vector(chain, start) @ hits


def double_hitting_pmf(first: HittingPMF, second: HittingPMF) -> HittingPMF:
    """Law of the sum of two independent hitting times.

    Only times up to the smaller horizon are fully determined; the rest of
    the mass (including both residuals) is carried in ``residual``.
    """
    h = min(first.horizon, second.horizon)
    conv = np.convolve(first.masses[:h + 1], second.masses[:h + 1])
    known = conv[:h + 1]
    tail = conv[h + 1:].sum()
    # P[A > h] + P[A <= h, B > h] + P[A, B <= h, A + B > h]
    a_late = first.residual + first.masses[h + 1:].sum()
    b_late = second.residual + second.masses[h + 1:].sum()
    res = a_late + first.masses[:h + 1].sum() * b_late + tail
    return HittingPMF(known, float(res))


@dataclass
class BranchedPMF:
    """Law of the "reach ``y``, possibly via ``z``" time.

    ``direct[k] = P[T_y = k <= T_z]``; ``via[k]`` is the law of
    ``T_z + T'_z`` on ``{T_z < T_y}`` where ``T'_z`` is an independent hitting
    time of ``z`` started from ``y``.
    """

    direct: np.ndarray
    via: np.ndarray
    residual: float

    @property
    def masses(self) -> np.ndarray:
        return self.direct + self.via

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.masses)


def branched_hitting_pmf(chain: MarkovChain, x, y, z, horizon: int) -> BranchedPMF:
    if chain.index_of(y) == chain.index_of(z):
        p = hitting_pmf(chain, x, [y], horizon)
        return BranchedPMF(p.masses, np.zeros_like(p.masses), p.residual)
    both, res_x = absorption_masses(chain, x, [y, z], horizon)
    direct, to_z = both[:, 0], both[:, 1]
    back = hitting_pmf(chain, y, [z], horizon)
    via = np.convolve(to_z, back.masses)[:horizon + 1]
    res = res_x + to_z.sum() - via.sum()
    return BranchedPMF(direct, via, float(res))


# continuous time -------------------------------------------------------------

@dataclass(frozen=True)
class Poissonized:
    value: float
    error_bound: float


def poissonize(pmf: HittingPMF, rate: float, t: float) -> Poissonized:
    """``P[tau <= t]`` where ``tau`` is the ``T``-th arrival of a rate-``rate`` clock.

    Equals ``sum_m pmf[m] P[Poisson(rate t) >= m]``.  The unresolved residual
    can add at most ``residual * P[Poisson(rate t) > horizon]``.
    """
    if rate <= 0 or t < 0:
        raise ValueError("rate must be positive and t non-negative")
    m = np.arange(len(pmf.masses))
    tail = poisson.sf(m - 1, rate * t) if t > 0 else (m == 0).astype(float)
    value = float(pmf.masses @ tail)
    bound = pmf.residual * (float(poisson.sf(pmf.horizon, rate * t)) if t > 0 else 0.0)
    return Poissonized(value, bound)


def quantile_t_delta(pmf: HittingPMF, delta: float, n: int, continuous: bool = False,
                     rate: float = 2.0, xtol: float = 1e-6):
    """Smallest time whose CDF reaches ``2^{-delta n}``.

    Discrete: the first integer ``k``.  Continuous: the Poissonized CDF is
    inverted by bisection to ``xtol``.  Returns :class:`HorizonExhausted`
    when the observed mass never reaches the threshold.
    """
    if not delta >= 0 or n < 1:
        raise ValueError("need delta >= 0 and n >= 1")
    thr = 2.0 ** (-delta * n)
    cdf = pmf.cdf()
    if not continuous:
        # relative slack so that delta = 0 (threshold 1) survives rounding
        hit = np.flatnonzero(cdf >= thr * (1 - 1e-12))
        if hit.size == 0:
            return HorizonExhausted(thr, float(pmf.horizon), float(cdf[-1]))
        return int(hit[0])
    f = lambda t: poissonize(pmf, rate, t).value - thr
    if f(0.0) >= 0:
        return 0.0
    hi = max(1.0, pmf.horizon / rate / 4)
    while f(hi) < 0:
        if hi > pmf.horizon / rate:
            return HorizonExhausted(thr, pmf.horizon / rate, poissonize(pmf, rate, hi).value)
        hi *= 1.5
    return float(bisect(f, 0.0, hi, xtol=xtol))


# three-point return identity ---------------------------------------------------

@dataclass
class ReturnIdentityReport:
    separating: bool
    equality_residual: float | None     # None when z does not separate x from y
    decomposition_residual: float
    margin_branched: float              # min_t [lhs - P[T_{z,y} <= t]]
    margin_direct: float                # min_t [lhs - P_x[T_y <= t]]
    t_max: int


def separates(chain: MarkovChain, x, y, z) -> bool:
    """True when every path from ``x`` to ``y`` in the transition graph visits ``z``."""
    ix, iy, iz = chain.index_of(x), chain.index_of(y), chain.index_of(z)
    if iz in (ix, iy):
        return True
    k = chain.kernel.tolil(copy=True)
    k[iz, :] = 0
    k[:, iz] = 0
    _, lab = connected_components(k.tocsr(), directed=True, connection="strong")
    # reversible support is symmetric, so strong components are the components
    return lab[ix] != lab[iy]


def _return_ratios(chain: MarkovChain, a: int, t_max: int) -> np.ndarray:
    mu = chain.point_mass(a)
    out = np.empty(t_max + 1)
    for s in range(t_max + 1):
        if s:
            mu = chain.step(mu)
        out[s] = mu[a] / chain.stationary[a]
    return out


def verify_return_identity(chain: MarkovChain, x, y, z, t_max: int) -> ReturnIdentityReport:
    """Compare ``P^t(x,y)/pi(y)`` with first-passage decompositions through ``z``.

    The chain must be reversible with non-negative spectrum (holding >= 1/2).
    Checks, for ``t <= t_max``:

    * the general decomposition over which of ``y``/``z`` is reached first;
    * when ``z`` separates ``x`` from ``y``, the equality with
      ``sum_k P[T_z^x + T_z^y = k] P^{t-k}(z,z)/pi(z)``;
    * the lower bounds ``P[T_{z,y} <= t]`` and ``P_x[T_y <= t]``.
    """
    if chain.holding is None or chain.holding < 0.5:
        raise ValueError("the return identity needs a reversible chain with holding >= 1/2")
    ix, iy, iz = chain.index_of(x), chain.index_of(y), chain.index_of(z)
    pi = chain.stationary
    lhs = np.empty(t_max + 1)
    mu = chain.point_mass(ix)
    for t in range(t_max + 1):
        if t:
            mu = chain.step(mu)
        lhs[t] = mu[iy] / pi[iy]
    ret_z = _return_ratios(chain, iz, t_max)
    ret_y = _return_ratios(chain, iy, t_max)
    br = branched_hitting_pmf(chain, ix, iy, iz, t_max)
    rhs = np.convolve(br.direct, ret_y)[:t_max + 1] + np.convolve(br.via, ret_z)[:t_max + 1]
    decomp = float(np.max(np.abs(lhs - rhs)))
    sep = separates(chain, ix, iy, iz)
    eq = None
    if sep:
        tx = hitting_pmf(chain, ix, [iz], t_max)
        ty = hitting_pmf(chain, iy, [iz], t_max)
        both = np.convolve(tx.masses, ty.masses)[:t_max + 1]
        eq = float(np.max(np.abs(lhs - np.convolve(both, ret_z)[:t_max + 1])))
    direct = hitting_pmf(chain, ix, [iy], t_max).cdf()
    return ReturnIdentityReport(sep, eq, decomp, float(np.min(lhs - br.cdf())),
                                float(np.min(lhs - direct)), t_max)


# large deviations ---------------------------------------------------------------

@dataclass(frozen=True)
class RateValue:
    value: float
    maximizer: float
    interior: bool
    critical: float        # right end of the domain of the generating function


def passage_rate(alpha: float, r: float, toward: float = 2 / 3,
                 literal: bool = False) -> RateValue:
    """Legendre transform of the log generating function of a one-level passage.

    The walk holds with probability ``alpha`` and otherwise steps toward the
    target with probability ``toward`` (away with ``1 - toward``).  Writing
    ``u = e^{-lam} - alpha``, the generating function is
    ``F(lam) = (u - sqrt(u^2 - c)) / (2 (1-toward)(1-alpha))`` with
    ``c = 4 toward (1-toward) (1-alpha)^2``, finite for ``lam <= lam_c``
    where ``u(lam_c)^2 = c``.  ``literal=True`` uses the constant
    ``c = 4(1-alpha)/3`` instead (kept for comparison; it does not
    normalise ``F(0) = 1``).

    Returns ``sup_{lam in [lam_c - 50, lam_c]} (lam r - log F(lam))``.
    """
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    if not 0.5 < toward < 1:
        raise ValueError("toward must lie in (1/2, 1)")
    away = 1 - toward
    c = 4 * (1 - alpha) / 3 if literal else 4 * toward * away * (1 - alpha) ** 2
    pref = 1.0 / (2 * away * (1 - alpha))
    lam_c = -math.log(alpha + math.sqrt(c))

    def log_f(lam: float) -> float:
        u = math.exp(-lam) - alpha
        disc = max(u * u - c, 0.0)
        # u - sqrt(u^2 - c) written without cancellation
        return math.log(pref * c / (u + math.sqrt(disc)))

    lo, hi = lam_c - 50.0, lam_c
    res = minimize_scalar(lambda lam: -(lam * r - log_f(lam)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-10})
    lam = float(res.x)
    val = lam * r - log_f(lam)
    for edge in (lo, hi):
        ev = edge * r - log_f(edge)
        if ev > val:
            lam, val = edge, ev
    interior = (lam - lo) > 1e-8 and (hi - lam) > 1e-8
    return RateValue(float(val), lam, interior, lam_c)


@dataclass(frozen=True)
class LocalCLTValue:
    value: float          # tail * m * exp(m^2 / 2)
    tail: float           # P[S_n >= m sqrt(n)]
    degenerate: bool      # m sqrt(n) > n, so the tail is empty


def local_clt_check(n: int, m: int) -> LocalCLTValue:
    """Exact ``P[S_n >= m sqrt(n)] * m * e^{m^2/2}`` for a simple ``+-1`` walk ``S_n``."""
    if n < 2 or n % 2:
        raise ValueError("n must be an even integer >= 2")
    cap = math.ceil(n ** 0.25)
    if not 1 <= m <= cap:
        raise ValueError(f"m must lie in [1, {cap}] for n = {n}")
    # smallest j = 2k - n >= 0 with j^2 >= m^2 n
    j = math.isqrt(m * m * n)
    if j * j < m * m * n:
        j += 1
    if j > n:
        return LocalCLTValue(0.0, 0.0, True)
    kmin = (n + j + 1) // 2
    count = sum(math.comb(n, k) for k in range(kmin, n + 1))
    tail = count / 2 ** n
    return LocalCLTValue(tail * m * math.exp(m * m / 2), tail, False)

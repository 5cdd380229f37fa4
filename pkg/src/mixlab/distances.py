"""Distance-to-stationarity profiles and the mixing times read off them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .chain import MarkovChain, heat_kernel_rows

ALL = "ALL"
MAX_ALL_STATES = 5000
MAX_ALL_HORIZON = 20000
_BATCH = 256


@dataclass
class DistanceProfile:
    """``value[i]`` is the distance at ``times[i]`` (max over the start set)."""

    kind: str
    times: np.ndarray
    values: np.ndarray
    starts: str = ALL
    continuous: bool = False
    info: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in zip(self.times, self.values):
            w.writerow([_fmt_time(t, self.continuous), repr(float(v))])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str, kind: str = "tv") -> "DistanceProfile":
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        rows = list(csv.reader(lines))
        if not rows or rows[0] != ["t", "value"]:
            raise ValueError("profile CSV must start with the header 't,value'")
        t = np.array([float(r[0]) for r in rows[1:]])
        v = np.array([float(r[1]) for r in rows[1:]])
        cont = bool(np.any(t != np.round(t)))
        return cls(kind, t, v, continuous=cont)


def _fmt_time(t, continuous: bool) -> str:
    return repr(float(t)) if continuous else str(int(t))


@dataclass(frozen=True)
class HorizonExhausted:
    """Returned by :func:`mixing_time` when the profile never drops to the threshold."""

    threshold: float
    horizon: float
    final_value: float

    def __bool__(self) -> bool:
        return False


def tv_distance(mu, nu) -> float:
    mu, nu = np.asarray(mu, float), np.asarray(nu, float)
    if mu.shape != nu.shape:
        raise ValueError(f"distributions have different supports ({mu.shape} vs {nu.shape})")
    return 0.5 * float(np.abs(mu - nu).sum())


def l2_distance(mu, pi) -> float:
    """``|| mu/pi - 1 ||_{2,pi}``."""
    mu, pi = np.asarray(mu, float), np.asarray(pi, float)
    return float(np.sqrt(np.sum((mu - pi) ** 2 / pi)))


def evolve(chain: MarkovChain, start, t: int) -> np.ndarray:
    """Law of ``X_t``; ``start`` is a state or a distribution vector."""
    if int(t) != t or t < 0:
        raise ValueError("t must be a non-negative integer")
    if isinstance(start, np.ndarray) and start.ndim == 1 and start.size == chain.n_states:
        mu = start.astype(float).copy()
    else:
        mu = chain.point_mass(start)
    for _ in range(int(t)):
        mu = chain.step(mu)
    return mu


def _start_indices(chain: MarkovChain, starts, t_max: float) -> tuple[np.ndarray, str]:
    if starts is None or (isinstance(starts, str) and starts == ALL):
        if chain.n_states > MAX_ALL_STATES:
            raise ValueError(f"worst-case start over all {chain.n_states} states exceeds the cap of "
                             f"{MAX_ALL_STATES}; name an explicit start set")
        if t_max > MAX_ALL_HORIZON:
            raise ValueError(f"worst-case start with horizon {t_max} exceeds the cap of "
                             f"{MAX_ALL_HORIZON}; name an explicit start set")
        return np.arange(chain.n_states), ALL
    if isinstance(starts, str):
        starts = [starts]
    idx = chain.indices_of(starts)
    if idx.size == 0:
        raise ValueError("start set is empty")
    return idx, ",".join(chain.states[i] for i in idx)


def _target_indices(chain: MarkovChain, targets) -> np.ndarray:
    if targets is None or (isinstance(targets, str) and targets == ALL):
        return np.arange(chain.n_states)
    if isinstance(targets, str):
        targets = [targets]
    return chain.indices_of(targets)


def distance_profiles(chain: MarkovChain, t_max: int, starts=ALL, targets=None,
                      kinds: Sequence[str] = ("tv", "sep"),
                      stop_below: float | None = None) -> dict[str, DistanceProfile]:
    """Exact discrete-time profiles for ``t = 0..t_max``.

    ``tv``: max over starts of ``TV(P^t(x,.), pi)``.
    ``sep``: ``1 - min P^t(x,y)/pi(y)`` over starts ``x`` and targets ``y``.
    ``l2``: max over starts of ``||P^t(x,.)/pi - 1||_{2,pi}``.
    With ``stop_below`` the run ends at the first ``t`` where the TV value is
    at most that threshold.
    """
    if int(t_max) != t_max or t_max < 0:
        raise ValueError("t_max must be a non-negative integer")
    t_max = int(t_max)
    idx, label = _start_indices(chain, starts, t_max)
    tgt = _target_indices(chain, targets)
    pi = chain.stationary
    unknown = set(kinds) - {"tv", "sep", "l2"}
    if unknown:
        raise ValueError(f"unknown profile kinds {sorted(unknown)}")
    vals = {k: np.full(t_max + 1, -np.inf) for k in kinds}
    end = t_max
    batches = [idx[i:i + _BATCH] for i in range(0, len(idx), _BATCH)]
    if stop_below is not None and len(batches) > 1:
        raise ValueError("stop_below needs a start set that fits in one batch")
    for b in batches:
        mu = np.zeros((chain.n_states, len(b)))
        mu[b, np.arange(len(b))] = 1.0
        for t in range(t_max + 1):
            if t:
                mu = chain.step(mu)
            diff = mu - pi[:, None]
            tv = 0.5 * np.abs(diff).sum(axis=0).max()
            if "tv" in vals:
                vals["tv"][t] = max(vals["tv"][t], tv)
            if "sep" in vals:
                sep = 1.0 - (mu[tgt] / pi[tgt, None]).min()
                vals["sep"][t] = max(vals["sep"][t], sep)
            if "l2" in vals:
                l2 = np.sqrt((diff ** 2 / pi[:, None]).sum(axis=0)).max()
                vals["l2"][t] = max(vals["l2"][t], l2)
            if stop_below is not None and tv <= stop_below:
                end = t
                break
    times = np.arange(end + 1)
    info = {"n_states": chain.n_states, "holding": chain.holding}
    return {k: DistanceProfile(k, times, v[:end + 1], label, False, dict(info)) for k, v in vals.items()}


def tv_profile(chain: MarkovChain, t_max: int, starts=ALL, stop_below: float | None = None) -> DistanceProfile:
    return distance_profiles(chain, t_max, starts, kinds=("tv",), stop_below=stop_below)["tv"]


def separation_profile(chain: MarkovChain, t_max: int, starts=ALL, targets=None) -> DistanceProfile:
    return distance_profiles(chain, t_max, starts, targets, kinds=("sep",))["sep"]


def continuous_profiles(chain: MarkovChain, grid: Sequence[float], tol: float = 1e-12,
                        starts=ALL, targets=None) -> dict[str, DistanceProfile]:
    """TV and separation profiles of the continuous-time chain ``exp(t(P - I))``."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ValueError("grid must be a non-empty increasing sequence of non-negative times")
    idx, label = _start_indices(chain, starts, float(grid[-1]))
    tgt = _target_indices(chain, targets)
    pi = chain.stationary
    tv = np.zeros(grid.size)
    sep = np.full(grid.size, -np.inf)
    for i in range(0, len(idx), _BATCH):
        rows = heat_kernel_rows(chain, idx[i:i + _BATCH], grid, tol)  # (T, B, n)
        tv = np.maximum(tv, 0.5 * np.abs(rows - pi).sum(axis=2).max(axis=1))
        sep = np.maximum(sep, 1.0 - (rows[:, :, tgt] / pi[tgt]).min(axis=(1, 2)))
    info = {"n_states": chain.n_states, "tol": tol}
    return {"tv": DistanceProfile("tv", grid, tv, label, True, dict(info)),
            "sep": DistanceProfile("sep", grid, sep, label, True, dict(info))}


def mixing_time(profile: DistanceProfile, eps: float):
    """First grid time with ``value <= eps``, else :class:`HorizonExhausted`."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    hit = np.flatnonzero(profile.values <= eps)
    if hit.size == 0:
        return HorizonExhausted(eps, float(profile.times[-1]), float(profile.values[-1]))
    t = profile.times[hit[0]]
    return float(t) if profile.continuous else int(t)


def is_nonincreasing(profile: DistanceProfile, slack: float = 1e-12) -> bool:
    return bool(np.all(np.diff(profile.values) <= slack))


# cutoff ---------------------------------------------------------------------

def _trend(xs: Sequence[float], rel: float = 1e-9) -> str:
    xs = [x for x in xs if math.isfinite(x)]
    if len(xs) < 2:
        return "undetermined"
    d = np.diff(xs)
    scale = max(1.0, max(abs(x) for x in xs))
    if np.all(np.abs(d) <= rel * scale):
        return "flat"
    if np.all(d <= rel * scale):
        return "decreasing"
    if np.all(d >= -rel * scale):
        return "increasing"
    return "mixed"


def cutoff_diagnostics(family: Mapping[str, DistanceProfile],
                       eps_list: Iterable[float] = (0.05, 0.1, 0.25)) -> dict:
    """Ratios ``t_mix(eps) / t_mix(1 - eps)`` for each member of a family.

    ``family`` maps member names (ordered by size) to profiles.  Per ``eps``
    the trend across members is one of ``flat``/``decreasing``/``increasing``/
    ``mixed``; ``verdict`` reads it as cutoff-consistent (ratios fall toward
    1), pre-cutoff-consistent (bounded, not approaching 1), or
    ``log-eps-growth`` (within members the ratio grows with ``|log eps|``).
    """
    eps_list = sorted(float(e) for e in eps_list)
    if not all(0 < e < 0.5 for e in eps_list):
        raise ValueError("eps values must lie in (0, 1/2)")
    members = {}
    for name, prof in family.items():
        ratios = {}
        for e in eps_list:
            lo, hi = mixing_time(prof, e), mixing_time(prof, 1 - e)
            if isinstance(lo, HorizonExhausted) or isinstance(hi, HorizonExhausted):
                ratios[e] = math.nan
            elif hi == 0:
                ratios[e] = math.inf
            else:
                ratios[e] = lo / hi
        slope = _log_eps_slope(eps_list, [ratios[e] for e in eps_list])
        members[name] = {"ratios": {repr(e): r for e, r in ratios.items()}, "log_eps_slope": slope}
    trends = {repr(e): _trend([members[m]["ratios"][repr(e)] for m in members]) for e in eps_list}
    last = list(members.values())[-1]["ratios"] if members else {}
    slopes = [m["log_eps_slope"] for m in members.values() if math.isfinite(m["log_eps_slope"])]
    finite_last = [r for r in last.values() if math.isfinite(r)]
    if slopes and min(slopes) > 1e-12 and all(t in ("flat", "increasing", "undetermined") for t in trends.values()):
        verdict = "log-eps-growth"
    elif finite_last and all(abs(r - 1) <= 1e-9 for r in finite_last):
        verdict = "cutoff-consistent"
    elif all(t == "flat" for t in trends.values()):
        verdict = "flat"
    elif all(t in ("decreasing", "flat") for t in trends.values()) and \
            all(abs(r - 1) < 0.5 for r in last.values() if math.isfinite(r)):
        verdict = "cutoff-consistent"
    else:
        verdict = "pre-cutoff-consistent"
    return {"eps": eps_list, "members": members, "trends": trends, "verdict": verdict}


def _log_eps_slope(eps_list: Sequence[float], ratios: Sequence[float]) -> float:
    x = np.array([abs(math.log(e)) for e in eps_list])
    y = np.array(ratios, float)
    ok = np.isfinite(y)
    if ok.sum() < 2 or np.ptp(x[ok]) == 0:
        return math.nan
    return float(np.polyfit(x[ok], y[ok], 1)[0])

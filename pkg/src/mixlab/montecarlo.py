"""Seeded, vectorized random walks on implicit stretched trees.

Trees too deep to build explicitly (hundreds of levels of a 5-ary tree) are
simulated by tracking, for each walker, its level, its position inside a
stretched edge, the child index taken at each level and the running count of
left steps.  Batches draw independent streams from one ``SeedSequence``, so
results do not depend on how many worker processes run them.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

WORKERS_ENV = "MIXLAB_WORKERS"
BATCH = 4096


@dataclass(frozen=True)
class ImplicitTreeWalker:
    """Lazy walk on a rooted tree whose edges may be subdivided.

    Child ``0`` is the left child.  Edges to a left child leaving levels in
    ``[bias_min_level, bias_max_level]`` weigh ``left_weight``; every other
    edge weighs ``other_weight``.  Edges to left children are subdivided
    into ``stretch_left`` unit steps, the rest into ``stretch_other``.
    Vertices at ``depth`` have no children.
    """

    depth: int
    branching: int = 2
    root_branching: int | None = None
    left_weight: float = 1.0
    other_weight: float = 1.0
    bias_min_level: int = 0
    bias_max_level: int = -1
    stretch_left: int = 1
    stretch_other: int = 1
    holding: float = 0.5

    def __post_init__(self):
        if self.depth < 1 or self.branching < 1:
            raise ValueError("depth and branching must be >= 1")
        if not 0 <= self.holding < 1:
            raise ValueError("holding must lie in [0, 1)")
        if min(self.stretch_left, self.stretch_other) < 1:
            raise ValueError("stretch factors must be >= 1")
        if min(self.left_weight, self.other_weight) <= 0:
            raise ValueError("edge weights must be positive")

    def _biased(self, level: np.ndarray) -> np.ndarray:
        return (level >= self.bias_min_level) & (level <= self.bias_max_level)


@dataclass(frozen=True)
class StopAtLevel:
    """Predicates receive the levels of walkers sitting at vertices, the full
    left-count matrix and the row indices of those walkers."""

    level: int

    def __call__(self, level, cum_left, rows):
        return level == self.level


@dataclass(frozen=True)
class StopAtEscape:
    """Stop at level ``k * block`` (``first <= k <= last``) when the block's
    left count is at most ``cutoff``; every level-``last * block`` vertex stops."""

    block: int
    cutoff: int
    first: int
    last: int

    def __call__(self, level, cum_left, rows):
        k, r = np.divmod(level, self.block)
        on = (r == 0) & (k >= self.first) & (k <= self.last)
        idx = np.nonzero(on)[0]
        out = np.zeros(level.shape, dtype=bool)
        if idx.size:
            lv = level[idx]
            in_block = cum_left[rows[idx], lv] - cum_left[rows[idx], lv - self.block]
            out[idx] = (k[idx] == self.last) | (in_block <= self.cutoff)
        return out


@dataclass
class HittingSample:
    times: np.ndarray
    stop_level: np.ndarray
    left_count: np.ndarray        # left steps on the path to the stopping vertex
    capped: np.ndarray            # walkers still running at max_steps
    cap_warning: bool = field(init=False)

    def __post_init__(self):
        self.cap_warning = bool(self.capped.mean() > 0.01) if self.capped.size else False

    @property
    def mean(self) -> float:
        return float(self.times.mean())

    @property
    def stderr(self) -> float:
        return float(self.times.std(ddof=1) / math.sqrt(self.times.size))

    @property
    def ci95(self) -> tuple[float, float]:
        return self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr

    @property
    def cv(self) -> float:
        return float(self.times.std(ddof=1) / self.times.mean())


def _run_batch(args) -> tuple[np.ndarray, ...]:
    walker, stop, n, max_steps, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    D = walker.depth
    root_b = walker.root_branching or walker.branching
    level = np.zeros(n, dtype=np.int64)
    offset = np.zeros(n, dtype=np.int64)
    child = np.zeros((n, D + 1), dtype=np.int16)
    cum_left = np.zeros((n, D + 1), dtype=np.int32)
    times = np.full(n, max_steps, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    rows = np.arange(n)

    hit = stop(level, cum_left, rows)
    done |= hit
    times[hit] = 0
    active = np.nonzero(~done)[0]
    h = walker.holding
    for t in range(1, max_steps + 1):
        if active.size == 0:
            break
        u = rng.random(active.size)
        moving = u >= h
        a = active[moving]
        u = (u[moving] - h) / (1 - h)
        lv, off = level[a], offset[a]
        cur_child = child[a, lv]
        edge_len = np.where(cur_child == 0, walker.stretch_left, walker.stretch_other)

        # inside a subdivided edge: fair step either way
        inside = off > 0
        ai, ui = a[inside], u[inside]
        step = np.where(ui < 0.5, -1, 1)
        new_off = off[inside] + step
        arrive = new_off >= edge_len[inside]
        offset[ai] = np.where(arrive, 0, new_off)
        level[ai] = lv[inside] + arrive

        # at a tree vertex
        av, uv, lvv = a[~inside], u[~inside], lv[~inside]
        if av.size:
            has_up = lvv > 0
            pl = np.maximum(lvv - 1, 0)
            pc = child[av, pl]
            up_w = np.where(has_up, np.where((pc == 0) & walker._biased(pl), walker.left_weight,
                                             walker.other_weight), 0.0)
            kids = np.where(lvv == 0, root_b, walker.branching)
            kids = np.where(lvv >= D, 0, kids)
            left_w = np.where(walker._biased(lvv), walker.left_weight, walker.other_weight)
            left_w = np.where(kids > 0, left_w, 0.0)
            total = up_w + left_w + np.maximum(kids - 1, 0) * walker.other_weight
            r = uv * total
            go_up = r < up_w
            r = r - up_w
            c = np.where(r < left_w, 0,
                         1 + np.floor((r - left_w) / walker.other_weight).astype(np.int64))
            c = np.minimum(c, np.maximum(kids - 1, 0))

            up_idx = av[go_up]
            if up_idx.size:
                plv = level[up_idx] - 1
                pcu = child[up_idx, plv]
                elen = np.where(pcu == 0, walker.stretch_left, walker.stretch_other)
                level[up_idx] = plv
                offset[up_idx] = elen - 1
            dn = ~go_up
            dn_idx, cd = av[dn], c[dn]
            if dn_idx.size:
                dl = level[dn_idx]
                child[dn_idx, dl] = cd
                cum_left[dn_idx, dl + 1] = cum_left[dn_idx, dl] + (cd == 0)
                elen = np.where(cd == 0, walker.stretch_left, walker.stretch_other)
                arrive = elen == 1
                offset[dn_idx] = np.where(arrive, 0, 1)
                level[dn_idx] = dl + arrive

        at_vertex = active[offset[active] == 0]
        if at_vertex.size:
            stopped = at_vertex[stop(level[at_vertex], cum_left, at_vertex)]
            times[stopped] = t
            done[stopped] = True
            active = active[~done[active]]
    left = cum_left[rows, level]
    return times, level.copy(), left, ~done


def workers_from_env() -> int:
    """Worker count from ``MIXLAB_WORKERS``; defaults to the usable CPUs."""
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None


def mc_hitting(walker: ImplicitTreeWalker, stop, n_samples: int, seed: int,
               max_steps: int = 1_000_000, workers: int | None = None) -> HittingSample:
    """Hitting times of ``stop`` from the root for ``n_samples`` walkers.

    Capped walkers keep ``max_steps`` as their time and are flagged; the
    sample's ``cap_warning`` is set when more than 1% hit the cap.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    sizes = [BATCH] * (n_samples // BATCH) + ([n_samples % BATCH] if n_samples % BATCH else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(walker, stop, n, max_steps, sq) for n, sq in zip(sizes, seqs)]
    workers = workers or workers_from_env()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_batch, jobs))
    else:
        parts = [_run_batch(j) for j in jobs]
    return HittingSample(*(np.concatenate(col) for col in zip(*parts)))

"""Network families and their building blocks.

Every generator returns a :class:`WeightedNetwork` whose ``metadata`` holds
the family tag, the parameters actually used (after any rounding), seeds and
guards.  Tree vertices are named by their path word from the root ``o``
(``oLRL`` is the left child of ``oLR``); children of a rooted k-ary tree use
digits (``o0``, ``o03``, with ``0`` the distinguished "left" child).
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chain import build_chain
from .network import NetworkBuilder, WeightedNetwork
from .spectral import spectrum
from .transforms import EdgeSelector, decorate, lump, stretch_edges


class ConstructionError(ValueError):
    """A family parameter violates its constraint (the message names it)."""


def _require(cond: bool, constraint: str) -> None:
    if not cond:
        raise ConstructionError(f"constraint violated: {constraint}")


# building blocks -------------------------------------------------------------

def torus3d(side: int) -> WeightedNetwork:
    """Unit-weight 3D torus with ``side^3`` vertices named ``"i,j,k"``.

    For ``side == 2`` the +1 and -1 neighbours coincide; the doubled edges
    are kept single, leaving a 3-regular cube.
    """
    _require(int(side) == side and side >= 2, "torus side >= 2")
    side = int(side)
    b = NetworkBuilder()
    name = lambda p: ",".join(map(str, p))
    pts = list(itertools.product(range(side), repeat=3))
    for p in pts:
        b.add_vertex(name(p), {"torus"})
    seen = set()
    for p in pts:
        for axis in range(3):
            for step in (1, -1):
                q = list(p)
                q[axis] = (q[axis] + step) % side
                key = frozenset((name(p), name(tuple(q))))
                if key not in seen:
                    seen.add(key)
                    b.add_edge(name(p), name(tuple(q)), 1.0, {"torus"})
    return b.build({"family": "torus3d", "side": side})


@dataclass(frozen=True)
class ExpanderCertificate:
    lazy_lambda2: float
    gap: float
    threshold: float
    attempts: int
    seed: int


def random_regular_expander(n: int, d: int, seed: int, gap_threshold: float,
                            retries: int = 20, max_pairings: int = 200_000) -> WeightedNetwork:
    """Random ``d``-regular simple graph on ``n`` vertices with a spectral certificate.

    Stubs are paired uniformly; pairings with loops or repeated edges are
    rejected.  A sample is accepted when its lazy walk has spectral gap at
    least ``gap_threshold``; otherwise it is resampled (up to ``retries``).
    The certificate is in ``metadata["certificate"]``.
    """
    _require(d >= 3, "expander degree d >= 3")
    _require(n > d, "expander size n > d")
    _require((n * d) % 2 == 0, "n*d even")
    rng = np.random.default_rng(seed)
    best = -math.inf
    pairings = 0
    for attempt in range(1, retries + 1):
        edges = None
        while edges is None:
            pairings += 1
            if pairings > max_pairings:
                raise ConstructionError(f"no simple pairing found in {max_pairings} tries (n={n}, d={d})")
            stubs = np.repeat(np.arange(n), d)
            rng.shuffle(stubs)
            pairs = stubs.reshape(-1, 2)
            lo, hi = pairs.min(axis=1), pairs.max(axis=1)
            if np.any(lo == hi):
                continue
            codes = lo.astype(np.int64) * n + hi
            if np.unique(codes).size != codes.size:
                continue
            edges = np.stack([lo, hi], axis=1)
        b = NetworkBuilder()
        for i in range(n):
            b.add_vertex(f"x{i}", {"expander"})
        for u, v in edges:
            b.add_edge(f"x{u}", f"x{v}", 1.0, {"expander"})
        net = b.build()
        if len(net.components()) > 1:
            continue
        lam2 = spectrum(build_chain(net, 0.5)).lambda2
        gap = 1.0 - lam2
        best = max(best, gap)
        if gap >= gap_threshold:
            cert = ExpanderCertificate(lam2, gap, gap_threshold, attempt, seed)
            return net.with_metadata(family="expander", n=n, d=d, seed=seed,
                                     certificate=cert.__dict__)
    raise ConstructionError(f"no sample reached spectral gap {gap_threshold} in {retries} retries "
                            f"(best gap {best:.4f})")


def shortest_cycle(net: WeightedNetwork) -> int | None:
    """Girth by breadth-first search from every vertex (``None`` for forests)."""
    adj = net.adjacency
    nbrs = [adj.indices[adj.indptr[i]:adj.indptr[i + 1]] for i in range(net.n_vertices)]
    best = math.inf
    for s in range(net.n_vertices):
        dist = {s: 0}
        parent = {s: -1}
        q = deque([s])
        while q:
            u = q.popleft()
            if 2 * dist[u] + 1 >= best:
                break
            for v in nbrs[u]:
                if v == u:
                    return 1
                if v not in dist:
                    dist[v], parent[v] = dist[u] + 1, u
                    q.append(v)
                elif parent[u] != v:
                    best = min(best, dist[u] + dist[v] + 1)
    return None if best == math.inf else int(best)


def random_network(n: int, rng: np.random.Generator, extra_edges: float = 0.3,
                   weight_range: tuple[float, float] = (0.1, 2.0)) -> WeightedNetwork:
    """Connected random network: a random spanning tree plus each other pair
    independently with probability ``extra_edges``; weights uniform in ``weight_range``."""
    _require(n >= 2, "n >= 2")
    b = NetworkBuilder()
    for i in range(n):
        b.add_vertex(f"v{i}")
    order = rng.permutation(n)
    pairs = set()
    for k in range(1, n):
        u, v = int(order[k]), int(order[rng.integers(k)])
        pairs.add((min(u, v), max(u, v)))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in pairs and rng.random() < extra_edges:
                pairs.add((u, v))
    lo, hi = weight_range
    for u, v in sorted(pairs):
        b.add_edge(f"v{u}", f"v{v}", float(rng.uniform(lo, hi)))
    return b.build({"family": "random", "n": n})


# one-dimensional families ---------------------------------------------------------

def biased_double_path(n: int) -> WeightedNetwork:
    """Two arms ``a_n..a_1`` and ``b_1..b_n`` joined at ``z``.

    ``w(a_i, a_{i-1}) = w(b_i, b_{i-1}) = 2^{-i}`` with ``a_0 = b_0 = z``, so
    interior steps go toward ``z`` with probability 2/3, the arm ends reflect,
    and ``z`` moves to either arm with probability 1/2.
    """
    _require(int(n) == n and n >= 2, "n >= 2")
    n = int(n)
    b = NetworkBuilder()
    b.add_vertex("z", {"z", "center"})
    for arm in "ab":
        for i in range(1, n + 1):
            b.add_vertex(f"{arm}{i}", {arm, f"branch:{arm.upper()}", f"pos:{i}"})
    for arm in "ab":
        for i in range(1, n + 1):
            prev = "z" if i == 1 else f"{arm}{i - 1}"
            b.add_edge(f"{arm}{i}", prev, 2.0 ** (-i), {f"branch:{arm.upper()}"})
    return b.build({"family": "example33", "n": n})


def bottleneck_branches(n: int, delta: float, s: int) -> WeightedNetwork:
    """Five branches A to E hung around the hub ``z`` and its partners ``zbar``/``zprime``.

    A and B are the arms of :func:`biased_double_path`.  With
    ``h = floor(delta n / 2)``: D runs from ``zbar = d_0`` to ``z = d_{h+1}``
    with ``w(d_i, d_{i+1}) = 2^{h-i}``; C is D's ``h`` blocks with each edge
    stretched into ``s`` equal edges, ``w(c_{i,j}, c_{i,j-1}) = 2^{h-i}``,
    from ``c_{1,0} = zbar`` to ``c_{h,s} = z``; E runs from ``zprime = e_0``
    to ``zbar = e_{h+1}`` with ``w(e_i, e_{i+1}) = 2^{delta n - i}``.
    """
    _require(int(n) == n and n >= 2, "n >= 2")
    _require(0 < delta <= 0.125, "0 < delta <= 1/8")
    _require(int(s) == s and s >= 2, "s >= 2 (integer)")
    n, s = int(n), int(s)
    h = int(math.floor(delta * n / 2))
    _require(h >= 1, f"floor(delta*n/2) >= 1 (got {h})")
    b = NetworkBuilder()
    b.add_vertex("z", {"z", "hub"})
    b.add_vertex("zbar", {"zbar", "hub"})
    b.add_vertex("zprime", {"zprime", "hub"})
    for arm in "ab":
        for i in range(1, n + 1):
            b.add_vertex(f"{arm}{i}", {arm, f"branch:{arm.upper()}", f"pos:{i}"})
            prev = "z" if i == 1 else f"{arm}{i - 1}"
            b.add_edge(f"{arm}{i}", prev, 2.0 ** (-i), {f"branch:{arm.upper()}"})

    def c_name(i: int, j: int) -> str:
        if j == 0:
            return "zbar" if i == 1 else c_name(i - 1, s)
        if i == h and j == s:
            return "z"
        return f"c{i}.{j}"

    for i in range(1, h + 1):
        for j in range(1, s + 1):
            v = c_name(i, j)
            if v not in ("z", "zbar"):
                b.add_vertex(v, {"branch:C", "red" if j == s else "yellow"})
            b.add_edge(v, c_name(i, j - 1), 2.0 ** (h - i), {"branch:C"})
    d_name = lambda i: "zbar" if i == 0 else "z" if i == h + 1 else f"d{i}"
    e_name = lambda i: "zprime" if i == 0 else "zbar" if i == h + 1 else f"e{i}"
    for i in range(0, h + 1):
        for name, lab in ((d_name(i), "branch:D"), (e_name(i), "branch:E")):
            if name not in ("z", "zbar", "zprime"):
                b.add_vertex(name, {lab})
        b.add_edge(d_name(i), d_name(i + 1), 2.0 ** (h - i), {"branch:D"})
        b.add_edge(e_name(i), e_name(i + 1), 2.0 ** (delta * n - i), {"branch:E"})
    net = b.build({"family": "theorem1", "n": n, "delta": delta, "s": s,
                   "half_delta_n": h, "rounding": f"floor({delta * n / 2}) = {h}"})
    pi = net.stationary()
    return net.with_metadata(pi_z=float(pi[net.index_of("z")]))


# decorated binary trees ----------------------------------------------------------

def balance_threshold(x: float, scale: float = 3.0) -> float:
    """``scale * sqrt(x * max(1, log log max(x, 16)))``."""
    return scale * math.sqrt(x * max(1.0, math.log(math.log(max(x, 16.0)))))


def _suffix_balance(word: str, start_depth: int) -> int:
    """``#L - #R`` among the letters of the vertices at depths ``start_depth..len(word)``."""
    seg = word[max(start_depth, 1) - 1:]
    return seg.count("L") - seg.count("R")


def in_suffix_balance_set(word: str, C: int, scale: float = 3.0) -> bool:
    """Membership rule for the decorated levels of :func:`decorated_tree`.

    ``word`` has length ``C i``; every window from the vertex up ``C j``
    steps (``1 <= j <= i``) must have left-minus-right balance at least
    ``balance_threshold(C j)``.
    """
    depth = len(word)
    if depth == 0:
        return True
    i = depth // C
    return all(_suffix_balance(word, depth - C * j) >= balance_threshold(C * j, scale)
               for j in range(1, i + 1))


def in_block_balance_set(word: str, block: int, m: float) -> bool:
    """Block rule: the last ``block`` steps (plus the block's top vertex) have
    balance at least ``ceil(m sqrt(block))``."""
    return _suffix_balance(word, len(word) - block) >= math.ceil(m * math.sqrt(block))


def _binary_words(depth: int):
    for bits in itertools.product("LR", repeat=depth):
        yield "".join(bits)


def _tree_with_expander(depth: int, expander: WeightedNetwork | None, degree: int,
                        seed: int, gap_threshold: float) -> tuple[NetworkBuilder, dict]:
    b = NetworkBuilder()
    b.add_vertex("o", {"tree", "root", "level:0"})
    frontier = ["o"]
    for lvl in range(1, depth + 1):
        nxt = []
        for u in frontier:
            for side, lab in (("L", "left"), ("R", "right")):
                v = u + side
                b.add_vertex(v, {"tree", f"level:{lvl}", lab})
                b.add_edge(u, v, 1.0, {"tree", lab, f"plevel:{lvl - 1}"})
                nxt.append(v)
        frontier = nxt
    for leaf in frontier:
        b.add_labels(leaf, {"leaf"})
    if expander is None:
        expander = random_regular_expander(2 ** depth, degree, seed, gap_threshold)
    if expander.n_vertices != len(frontier):
        raise ConstructionError(f"expander has {expander.n_vertices} vertices; "
                                f"the tree has {len(frontier)} leaves")
    leaf_of = dict(zip(expander.ids, frontier))
    for u, v, w, _ in expander.edges():
        b.add_edge(leaf_of[u], leaf_of[v], w, {"expander"})
    meta = {"expander_n": expander.n_vertices,
            "expander_certificate": expander.metadata.get("certificate"),
            "expander_seed": expander.metadata.get("seed")}
    return b, meta


def _decorate_levels(b: NetworkBuilder, dsets: dict[int, list[str]], torus_side: int):
    net = b.build()
    hosts = []
    for i, words in sorted(dsets.items()):
        for w in words:
            hosts.append(w)
    bld = NetworkBuilder.from_network(net)
    for i, words in dsets.items():
        for w in words:
            bld.add_labels(w, {"D", f"D{i}"})
    net = bld.build()
    return decorate(net, hosts, torus3d(torus_side), "0,0,0")


def decorated_tree(k: int = 2, C: int = 1, torus_side: int = 2, expander: WeightedNetwork | None = None,
                   depth_override: int | None = None, threshold_scale: float = 3.0,
                   degree: int = 3, seed: int = 0, gap_threshold: float = 0.01) -> WeightedNetwork:
    """Binary tree with an expander on its leaves and tori glued at left-heavy vertices.

    The depth is ``k^3`` unless ``depth_override`` is given (default for the
    command line is ``4k``).  For ``1 <= i <= depth/(2C)`` the level-``Ci``
    vertices passing :func:`in_suffix_balance_set` form ``D_i``; the root is
    ``D_0``.  Each vertex of ``D`` gets a ``torus3d(torus_side)`` glued on.
    ``metadata["perturbation_selector"]`` selects the left-child edges leaving
    levels ``<= depth/2``.
    """
    _require(int(k) == k and k >= 1, "k >= 1")
    _require(int(C) == C and C >= 1, "C >= 1 (integer)")
    _require(threshold_scale > 0, "threshold_scale > 0")
    depth = int(depth_override) if depth_override is not None else int(k) ** 3
    _require(2 <= depth <= 16, f"2 <= depth <= 16 for explicit construction (got {depth})")
    b, meta = _tree_with_expander(depth, expander, degree, seed, gap_threshold)
    dsets: dict[int, list[str]] = {0: ["o"]}
    for i in range(1, depth // (2 * C) + 1):
        dsets[i] = ["o" + w for w in _binary_words(C * i) if in_suffix_balance_set(w, C, threshold_scale)]
    net = _decorate_levels(b, dsets, torus_side)
    return net.with_metadata(
        family="theorem2a", k=int(k), C=int(C), depth=depth, torus_side=int(torus_side),
        threshold_scale=threshold_scale, guard="max(1, loglog(max(x, 16)))",
        decoration_sizes={str(i): len(v) for i, v in dsets.items()},
        perturbation_selector=f"left & plevel<={depth // 2}", **meta)


def decorated_tree_blocks(block: int, m: float, r: int, torus_side: int = 2,
                          expander: WeightedNetwork | None = None, K: float = 1.0,
                          exclude_descendants: bool = True, degree: int = 3, seed: int = 0,
                          gap_threshold: float = 0.01) -> WeightedNetwork:
    """Block variant: depth ``block * r``; ``D_i`` sits at level ``i * block``.

    A level-``i*block`` vertex joins ``D_i`` (``1 <= i <= r/2``) when its last
    ``block`` steps pass :func:`in_block_balance_set`.  Vertices below an
    earlier ``D`` vertex are skipped unless ``exclude_descendants`` is off.
    The suggested perturbation factor is ``1 + K m / sqrt(block)``.
    """
    _require(int(block) == block and block >= 1, "block length >= 1")
    _require(int(r) == r and r >= 2, "r >= 2")
    _require(0 < m <= math.ceil(block ** 0.25), f"0 < m <= ceil(block^(1/4)) = {math.ceil(block ** 0.25)}")
    block, r = int(block), int(r)
    depth = block * r
    _require(depth <= 16, f"depth = block*r <= 16 for explicit construction (got {depth})")
    b, meta = _tree_with_expander(depth, expander, degree, seed, gap_threshold)
    dsets: dict[int, list[str]] = {0: ["o"]}
    marked: set[str] = set()
    for i in range(1, r // 2 + 1):
        members = []
        for w in _binary_words(block * i):
            if exclude_descendants and any(w[:block * j] in marked for j in range(1, i)):
                continue
            if in_block_balance_set(w, block, m):
                members.append("o" + w)
                marked.add(w)
        dsets[i] = members
    net = _decorate_levels(b, dsets, torus_side)
    return net.with_metadata(
        family="theorem2b2", block=block, m=m, r=r, depth=depth, torus_side=int(torus_side),
        exclude_descendants=exclude_descendants, threshold=math.ceil(m * math.sqrt(block)),
        decoration_sizes={str(i): len(v) for i, v in dsets.items()},
        perturbation_selector=f"left & plevel<={depth // 2}",
        perturbation_factor=1 + K * m / math.sqrt(block), **meta)


def lumped_stretched_pair(**tree_params) -> tuple[WeightedNetwork, WeightedNetwork]:
    """Stretch every edge of :func:`decorated_tree` by 3, then lump the two
    internal vertices of each left-child path into one vertex (which keeps a
    weight-2 loop)."""
    base = decorated_tree(**tree_params)
    stretched = stretch_edges(base, "*", 3)
    stretched = stretched.with_metadata(family="theorem2c-stretched")
    lefts = [(u, v) for u, v, _, lab in base.edges() if "left" in lab and "tree" in lab]
    paired = set()
    blocks, names = [], []
    for u, v in lefts:
        w1, w2 = f"{u}~{v}:1", f"{u}~{v}:2"
        blocks.append([w1, w2])
        names.append(f"{u}~{v}:lumped")
        paired.update((w1, w2))
    for vid in stretched.ids:
        if vid not in paired:
            blocks.append([vid])
            names.append(vid)
    lumped = lump(stretched, blocks, names).with_metadata(
        family="theorem2c-lumped", lumped_pairs=len(lefts))
    return stretched, lumped


# exact harmonic bias on a perturbed binary tree -----------------------------------

@dataclass
class LeftBias:
    per_level: np.ndarray      # index l-1: P[ray turns left at level l], l = 1..depth
    root_value: float
    limit: float               # sqrt(1+eps) / (1 + sqrt(1+eps))


def left_exit_bias(depth: int, eps: float) -> LeftBias:
    """Probability that the absorbing leaf lies in the left subtree, level by level.

    Left edges weigh ``1 + eps``, right edges 1, leaves are absorbing.  Uses
    series/parallel reduction: ``W_1 = c_L + c_R`` and
    ``W_h = c_L W/(c_L + W) + c_R W/(c_R + W)`` with ``W = W_{h-1}``; the
    left share at height ``h`` is ``(c_L W/(c_L + W)) / W_h``.
    """
    _require(int(depth) == depth and depth >= 2, "depth >= 2")
    _require(eps >= 0, "eps >= 0")
    cl, cr = 1.0 + eps, 1.0
    share = np.empty(int(depth))
    share[0] = cl / (cl + cr)
    w = cl + cr
    for h in range(2, int(depth) + 1):
        left, right = cl * w / (cl + w), cr * w / (cr + w)
        share[h - 1] = left / (left + right)
        w = left + right
    per_level = share[::-1].copy()       # level 1 sits at height `depth`
    a = math.sqrt(1 + eps)
    return LeftBias(per_level, float(per_level[0]), a / (1 + a))


# stretched escape tree ----------------------------------------------------------------

@dataclass(frozen=True)
class EscapeWindow:
    cutoff: int          # boundary vertices have f <= cutoff
    g: float             # m/5 - cutoff
    fraction: float      # P[Bin(m, 1/5) <= cutoff]


def escape_window(m: int, b: float, p: float = 0.2) -> EscapeWindow:
    """Pick the left-count cutoff whose exact binomial CDF lies in ``[1/b, 2/b]``."""
    from scipy.stats import binom
    _require(int(m) == m and m >= 1, "m >= 1")
    _require(b > 1, "b > 1")
    cdf = binom.cdf(np.arange(int(m) + 1), int(m), p)
    ok = [j for j in range(int(m) + 1) if 1 / b - 1e-15 <= cdf[j] <= 2 / b + 1e-15]
    if not ok:
        attainable = ", ".join(f"{c:.4f}" for c in cdf)
        raise ConstructionError(f"no cutoff puts the boundary fraction in [1/b, 2/b] = "
                                f"[{1 / b:.4f}, {2 / b:.4f}]; attainable fractions: {attainable}")
    j = ok[0]
    return EscapeWindow(j, m * p - j, float(cdf[j]))


def escape_tree(expander: WeightedNetwork | None, s: int, m: int, b: float, depth_budget: int,
                degree: int = 5, seed: int = 0, gap_threshold: float = 0.01,
                max_vertices: int = 200_000) -> WeightedNetwork:
    """Explicit stretched escape tree inside a 6-regular tree ball.

    The ball of radius ``depth_budget`` around ``o`` (root has 6 children,
    others 5; child ``0`` is "left") has its outer level glued to an expander.
    Boundary sets ``D_k`` live at levels ``k m`` for ``2 <= k <= K`` with
    ``K = min(s^2 b, depth_budget // m)``: below a surviving block root the
    level-``(k m)`` descendants with at most ``cutoff`` left steps in the block
    are boundary, and ``D_K`` is everything that survives.  Edges of the
    sub-tree spanned by the boundary are stretched by ``s``.
    ``metadata["perturbation_selector"]`` names the left edges of blocks
    below the first one.
    """
    _require(int(s) == s and s >= 2, "s >= 2")
    _require(int(depth_budget) == depth_budget and depth_budget >= 2 * m, "depth_budget >= 2m")
    win = escape_window(m, b)
    K = min(int(s * s * b), int(depth_budget) // m)
    _require(K >= 2, "at least two blocks fit in the depth budget")
    R = int(depth_budget)
    size = 1 + sum(6 * 5 ** (lvl - 1) for lvl in range(1, R + 1))
    _require(size <= max_vertices, f"ball of radius {R} has {size} vertices (> {max_vertices})")

    bld = NetworkBuilder()
    bld.add_vertex("o", {"tree", "root", "level:0"})
    levels = [["o"]]
    lefts = {"o": 0}
    status = {"o": "inside"}     # inside | boundary | outside
    for lvl in range(1, R + 1):
        cur = []
        for u in levels[-1]:
            kids = 6 if u == "o" else 5
            for c in range(kids):
                v = f"{u}{c}"
                in_block = lvl > m      # left children only count below the first block
                left = c == 0 and in_block
                lefts[v] = (0 if (lvl - 1) % m == 0 else lefts[u]) + (1 if left else 0)
                if status[u] != "inside":
                    st = "outside"
                elif lvl % m == 0 and 2 <= lvl // m <= K and (lvl // m == K or lefts[v] <= win.cutoff):
                    st = "boundary"
                else:
                    st = "inside"
                status[v] = st
                labs = {"tree", f"level:{lvl}"} | ({"left"} if c == 0 else set())
                if st == "boundary":
                    labs |= {"D", f"D{lvl // m}"}
                bld.add_vertex(v, labs)
                elab = {"tree", f"plevel:{lvl - 1}"} | ({"left"} if c == 0 else set())
                if status[u] == "inside":
                    elab.add("escape-tree")
                    if c == 0 and lvl > m:
                        elab.add("block-left")
                bld.add_edge(u, v, 1.0, elab)
                cur.append(v)
        levels.append(cur)
    outer = levels[-1]
    if expander is None:
        expander = random_regular_expander(len(outer), degree, seed, gap_threshold)
    if expander.n_vertices != len(outer):
        raise ConstructionError(f"expander has {expander.n_vertices} vertices; the ball has {len(outer)} outer vertices")
    leaf_of = dict(zip(expander.ids, outer))
    for u, v, w, _ in expander.edges():
        bld.add_edge(leaf_of[u], leaf_of[v], w, {"expander"})
    net = stretch_edges(bld.build(), "escape-tree", int(s))
    boundary = sum(1 for v in status.values() if v == "boundary")
    return net.with_metadata(
        family="theorem3", s=int(s), m=int(m), b=b, depth_budget=R, blocks=K,
        cutoff=win.cutoff, g=win.g, boundary_fraction=win.fraction, boundary_size=boundary,
        perturbation_selector="block-left", perturbation_factor=1 + b ** (-1 / 3),
        expander_certificate=expander.metadata.get("certificate"))

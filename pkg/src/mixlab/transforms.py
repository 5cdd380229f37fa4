"""Network surgery: edge perturbation, lumping, stretching, decoration, and
the non-backtracking lift."""

from __future__ import annotations

import logging
import re
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .chain import MarkovChain, chain_from_kernel, stationary_by_power_iteration
from .network import NetworkBuilder, NetworkError, WeightedNetwork

log = logging.getLogger(__name__)


# edge selectors ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<op><=|>=|==|!=|<|>)|(?P<sym>[()&|!])|(?P<word>[^\s()&|!<>=]+))")


class EdgeSelector:
    """Boolean query over edge labels.

    Atoms are label names (``left``), numeric comparisons on ``key:value``
    labels (``plevel<=4``), ``@name`` for "an endpoint carries vertex label
    ``name``", or ``*`` for every edge.  Combine with ``&``, ``|``, ``!`` and
    parentheses.  A plain callable ``f(labels, u_labels, v_labels) -> bool``
    is also accepted.
    """

    def __init__(self, query: str | Callable | None = "*") -> None:
        if callable(query):
            self.query, self._pred = "<callable>", query
        else:
            self.query = "*" if query is None else query
            self._tokens = self._tokenize(self.query)
            self._pos = 0
            self._pred = self._parse_or()
            if self._pos != len(self._tokens):
                raise ValueError(f"selector {self.query!r}: unexpected {self._tokens[self._pos][1]!r}")
            del self._tokens

    def __repr__(self) -> str:
        return f"EdgeSelector({self.query!r})"

    def mask(self, net: WeightedNetwork) -> np.ndarray:
        lab = net.labels
        return np.array([bool(self._pred(el, lab[h], lab[t]))
                         for h, t, el in zip(net.heads, net.tails, net.edge_labels)], dtype=bool)

    # recursive-descent parser
    @staticmethod
    def _tokenize(text: str) -> list[tuple[str, str]]:
        out, pos = [], 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ValueError(f"selector {text!r}: cannot parse at {text[pos:]!r}")
            kind = m.lastgroup
            out.append((kind, m.group(kind)))
            pos = m.end()
        return out

    def _peek(self):
        return self._tokens[self._pos] if self._pos < len(self._tokens) else (None, None)

    def _take(self):
        tok = self._peek()
        self._pos += 1
        return tok

    def _parse_or(self):
        parts = [self._parse_and()]
        while self._peek() == ("sym", "|"):
            self._take()
            parts.append(self._parse_and())
        return parts[0] if len(parts) == 1 else (lambda *a: any(p(*a) for p in parts))

    def _parse_and(self):
        parts = [self._parse_not()]
        while self._peek() == ("sym", "&"):
            self._take()
            parts.append(self._parse_not())
        return parts[0] if len(parts) == 1 else (lambda *a: all(p(*a) for p in parts))

    def _parse_not(self):
        if self._peek() == ("sym", "!"):
            self._take()
            inner = self._parse_not()
            return lambda *a: not inner(*a)
        if self._peek() == ("sym", "("):
            self._take()
            inner = self._parse_or()
            if self._take() != ("sym", ")"):
                raise ValueError(f"selector {self.query!r}: missing ')'")
            return inner
        kind, word = self._take()
        if kind != "word":
            raise ValueError(f"selector {self.query!r}: expected a label, got {word!r}")
        if self._peek()[0] == "op":
            _, op = self._take()
            kind2, num = self._take()
            try:
                bound = float(num)
            except (TypeError, ValueError):
                raise ValueError(f"selector {self.query!r}: {num!r} is not a number") from None
            return _numeric_atom(word, op, bound)
        if word == "*":
            return lambda el, ul, vl: True
        if word.startswith("@"):
            name = word[1:]
            return lambda el, ul, vl: name in ul or name in vl
        return lambda el, ul, vl: word in el


_CMP = {"<=": np.less_equal, ">=": np.greater_equal, "<": np.less,
        ">": np.greater, "==": np.equal, "!=": np.not_equal}


def _numeric_atom(key: str, op: str, bound: float):
    cmp, prefix = _CMP[op], key + ":"

    def pred(el, ul, vl):
        for lab in el:
            if lab.startswith(prefix):
                try:
                    if cmp(float(lab[len(prefix):]), bound):
                        return True
                except ValueError:
                    pass
        return False
    return pred


def _as_selector(sel) -> EdgeSelector:
    return sel if isinstance(sel, EdgeSelector) else EdgeSelector(sel)


# transforms ----------------------------------------------------------------

def perturb_edges(net: WeightedNetwork, selector, factor: float) -> WeightedNetwork:
    """Multiply the weight of every selected edge by ``factor >= 1``."""
    if not factor >= 1:
        raise ValueError(f"perturbation factor must be >= 1, got {factor}")
    mask = _as_selector(selector).mask(net)
    weights = np.where(mask, net.weights * factor, net.weights)
    meta = {**net.metadata, "perturbation": {"selector": _as_selector(selector).query,
                                             "factor": factor, "edges": int(mask.sum())}}
    return WeightedNetwork(net.ids, net.labels, net.heads, net.tails, weights,
                           net.edge_labels, meta)


def lump(net: WeightedNetwork, partition: Sequence[Sequence[str]],
         names: Sequence[str] | None = None) -> WeightedNetwork:
    """Quotient network: block weights are summed over ordered pairs.

    An internal edge of weight ``w`` therefore becomes loop weight ``2w``
    (existing loops contribute once), which keeps the lumped vertex weight
    equal to the sum of its members' weights.
    """
    block_of = np.full(net.n_vertices, -1, dtype=np.int64)
    for b, block in enumerate(partition):
        if len(block) == 0:
            raise NetworkError(f"partition block {b} is empty")
        for v in block:
            i = net.index.get(v)
            if i is None:
                raise NetworkError(f"partition names unknown vertex {v!r}")
            if block_of[i] >= 0:
                raise NetworkError(f"vertex {v!r} appears in more than one block")
            block_of[i] = b
    missing = np.flatnonzero(block_of < 0)
    if missing.size:
        raise NetworkError(f"vertex {net.ids[missing[0]]!r} is not covered by the partition")
    if names is not None and len(names) != len(partition):
        raise ValueError("names must match the number of blocks")

    bld = NetworkBuilder()
    new_ids = []
    for b, block in enumerate(partition):
        if names is not None:
            vid = names[b]
        elif len(block) == 1:
            vid = block[0]
        else:
            vid = "{" + ",".join(block) + "}"
        labels = set().union(*(net.labels[net.index[v]] for v in block))
        if len(block) > 1:
            labels.add("lumped")
        if vid in bld:
            raise NetworkError(f"lumped vertex name {vid!r} is used twice")
        bld.add_vertex(vid, labels)
        new_ids.append(vid)
    for h, t, w, lab in zip(net.heads, net.tails, net.weights, net.edge_labels):
        bh, bt = block_of[h], block_of[t]
        if bh == bt and h != t:
            w = 2 * w
        bld.add_edge(new_ids[bh], new_ids[bt], float(w), lab)
    return bld.build({**net.metadata, "lumped_blocks": sum(len(b) > 1 for b in partition)})


def stretch_edges(net: WeightedNetwork, selector, s: int) -> WeightedNetwork:
    """Replace each selected edge ``{u, v}`` by a path of ``s`` equal-weight edges.

    Internal vertices are named ``u~v:j`` (``j = 1..s-1`` counted from ``u``)
    and labelled with their origin, so effective conductance drops to ``w/s``.
    """
    if int(s) != s or s < 2:
        raise ValueError(f"stretch factor must be an integer >= 2, got {s}")
    s = int(s)
    mask = _as_selector(selector).mask(net)
    bld = NetworkBuilder()
    for v, lab in zip(net.ids, net.labels):
        bld.add_vertex(v, lab)
    for k, (u, v, w, lab) in enumerate(net.edges()):
        if not mask[k]:
            bld.add_edge(u, v, w, lab)
            continue
        if u == v:
            raise NetworkError(f"cannot stretch the self-loop at {u!r}")
        chain = [u]
        for j in range(1, s):
            vid = f"{u}~{v}:{j}"
            if vid in bld:
                raise NetworkError(f"stretch vertex name {vid!r} collides with an existing vertex")
            bld.add_vertex(vid, {"stretch", f"orig-u:{u}", f"orig-v:{v}", f"index:{j}"})
            chain.append(vid)
        chain.append(v)
        for a, b in zip(chain, chain[1:]):
            bld.add_edge(a, b, w, set(lab) | {"stretched"})
    meta = dict(net.metadata)
    meta.setdefault("stretch", []).append({"selector": _as_selector(selector).query,
                                           "s": s, "edges": int(mask.sum())})
    return bld.build(meta)


def decorate(net: WeightedNetwork, hosts: str | Iterable[str], decoration: WeightedNetwork,
             attach: str) -> WeightedNetwork:
    """Glue a copy of ``decoration`` onto each host, identifying ``attach`` with the host.

    Copied vertices are named ``host/original``; a name already in use gets a
    ``#k`` suffix, and the renames are logged and stored in
    ``metadata["decoration_renames"]``.
    """
    hosts = [hosts] if isinstance(hosts, str) else list(hosts)
    decoration.index_of(attach)
    bld = NetworkBuilder.from_network(net)
    renames: dict[str, str] = dict(net.metadata.get("decoration_renames", {}))
    for host in hosts:
        net.index_of(host)
        mapping = {attach: host}
        for v, lab in zip(decoration.ids, decoration.labels):
            if v == attach:
                continue
            vid = f"{host}/{v}"
            if vid in bld:
                k = 2
                while f"{vid}#{k}" in bld:
                    k += 1
                log.warning("decoration vertex %r renamed to %r", vid, f"{vid}#{k}")
                renames[vid] = f"{vid}#{k}"
                vid = f"{vid}#{k}"
            bld.add_vertex(vid, set(lab) | {"decoration", f"decorates:{host}"})
            mapping[v] = vid
        bld.add_labels(host, {"decorated"})
        for u, v, w, lab in decoration.edges():
            bld.add_edge(mapping[u], mapping[v], w, set(lab) | {"decoration"})
    meta = dict(net.metadata)
    if renames:
        meta["decoration_renames"] = renames
    meta["decorated_hosts"] = meta.get("decorated_hosts", 0) + len(hosts)
    return bld.build(meta)


# non-backtracking lift -----------------------------------------------------

def edge_state(v: str, u: str) -> str:
    return f"{v}>{u}"


def reverse_edge_state(state: str) -> str:
    v, u = state.split(">", 1)
    return edge_state(u, v)


def nbrw_lift(net: WeightedNetwork, holding: float) -> MarkovChain:
    """Lazy non-backtracking walk on the directed edges of ``net`` (weights ignored).

    From ``(v, u)`` the walk holds with probability ``holding`` and otherwise
    moves to ``(u, x)`` with ``x`` uniform among the neighbours of ``u`` other
    than ``v``.  Requires a loop-free graph with minimum degree 2.
    """
    if not 0 <= holding < 1:
        raise ValueError(f"holding probability {holding} outside [0, 1)")
    if np.any(net.heads == net.tails):
        k = int(np.flatnonzero(net.heads == net.tails)[0])
        raise NetworkError(f"self-loop at {net.ids[net.heads[k]]!r}: the lift needs a simple graph")
    low = np.flatnonzero(net.degrees < 2)
    if low.size:
        raise NetworkError(f"vertex {net.ids[low[0]]!r} has degree {net.degrees[low[0]]}; "
                           "non-backtracking walks need minimum degree 2")
    adj = net.adjacency
    nbrs = [adj.indices[adj.indptr[i]:adj.indptr[i + 1]] for i in range(net.n_vertices)]
    states, index = [], {}
    for v in range(net.n_vertices):
        for u in nbrs[v]:
            index[(v, int(u))] = len(states)
            states.append(edge_state(net.ids[v], net.ids[u]))
    rows, cols, vals = [], [], []
    for (v, u), i in index.items():
        if holding:
            rows.append(i); cols.append(i); vals.append(holding)
        p = (1 - holding) / (len(nbrs[u]) - 1)
        for x in nbrs[u]:
            if x != v:
                rows.append(i); cols.append(index[(u, int(x))]); vals.append(p)
    n = len(states)
    kernel = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    pi = stationary_by_power_iteration(kernel, tol=1e-12)
    chain = chain_from_kernel(kernel, states, pi)
    chain.metadata["base_vertices"] = net.n_vertices
    return chain

"""Weighted networks: vertices with labels, undirected edges with conductances.

A self-loop of weight ``w`` at ``v`` adds ``w`` (once) to the vertex weight
``c_v``.  Parallel edges are merged by summing their weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class NetworkError(ValueError):
    """Raised for malformed networks (bad weights, unknown vertices, ...)."""


@dataclass(frozen=True, eq=False)
class WeightedNetwork:
    """Immutable weighted graph.

    Edges are stored once with ``head <= tail`` (integer vertex indices).
    ``edge_labels`` tags each edge with free-form strings (e.g. ``"left"``,
    ``"plevel:3"``) consumed by :class:`mixlab.transforms.EdgeSelector`.
    """

    ids: tuple[str, ...]
    labels: tuple[frozenset[str], ...]
    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray
    edge_labels: tuple[frozenset[str], ...]
    metadata: dict = field(default_factory=dict)

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.ids)}

    @property
    def n_vertices(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    def index_of(self, vertex: str) -> int:
        try:
            return self.index[vertex]
        except KeyError:
            raise NetworkError(f"unknown vertex {vertex!r}") from None

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric conductance matrix; a loop's weight sits once on the diagonal."""
        n = self.n_vertices
        off = self.heads != self.tails
        rows = np.concatenate([self.heads, self.tails[off]])
        cols = np.concatenate([self.tails, self.heads[off]])
        vals = np.concatenate([self.weights, self.weights[off]])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    @cached_property
    def vertex_weights(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def stationary(self) -> np.ndarray:
        c = self.vertex_weights
        return c / c.sum()

    @cached_property
    def degrees(self) -> np.ndarray:
        """Number of distinct non-loop neighbours."""
        off = self.heads != self.tails
        deg = np.bincount(self.heads[off], minlength=self.n_vertices)
        deg += np.bincount(self.tails[off], minlength=self.n_vertices)
        return deg

    def neighbors(self, vertex: str) -> list[str]:
        i = self.index_of(vertex)
        row = self.adjacency.getrow(i)
        return [self.ids[j] for j in row.indices if j != i]

    def edge_weight(self, u: str, v: str) -> float:
        return float(self.adjacency[self.index_of(u), self.index_of(v)])

    def vertices_with_label(self, label: str) -> list[str]:
        return [v for v, lab in zip(self.ids, self.labels) if label in lab]

    def components(self) -> list[list[str]]:
        ncomp, comp = connected_components(self.adjacency, directed=False)
        groups: list[list[str]] = [[] for _ in range(ncomp)]
        for v, c in zip(self.ids, comp):
            groups[c].append(v)
        return groups

    def with_metadata(self, **extra) -> "WeightedNetwork":
        return WeightedNetwork(self.ids, self.labels, self.heads, self.tails,
                               self.weights, self.edge_labels,
                               {**self.metadata, **extra})

    def edges(self) -> Iterable[tuple[str, str, float, frozenset[str]]]:
        for h, t, w, lab in zip(self.heads, self.tails, self.weights, self.edge_labels):
            yield self.ids[h], self.ids[t], float(w), lab

    # serialisation ---------------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "vertices": [{"id": v, "labels": sorted(lab)}
                         for v, lab in zip(self.ids, self.labels)],
            "edges": [{"u": u, "v": v, "w": w, "labels": sorted(lab)}
                      for u, v, w, lab in self.edges()],
        }
        if self.metadata:
            out["metadata"] = self.metadata
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "WeightedNetwork":
        try:
            b = NetworkBuilder()
            for vert in data["vertices"]:
                b.add_vertex(str(vert["id"]), vert.get("labels", ()))
            for e in data["edges"]:
                b.add_edge(str(e["u"]), str(e["v"]), float(e["w"]), e.get("labels", ()))
        except (KeyError, TypeError) as exc:
            raise NetworkError(f"malformed network document: {exc}") from None
        meta = data.get("metadata") or {}
        if not isinstance(meta, Mapping):
            raise NetworkError("malformed network document: metadata must be an object")
        return b.build(dict(meta))


class NetworkBuilder:
    """Mutable accumulator that produces a :class:`WeightedNetwork`."""

    def __init__(self) -> None:
        self._index: dict[str, int] = {}
        self._ids: list[str] = []
        self._labels: list[set[str]] = []
        self._edges: dict[tuple[int, int], list] = {}

    def __contains__(self, vertex: str) -> bool:
        return vertex in self._index

    def __len__(self) -> int:
        return len(self._ids)

    def add_vertex(self, vertex: str, labels: Iterable[str] = ()) -> str:
        if vertex in self._index:
            self._labels[self._index[vertex]].update(labels)
        else:
            self._index[vertex] = len(self._ids)
            self._ids.append(vertex)
            self._labels.append(set(labels))
        return vertex

    def add_labels(self, vertex: str, labels: Iterable[str]) -> None:
        self._labels[self._index[vertex]].update(labels)

    def add_edge(self, u: str, v: str, weight: float, labels: Iterable[str] = ()) -> None:
        if not (math.isfinite(weight) and weight > 0):
            raise NetworkError(f"edge ({u!r}, {v!r}) has non-positive or non-finite weight {weight}")
        for x in (u, v):
            if x not in self._index:
                self.add_vertex(x)
        i, j = self._index[u], self._index[v]
        key = (i, j) if i <= j else (j, i)
        slot = self._edges.get(key)
        if slot is None:
            self._edges[key] = [weight, set(labels)]
        else:
            slot[0] += weight
            slot[1].update(labels)

    def build(self, metadata: dict | None = None) -> WeightedNetwork:
        keys = list(self._edges)
        heads = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
        tails = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
        weights = np.fromiter((self._edges[k][0] for k in keys), dtype=float, count=len(keys))
        return WeightedNetwork(
            ids=tuple(self._ids),
            labels=tuple(frozenset(s) for s in self._labels),
            heads=heads,
            tails=tails,
            weights=weights,
            edge_labels=tuple(frozenset(self._edges[k][1]) for k in keys),
            metadata=dict(metadata or {}),
        )

    @classmethod
    def from_network(cls, net: WeightedNetwork) -> "NetworkBuilder":
        b = cls()
        for v, lab in zip(net.ids, net.labels):
            b.add_vertex(v, lab)
        for u, v, w, lab in net.edges():
            b.add_edge(u, v, w, lab)
        return b


def load_network(path: str | Path) -> WeightedNetwork:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkError(f"{path}: invalid JSON ({exc})") from None
    return WeightedNetwork.from_dict(data)


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (set, frozenset, tuple)):
        return sorted(obj) if isinstance(obj, (set, frozenset)) else list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def save_network(net: WeightedNetwork, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(net.to_dict(), fh, indent=1, sort_keys=True, default=_plain)
        fh.write("\n")

"""Factor match hypergraphs and their merging."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .datamodel import EdgeKey, ViewLayout

log = logging.getLogger(__name__)

INDIVIDUAL = "individual"
PARTIAL = "partially-shared"
GLOBAL = "global"


@dataclass(frozen=True)
class FactorNode:
    """Factor `factor_index` of the denoised matrix on `edge`.

    `home_view` records which view-specific graph created the node; it does
    not take part in equality so the same factor seen from both of its
    views unifies.
    """

    edge: EdgeKey
    factor_index: int
    home_view: str | None = field(default=None, compare=False)

    @property
    def key(self) -> tuple[EdgeKey, int]:
        return self.edge, self.factor_index

    def to_json(self) -> dict:
        return {**self.edge.to_json(), "factor_index": self.factor_index}


def _node_sort_key(node: FactorNode):
    return node.edge, node.factor_index


def _edge_sort_key(nodes: Iterable[FactorNode]):
    return sorted(_node_sort_key(n) for n in nodes)


class FactorMatchGraph:
    """Hypergraph ``H = (F, C)`` with pairwise disjoint hyperedges.

    View-specific graphs carry an `owner` and an `anchors` map from node to
    the joint-matrix factor it matched (None for nodes kept without a
    partner).  A merged graph collects the anchors of all its inputs per
    view in `view_anchors`.
    """

    def __init__(self, hyperedges: Iterable[Iterable[FactorNode]] = (), owner: str | None = None,
                 anchors: Mapping[FactorNode, int | None] | None = None):
        self.owner = owner
        self.anchors: dict[FactorNode, int | None] = dict(anchors or {})
        self.view_anchors: dict[str, dict[FactorNode, int | None]] = {}
        if owner is not None:
            self.view_anchors[owner] = self.anchors
        self.stats: Counter = Counter()
        self._edges: dict[int, set[FactorNode]] = {}
        self._where: dict[FactorNode, int] = {}
        self._next = 0
        for he in hyperedges:
            self.add_hyperedge(he)

    # -- basic structure -------------------------------------------------
    def add_hyperedge(self, nodes: Iterable[FactorNode]) -> int:
        nodes = set(nodes)
        if not nodes:
            raise ValueError("hyperedges must be non-empty")
        clash = [n for n in nodes if n in self._where]
        if clash:
            raise ValueError(f"nodes {clash} already belong to a hyperedge")
        hid = self._next
        self._next += 1
        self._edges[hid] = nodes
        for n in nodes:
            self._where[n] = hid
        return hid

    def _remove_hyperedge(self, hid: int) -> set[FactorNode]:
        nodes = self._edges.pop(hid)
        for n in nodes:
            del self._where[n]
        return nodes

    def _absorb(self, target: int, nodes: Iterable[FactorNode]) -> None:
        for n in nodes:
            self._edges[target].add(n)
            self._where[n] = target

    def hyperedge_id(self, node: FactorNode) -> int:
        return self._where[node]

    def members(self, hid: int) -> frozenset[FactorNode]:
        return frozenset(self._edges[hid])

    def __contains__(self, node) -> bool:
        return node in self._where

    def __len__(self) -> int:
        return len(self._edges)

    @property
    def nodes(self) -> frozenset[FactorNode]:
        return frozenset(self._where)

    @property
    def hyperedges(self) -> list[frozenset[FactorNode]]:
        """Hyperedges in a deterministic order (by their smallest node)."""
        return sorted((frozenset(e) for e in self._edges.values()), key=_edge_sort_key)

    def partition(self) -> frozenset[frozenset[tuple[EdgeKey, int]]]:
        """Hyperedges as a set of sets of ``(edge, factor_index)`` keys."""
        return frozenset(frozenset(n.key for n in e) for e in self._edges.values())

    def check_invariants(self) -> None:
        seen = set()
        for hid, nodes in self._edges.items():
            assert nodes, f"empty hyperedge {hid}"
            for n in nodes:
                assert n not in seen, f"node {n} in two hyperedges"
                assert self._where[n] == hid
                seen.add(n)
        assert seen == set(self._where)

    def copy(self) -> "FactorMatchGraph":
        out = FactorMatchGraph(self.hyperedges, owner=self.owner, anchors=self.anchors)
        out.view_anchors = {v: dict(a) for v, a in self.view_anchors.items()}
        out.stats = Counter(self.stats)
        return out

    def __repr__(self):
        return f"FactorMatchGraph(owner={self.owner!r}, nodes={len(self._where)}, hyperedges={len(self._edges)})"


def _merge_into(h1: FactorMatchGraph, h2: FactorMatchGraph) -> None:
    """Fold `h2` into `h1` in place; `h2` is consumed."""
    shared = sorted(h1.nodes & h2.nodes, key=_node_sort_key)
    for f in shared:
        if f not in h2:
            continue
        c1 = h1.hyperedge_id(f)
        c2_id = h2.hyperedge_id(f)
        c2 = h2.members(c2_id)
        overlapping = {h1.hyperedge_id(n) for n in c2 if n in h1} - {c1}
        if overlapping:
            h1.stats["overlap_merges"] += len(overlapping)
            log.debug("hyperedge of %s overlaps %d further hyperedges", f, len(overlapping))
        new_nodes = [n for n in c2 if n not in h1]
        h1._absorb(c1, new_nodes)
        for hid in sorted(overlapping):
            h1._absorb(c1, h1._remove_hyperedge(hid))
        h2._remove_hyperedge(c2_id)
    for nodes in h2.hyperedges:
        h1.add_hyperedge(nodes)
    for view, anchors in h2.view_anchors.items():
        h1.view_anchors.setdefault(view, {}).update(anchors)
    h1.stats.update(h2.stats)


def merge_all(graphs: Iterable[FactorMatchGraph]) -> FactorMatchGraph:
    """Merge view-specific factor match graphs into one global graph.

    Graphs are folded pairwise in order of their owner view; the inputs
    are not modified.
    """
    work = sorted((g.copy() for g in graphs), key=lambda g: (g.owner is None, str(g.owner)))
    if not work:
        return FactorMatchGraph()
    while len(work) > 1:
        h1 = work.pop(0)
        h2 = work.pop(0)
        _merge_into(h1, h2)
        work.insert(0, h1)
    merged = work[0]
    merged.owner = None
    merged.anchors = {}
    _warn_collisions(merged)
    return merged


def _warn_collisions(graph: FactorMatchGraph) -> None:
    for he in graph.hyperedges:
        per_edge = Counter(n.edge for n in he)
        for edge, count in per_edge.items():
            if count > 1:
                graph.stats["collisions"] += 1
                log.warning("hyperedge holds %d factors of matrix %s", count, edge)


def sharing_class(edges: Iterable[EdgeKey], layout: ViewLayout):
    """Class label of a factor that is active on `edges`.

    Returns ``("individual", edge)``, ``("global",)`` or
    ``("partially-shared", frozenset_of_edges)``.
    """
    edges = frozenset(edges)
    if len(edges) == 1:
        return (INDIVIDUAL, next(iter(edges)))
    if edges == frozenset(layout.edges):
        return (GLOBAL,)
    return (PARTIAL, edges)


def classify_sharing(merged: FactorMatchGraph, layout: ViewLayout) -> dict[frozenset, tuple]:
    """Map every hyperedge of `merged` to its sharing class."""
    return {he: sharing_class({n.edge for n in he}, layout) for he in merged.hyperedges}


def class_label(cls: tuple) -> str:
    """Stable human readable form of a sharing class."""
    if cls[0] == GLOBAL:
        return GLOBAL
    if cls[0] == INDIVIDUAL:
        return f"{INDIVIDUAL}:{cls[1]}"
    return f"{PARTIAL}:" + "+".join(str(e) for e in sorted(cls[1]))


def graph_to_json(hyperedges: list[frozenset[FactorNode]], layout: ViewLayout) -> dict:
    """Serialize hyperedges, already in global factor order, to the JSON schema."""
    factors = []
    for k, he in enumerate(hyperedges):
        cls = sharing_class({n.edge for n in he}, layout)
        factors.append({
            "id": k,
            "class": class_label(cls),
            "members": [n.to_json() for n in sorted(he, key=_node_sort_key)],
        })
    return {"factors": factors}

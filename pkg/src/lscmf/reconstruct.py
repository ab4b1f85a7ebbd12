"""Turn the merged factor match graph into factor matrices and singular values."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .datamodel import EdgeKey, ViewLayout
from .denoise import DenoiseResult
from .errors import LscmfError
from .fmgraph import FactorMatchGraph, FactorNode, _node_sort_key, graph_to_json
from .matching import view_vectors

log = logging.getLogger(__name__)

#: |dot| below this between a factor and its source vector triggers a warning
NEAR_ORTHOGONAL = 1e-8

JOINT = "joint"
INDIVIDUAL = "individual"


@dataclass
class IntegrationResult:
    """Integrated low-rank factorization of all matrices in a layout.

    ``factors[view]`` is ``p_view x r``; columns with no estimate are NaN and
    ``column_source[view][l]`` is None for them.  ``values[edge]`` holds the
    signed singular values in standardized units, zero where a factor is
    inactive; ``scales[edge]`` converts back to the original units.
    """

    layout: ViewLayout
    factors: dict[str, np.ndarray]
    values: dict[EdgeKey, np.ndarray]
    hyperedges: list[frozenset]
    graph: FactorMatchGraph
    scales: dict[EdgeKey, float]
    column_source: dict[str, list[str | None]]
    diagnostics: dict = field(default_factory=dict)
    individual_results: dict = field(default_factory=dict, repr=False)
    joint_results: dict = field(default_factory=dict, repr=False)
    view_graphs: list = field(default_factory=list, repr=False)

    @property
    def rank(self) -> int:
        return len(self.hyperedges)

    def populated(self, view: str) -> np.ndarray:
        return np.array([s is not None for s in self.column_source[view]], dtype=bool)

    def graph_json(self) -> dict:
        return graph_to_json(self.hyperedges, self.layout)


def order_hyperedges(graph: FactorMatchGraph, individual_results: Mapping[EdgeKey, DenoiseResult]) -> list[frozenset]:
    """Hyperedges by decreasing total squared shrunk value, ties by smallest node."""
    def weight(he):
        return sum(float(individual_results[n.edge].shrunk_values[n.factor_index]) ** 2 for n in he)

    return sorted(graph.hyperedges, key=lambda he: (-weight(he), sorted(_node_sort_key(n) for n in he)))


def assemble_result(merged: FactorMatchGraph, joint_results: Mapping[str, DenoiseResult],
                    individual_results: Mapping[EdgeKey, DenoiseResult], layout: ViewLayout,
                    scales: Mapping[EdgeKey, float] | None = None) -> IntegrationResult:
    """Read factors and signed singular values off the merged graph."""
    scales = dict(scales or {e: 1.0 for e in layout.edges})
    hyperedges = order_hyperedges(merged, individual_results)
    r = len(hyperedges)
    factors = {v: np.full((p, r), np.nan) for v, p in layout.view_dims.items()}
    sources: dict[str, list[str | None]] = {v: [None] * r for v in layout.view_dims}
    values = {e: np.zeros(r) for e in layout.edges}
    warnings: list[str] = []

    def shrunk(node: FactorNode) -> float:
        res = individual_results[node.edge]
        if node.factor_index >= res.rank:
            raise LscmfError(f"node {node} refers past rank {res.rank} of matrix {node.edge}")
        return float(res.shrunk_values[node.factor_index])

    for l, he in enumerate(hyperedges):
        ordered = sorted(he, key=lambda n: (-shrunk(n), _node_sort_key(n)))
        chosen: dict[EdgeKey, FactorNode] = {}
        for node in ordered:
            if node.edge in chosen:
                msg = f"factor {l}: dropped {node.edge}#{node.factor_index} in favour of #{chosen[node.edge].factor_index}"
                warnings.append(msg)
                log.warning(msg)
                continue
            chosen[node.edge] = node

        for view in sorted({v for e in chosen for v in e.views()}):
            anchors = merged.view_anchors.get(view, {})
            anchored = [n for n in ordered if n.edge.involves(view) and anchors.get(n) is not None]
            if anchored:
                col = anchors[anchored[0]]
                joint = joint_results[view]
                if col >= joint.rank:
                    raise LscmfError(f"joint factor {col} of view {view} out of range")
                factors[view][:, l] = joint.left_vectors[:, col]
                sources[view][l] = JOINT
            else:
                node = next(n for n in ordered if n.edge.involves(view))
                vecs, _ = view_vectors(individual_results[node.edge], node.edge, view)
                factors[view][:, l] = vecs[:, node.factor_index]
                sources[view][l] = INDIVIDUAL

        for edge, node in chosen.items():
            res = individual_results[edge]
            k = node.factor_index
            anti = 0
            for view, vec in ((edge.row_view, res.left_vectors[:, k]), (edge.col_view, res.right_vectors[:, k])):
                dot = float(factors[view][:, l] @ vec)
                if abs(dot) < NEAR_ORTHOGONAL:
                    msg = f"factor {l}: view {view} nearly orthogonal to factor {k} of {edge}"
                    warnings.append(msg)
                    log.warning(msg)
                anti += dot < 0
            x = float(res.shrunk_values[k])
            values[edge][l] = -x if anti == 1 else x

    diagnostics = {
        "warnings": warnings,
        "merge_overlap_activations": int(merged.stats.get("overlap_merges", 0)),
        "merge_collisions": int(merged.stats.get("collisions", 0)),
    }
    return IntegrationResult(
        layout=layout,
        factors=factors,
        values=values,
        hyperedges=hyperedges,
        graph=merged,
        scales=scales,
        column_source=sources,
        diagnostics=diagnostics,
    )


def reconstruct_signal(result: IntegrationResult, edge: EdgeKey, standardized: bool = False) -> np.ndarray:
    """Estimated signal matrix of `edge`, in original units unless `standardized`."""
    if edge not in result.values:
        raise KeyError(f"unknown edge {edge}")
    x = result.values[edge]
    active = np.flatnonzero(x)
    vi = result.factors[edge.row_view][:, active]
    vj = result.factors[edge.col_view][:, active]
    out = (vi * x[active]) @ vj.T
    if not standardized:
        out *= result.scales.get(edge, 1.0)
    return out

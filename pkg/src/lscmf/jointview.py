"""Joint matrices: all standardized matrices involving one view, side by side."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .datamodel import EdgeKey, ObservedMatrix, ViewLayout
from .errors import InputError, UnknownViewError


@dataclass(frozen=True)
class JointAssembly:
    """Column-wise concatenation of the rescaled blocks of one view.

    ``source_edges[k] = (edge, transposed)`` and ``column_offsets[k]`` is the
    half-open column range of that block inside `matrix`.
    """

    view: str
    source_edges: tuple[tuple[EdgeKey, bool], ...]
    n_rows: int
    n_cols: int
    d: int
    n_involved: int
    gamma: int
    partner_dims: tuple[int, ...]
    block_dims: tuple[int, ...]
    column_offsets: tuple[tuple[int, int], ...]
    matrix: np.ndarray | None

    @property
    def beta(self) -> float:
        return min(self.n_rows, self.n_cols) / max(self.n_rows, self.n_cols)

    def block(self, edge: EdgeKey) -> np.ndarray:
        for (key, _), (start, stop) in zip(self.source_edges, self.column_offsets):
            if key == edge:
                return self.matrix[:, start:stop]
        raise KeyError(edge)


def joint_geometry(layout: ViewLayout, view: str) -> JointAssembly:
    """Dimensions of the joint matrix of `view` without materializing it."""
    edges = layout.edges_of(view)
    if not edges:
        raise UnknownViewError(f"view {view!r} takes part in no edge")
    p_i = layout.view_dims[view]
    sources, partners, blocks, offsets = [], [], [], []
    start = 0
    for edge in edges:
        partner = layout.view_dims[edge.other(view)]
        sources.append((edge, edge.col_view == view))
        partners.append(partner)
        blocks.append(max(p_i, partner))
        offsets.append((start, start + partner))
        start += partner
    c_i = start
    return JointAssembly(
        view=view,
        source_edges=tuple(sources),
        n_rows=p_i,
        n_cols=c_i,
        d=max(p_i, c_i),
        n_involved=len(edges),
        gamma=sum(blocks),
        partner_dims=tuple(partners),
        block_dims=tuple(blocks),
        column_offsets=tuple(offsets),
        matrix=None,
    )


def assemble_joint(layout: ViewLayout, standardized: Mapping[EdgeKey, ObservedMatrix], view: str) -> JointAssembly:
    """Build the joint matrix of `view` from standardized matrices.

    Each block ``sqrt(p_ij) * Y_ij`` (transposed when `view` is the column
    view) is placed in edge order and the result divided by ``sqrt(d_i)``.
    """
    if view not in layout.view_dims:
        raise UnknownViewError(f"view {view!r} is not part of the layout")
    geom = joint_geometry(layout, view)
    out = np.empty((geom.n_rows, geom.n_cols))
    root_d = math.sqrt(geom.d)
    for (edge, transposed), p_ij, (start, stop) in zip(geom.source_edges, geom.block_dims, geom.column_offsets):
        mat = standardized[edge]
        if mat.scale_applied is None:
            raise InputError(f"matrix on edge {edge} must be standardized before joint assembly")
        data = mat.data.T if transposed else mat.data
        np.multiply(data, math.sqrt(p_ij) / root_d, out=out[:, start:stop])
    return JointAssembly(**{**geom.__dict__, "matrix": out})


def joint_signal_sv(per_edge_values: Mapping[EdgeKey, float], assembly: JointAssembly) -> float:
    """Signal singular value a shared component takes in the joint matrix."""
    total = 0.0
    for (edge, _), p_ij in zip(assembly.source_edges, assembly.block_dims):
        x = float(per_edge_values[edge])
        total += p_ij * x * x
    return math.sqrt(total / assembly.d)

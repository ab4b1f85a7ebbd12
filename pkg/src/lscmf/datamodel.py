"""View graph, observed matrices and standardization to the unit noise model."""
from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from . import denoise
from .errors import (
    DegenerateInputError,
    DisconnectedLayoutError,
    DuplicateMatrixError,
    InputError,
    LayoutError,
    MissingMatrixError,
    ShapeMismatchError,
    UnknownViewError,
)


@dataclass(frozen=True, order=True)
class EdgeKey:
    """One observed relation: view `row_view` in the rows, `col_view` in the columns."""

    row_view: str
    col_view: str
    layer: int = 0

    def __post_init__(self):
        if self.row_view == self.col_view:
            raise LayoutError(f"edge {self} relates view {self.row_view!r} to itself")
        if self.layer < 0:
            raise LayoutError(f"edge {self} has a negative layer")

    def __str__(self):
        base = f"{self.row_view}_{self.col_view}"
        return base if self.layer == 0 else f"{base}_{self.layer}"

    def views(self) -> tuple[str, str]:
        return self.row_view, self.col_view

    def involves(self, view: str) -> bool:
        return view == self.row_view or view == self.col_view

    def other(self, view: str) -> str:
        if view == self.row_view:
            return self.col_view
        if view == self.col_view:
            return self.row_view
        raise KeyError(view)

    def to_json(self) -> dict:
        return {"row_view": self.row_view, "col_view": self.col_view, "layer": self.layer}


@dataclass(frozen=True)
class ViewLayout:
    """The view graph: view dimensions and observed edges.

    Edges are kept sorted so every downstream iteration is deterministic.
    Connectivity is checked by :func:`validate_layout`, not here, so that
    disconnected layouts can still be constructed and reported on.
    """

    view_dims: Mapping[str, int]
    edges: tuple[EdgeKey, ...]

    def __post_init__(self):
        dims = {str(k): int(v) for k, v in dict(self.view_dims).items()}
        for view, dim in dims.items():
            if dim <= 0:
                raise LayoutError(f"view {view!r} has non-positive dimension {dim}")
        edges = tuple(sorted(self.edges))
        seen = set()
        for edge in edges:
            for view in edge.views():
                if view not in dims:
                    raise UnknownViewError(f"edge {edge} references undeclared view {view!r}")
            pair = (frozenset(edge.views()), edge.layer)
            if pair in seen:
                raise DuplicateMatrixError(
                    f"edge {edge} duplicates another edge between the same views and layer"
                )
            seen.add(pair)
        object.__setattr__(self, "view_dims", dims)
        object.__setattr__(self, "edges", edges)

    @property
    def views(self) -> tuple[str, ...]:
        return tuple(sorted(self.view_dims))

    def shape(self, edge: EdgeKey) -> tuple[int, int]:
        return self.view_dims[edge.row_view], self.view_dims[edge.col_view]

    def edges_of(self, view: str) -> tuple[EdgeKey, ...]:
        if view not in self.view_dims:
            raise UnknownViewError(f"view {view!r} is not part of the layout")
        return tuple(e for e in self.edges if e.involves(view))

    def is_connected(self) -> bool:
        active = {v for e in self.edges for v in e.views()}
        if not self.view_dims:
            return True
        if active != set(self.view_dims):
            return len(self.view_dims) == 1
        adj = defaultdict(set)
        for e in self.edges:
            adj[e.row_view].add(e.col_view)
            adj[e.col_view].add(e.row_view)
        start = self.views[0]
        reached = {start}
        queue = deque([start])
        while queue:
            for nxt in adj[queue.popleft()]:
                if nxt not in reached:
                    reached.add(nxt)
                    queue.append(nxt)
        return len(reached) == len(self.view_dims)


@dataclass(frozen=True)
class ObservedMatrix:
    """A data matrix on one edge.

    `scale_applied` is the divisor used by :func:`standardize`; it is None
    for raw data.  `singular_values` optionally caches all singular values of
    `data` so the denoising pass does not recompute them.
    """

    key: EdgeKey
    data: np.ndarray
    scale_applied: float | None = None
    singular_values: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def validate_layout(layout: ViewLayout, matrices: Iterable[ObservedMatrix]) -> None:
    """Check that `matrices` populate `layout` exactly once per edge with matching shapes.

    Raises a distinct :class:`~lscmf.errors.LayoutError` subclass for each
    kind of problem.
    """
    by_key: dict[EdgeKey, ObservedMatrix] = {}
    for mat in matrices:
        if mat.key not in layout.edges:
            raise UnknownViewError(f"matrix on edge {mat.key} is not an edge of the layout")
        if mat.key in by_key:
            raise DuplicateMatrixError(f"edge {mat.key} has more than one matrix")
        by_key[mat.key] = mat
    for edge in layout.edges:
        if edge not in by_key:
            raise MissingMatrixError(f"edge {edge} has no matrix")
        expected = layout.shape(edge)
        if tuple(by_key[edge].data.shape) != expected:
            raise ShapeMismatchError(
                f"matrix on edge {edge} has shape {tuple(by_key[edge].data.shape)}, expected {expected}"
            )
    if not layout.edges or not layout.is_connected():
        raise DisconnectedLayoutError("disconnected view graph")


def standardize(matrix: ObservedMatrix) -> ObservedMatrix:
    """Rescale `matrix` so its noise has standard deviation ``1/sqrt(max(p_i, p_j))``.

    The noise level is estimated from the median singular value; the
    estimator is orientation free so no explicit transpose is needed.
    """
    if matrix.scale_applied is not None:
        raise InputError(f"matrix on edge {matrix.key} is already standardized")
    data = np.asarray(matrix.data, dtype=float)
    if not np.all(np.isfinite(data)):
        raise InputError(f"matrix on edge {matrix.key} contains non-finite entries")
    values = denoise.singular_values(data)
    if values.size == 0 or values[0] == 0.0:
        raise DegenerateInputError(f"matrix on edge {matrix.key} is all zeros")
    m, n = data.shape
    sigma = denoise.estimate_noise_scale(values, m, n)
    divisor = math.sqrt(max(m, n)) * sigma
    return ObservedMatrix(
        key=matrix.key,
        data=data / divisor,
        scale_applied=divisor,
        singular_values=values / divisor,
    )


def center(matrix: ObservedMatrix, axis: str = "columns") -> ObservedMatrix:
    """Subtract column means (``axis="columns"``) or row means (``axis="rows"``)."""
    if axis not in ("columns", "rows"):
        raise ValueError(f"axis must be 'columns' or 'rows', got {axis!r}")
    data = np.asarray(matrix.data, dtype=float)
    data = data - data.mean(axis=0 if axis == "columns" else 1, keepdims=True)
    return replace(matrix, data=data, singular_values=None)

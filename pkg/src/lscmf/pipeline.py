"""End-to-end estimation: standardize, denoise, match, merge, reconstruct."""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Iterable

from . import denoise
from .datamodel import ObservedMatrix, ViewLayout, standardize, validate_layout
from .fmgraph import merge_all
from .jointview import assemble_joint
from .matching import build_view_graph
from .reconstruct import IntegrationResult, assemble_result

log = logging.getLogger(__name__)

PHASES = ("standardize", "svd_pass1", "svd_pass2", "matching", "merging", "reconstruct")


class PhaseTimer:
    """Accumulates wall-clock seconds per named phase."""

    def __init__(self):
        self.seconds = {p: 0.0 for p in PHASES}

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name] = self.seconds.get(name, 0.0) + time.perf_counter() - start

    @property
    def total(self) -> float:
        return sum(self.seconds.values())


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def fit(layout: ViewLayout, matrices: Iterable[ObservedMatrix], threads: int = 1,
        timer: PhaseTimer | None = None, keep_unanchored: bool = False) -> IntegrationResult:
    """Estimate the integrated factorization of raw `matrices` laid out by `layout`.

    Parallelism (`threads`) applies across matrices and views only; the
    merge runs single threaded.  Results do not depend on `threads`.
    """
    matrices = list(matrices)
    validate_layout(layout, matrices)
    timer = timer or PhaseTimer()
    raw = {m.key: m for m in matrices}

    with timer.phase("standardize"):
        std_list = _map(standardize, [raw[e] for e in layout.edges], threads)
    std = {m.key: m for m in std_list}

    views = [v for v in layout.views if layout.edges_of(v)]
    with timer.phase("svd_pass1"):
        joints = {v: assemble_joint(layout, std, v) for v in views}
        joint_values = dict(zip(views, _map(lambda v: denoise.singular_values(joints[v].matrix), views, threads)))

    with timer.phase("svd_pass2"):
        edges = list(layout.edges)
        individual = dict(zip(edges, _map(lambda e: denoise.denoise_matrix(std[e].data, std[e].singular_values), edges, threads)))
        joint_results = dict(zip(views, _map(lambda v: denoise.denoise_matrix(joints[v].matrix, joint_values[v]), views, threads)))
    del joints

    with timer.phase("matching"):
        graphs = [
            build_view_graph(v, joint_results[v], {e: individual[e] for e in layout.edges_of(v)},
                             keep_unanchored=keep_unanchored)
            for v in views
        ]

    with timer.phase("merging"):
        merged = merge_all(graphs)

    with timer.phase("reconstruct"):
        scales = {e: std[e].scale_applied for e in layout.edges}
        result = assemble_result(merged, joint_results, individual, layout, scales)

    result.diagnostics["matrices"] = [
        {
            **e.to_json(),
            "shape": list(layout.shape(e)),
            "beta": individual[e].aspect,
            "noise_scale": std[e].scale_applied / math.sqrt(max(layout.shape(e))),
            "rank": individual[e].rank,
            "shrunk_values": individual[e].shrunk_values.tolist(),
            "notes": list(individual[e].notes),
        }
        for e in layout.edges
    ]
    result.diagnostics["joint"] = [
        {
            "view": v,
            "shape": [joint_results[v].n_rows, joint_results[v].n_cols],
            "beta": joint_results[v].aspect,
            "rank": joint_results[v].rank,
            "notes": list(joint_results[v].notes),
        }
        for v in views
    ]
    result.individual_results = individual
    result.joint_results = joint_results
    result.view_graphs = graphs
    return result

"""Synthetic scenarios with planted shared and individual structure, and scoring."""
from __future__ import annotations

import math
import time
import zlib
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .datamodel import EdgeKey, ObservedMatrix, ViewLayout
from .fmgraph import class_label, sharing_class
from .pipeline import PHASES, PhaseTimer, fit
from .reconstruct import IntegrationResult


@dataclass(frozen=True)
class ScenarioSpec:
    layout: ViewLayout
    planted_values: Mapping[EdgeKey, np.ndarray]
    snr: float
    dim_scale: int
    seed: int

    @property
    def rank(self) -> int:
        return len(next(iter(self.planted_values.values())))

    def __post_init__(self):
        lengths = {len(v) for v in self.planted_values.values()}
        if len(lengths) != 1:
            raise ValueError(f"planted value vectors differ in length: {sorted(lengths)}")
        if set(self.planted_values) != set(self.layout.edges):
            raise ValueError("planted values must cover exactly the layout edges")
        r = lengths.pop()
        small = [v for v, p in self.layout.view_dims.items() if p < r]
        if small:
            raise ValueError(f"views {small} have dimension below the rank {r}")
        if self.snr <= 0:
            raise ValueError("snr must be positive")


@dataclass
class Simulation:
    spec: ScenarioSpec
    matrices: list[ObservedMatrix]
    factors: dict[str, np.ndarray]
    signals: dict[EdgeKey, np.ndarray]
    sigmas: dict[EdgeKey, float]


@dataclass(frozen=True)
class RecoveryScore:
    true_partition: dict[str, int]
    estimated_partition: dict[str, int]
    exact_match: bool


# base dimensions and planted values of the three evaluation scenarios
_SCENARIOS = {
    1: (
        {"1": 100, "2": 25, "3": 25},
        {("1", "2"): (6, 7, 0, 8), ("1", "3"): (5, 5.5, 6, 0)},
    ),
    2: (
        {"1": 100, "2": 25, "3": 25, "4": 25},
        {
            ("1", "2"): (1.5, 1.3, 0.9, 0.6, 0, 0, 0),
            ("1", "3"): (1.5, 1.3, 0, 0, 0.8, 0.5, 0),
            ("1", "4"): (1.5, 1.3, 1.0, 0, 0, 0, 0.7),
        },
    ),
    3: (
        {"1": 100, "2": 100, "3": 100},
        {
            ("1", "2"): (0, 3.5, 2.5, 0, 1.9, 0),
            ("1", "3"): (4.9, 3.5, 2.5, 0, 0, 2.2),
            ("2", "3"): (4.9, 3.5, 0, 2.5, 0, 0),
        },
    ),
}


def builtin_scenario(which: int, dim_scale: int = 1, seed: int = 0) -> ScenarioSpec:
    """One of the three built-in layouts with all view dimensions multiplied by `dim_scale`."""
    if which not in _SCENARIOS:
        raise ValueError(f"unknown scenario {which!r}; choose 1, 2 or 3")
    if int(dim_scale) != dim_scale or dim_scale < 1:
        raise ValueError(f"dimension scale must be a positive integer, got {dim_scale!r}")
    dims, planted = _SCENARIOS[which]
    layout = ViewLayout({v: p * int(dim_scale) for v, p in dims.items()}, tuple(EdgeKey(i, j) for i, j in planted))
    values = {EdgeKey(i, j): np.array(x, dtype=float) for (i, j), x in planted.items()}
    return ScenarioSpec(layout=layout, planted_values=values, snr=1.0, dim_scale=int(dim_scale), seed=int(seed))


def _rng(seed: int, *stream) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & 0xFFFFFFFF, *stream])))


def edge_stream(edge: EdgeKey) -> int:
    """Stable 32-bit stream id of an edge."""
    return zlib.crc32(str(edge).encode())


def generate(spec: ScenarioSpec) -> Simulation:
    """Draw orthonormal factors, signals and noisy observations for `spec`.

    Every view and every edge draws from its own PCG64 stream derived from
    the seed, so results do not depend on iteration order.
    """
    r = spec.rank
    factors = {}
    for idx, view in enumerate(spec.layout.views):
        g = _rng(spec.seed, 0, idx)
        q, _ = np.linalg.qr(g.standard_normal((spec.layout.view_dims[view], r)))
        factors[view] = q[:, :r]
    matrices, signals, sigmas = [], {}, {}
    for edge in spec.layout.edges:
        x = spec.planted_values[edge]
        signal = (factors[edge.row_view] * x) @ factors[edge.col_view].T
        p_i, p_j = spec.layout.shape(edge)
        norm = float(np.linalg.norm(x))
        if norm == 0.0:
            raise ValueError(f"edge {edge} carries no signal; cannot calibrate the SNR")
        sigma = norm / (spec.snr * math.sqrt(p_i * p_j))
        noise = _rng(spec.seed, 1, edge_stream(edge)).standard_normal((p_i, p_j))
        matrices.append(ObservedMatrix(edge, signal + sigma * noise))
        signals[edge] = signal
        sigmas[edge] = sigma
    return Simulation(spec=spec, matrices=matrices, factors=factors, signals=signals, sigmas=sigmas)


def true_partition(spec: ScenarioSpec) -> dict[str, int]:
    """Sharing-class counts implied by the zero pattern of the planted values."""
    counts = Counter()
    for l in range(spec.rank):
        active = [e for e in spec.layout.edges if spec.planted_values[e][l] != 0]
        if active:
            counts[class_label(sharing_class(active, spec.layout))] += 1
    return dict(sorted(counts.items()))


def estimated_partition(result: IntegrationResult) -> dict[str, int]:
    counts = Counter(class_label(sharing_class({n.edge for n in he}, result.layout)) for he in result.hyperedges)
    return dict(sorted(counts.items()))


def score(truth: ScenarioSpec, result: IntegrationResult) -> RecoveryScore:
    """Compare planted and estimated sharing-class counts."""
    if truth.layout != result.layout:
        raise ValueError("result was estimated on a different layout")
    t = true_partition(truth)
    e = estimated_partition(result)
    return RecoveryScore(true_partition=t, estimated_partition=e, exact_match=t == e)


def run_replicate(which: int, dim_scale: int, seed: int, threads: int = 1) -> dict:
    """Generate, fit and score one replicate; returns a flat record with phase timings in ms."""
    spec = builtin_scenario(which, dim_scale, seed)
    start = time.perf_counter()
    sim = generate(spec)
    t_generate = time.perf_counter() - start
    timer = PhaseTimer()
    result = fit(spec.layout, sim.matrices, threads=threads, timer=timer)
    sc = score(spec, result)
    record = {"scenario": which, "dim_scale": dim_scale, "seed": seed, "generate_ms": 1000 * t_generate}
    for phase in PHASES:
        record[f"{phase}_ms"] = 1000 * timer.seconds[phase]
    record["total_ms"] = 1000 * timer.total
    record["true_partition"] = sc.true_partition
    record["estimated_partition"] = sc.estimated_partition
    record["exact_match"] = sc.exact_match
    record["result"] = result
    record["simulation"] = sim
    return record

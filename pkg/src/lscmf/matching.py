"""Geometric factor matching and view-specific factor match graphs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import denoise
from .datamodel import EdgeKey
from .denoise import DenoiseResult
from .errors import DomainError
from .fmgraph import FactorMatchGraph, FactorNode

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class AngleEstimate:
    """Estimated angle between an empirical singular vector and its signal vector."""

    theta: float
    cosine: float
    source_beta: float
    source_sv: float


@dataclass(frozen=True)
class MatchBounds:
    lower_match: float
    upper_match: float
    upper_nonmatch: float
    feasible: bool


@dataclass(frozen=True)
class MatchDecision:
    dot: float
    lower_match: float
    upper_nonmatch: float
    feasible: bool
    matched: bool


def estimate_angle(data_sv: float, beta: float, side: str) -> AngleEstimate:
    """Angle implied by a supercritical data singular value."""
    x = denoise.invert_data_sv(data_sv, beta)
    cosine = min(max(denoise.asymptotic_cosine(x, beta, side), 0.0), 1.0)
    theta = min(max(math.acos(cosine), 0.0), HALF_PI)
    return AngleEstimate(theta=theta, cosine=cosine, source_beta=beta, source_sv=data_sv)


def match_bounds(theta1: float, theta2: float) -> MatchBounds:
    """Bounds on ``a1 . a2`` for matching and non-matching factors.

    ``lower_match = cos(t1 + t2)`` must be exceeded by matching factors and
    ``upper_nonmatch = sin(t1 + t2) + sin(t1) sin(t2)`` bounds unrelated
    ones.  ``upper_match = cos(t1 - t2)`` is reported but not used.
    """
    for t in (theta1, theta2):
        if not (0.0 <= t <= HALF_PI + 1e-12):
            raise DomainError(f"angle {t!r} outside [0, pi/2]")
    s = theta1 + theta2
    lower = math.cos(s)
    upper_nonmatch = math.sin(s) + math.sin(theta1) * math.sin(theta2)
    return MatchBounds(
        lower_match=lower,
        upper_match=math.cos(theta1 - theta2),
        upper_nonmatch=upper_nonmatch,
        feasible=upper_nonmatch <= lower,
    )


def _theta(t) -> float:
    return t.theta if isinstance(t, AngleEstimate) else float(t)


def decide_match(a1, a2, theta1, theta2) -> MatchDecision:
    """Decide whether unit vectors `a1` and `a2` estimate the same signal direction."""
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    if a1.shape != a2.shape or a1.ndim != 1:
        raise ValueError(f"vectors must be 1-d of equal length, got {a1.shape} and {a2.shape}")
    for a in (a1, a2):
        if abs(np.linalg.norm(a) - 1.0) > 1e-6:
            raise ValueError("vectors must have unit norm")
    bounds = match_bounds(_theta(theta1), _theta(theta2))
    dot = float(a1 @ a2)
    matched = bounds.feasible and abs(dot) >= max(bounds.lower_match, bounds.upper_nonmatch)
    return MatchDecision(dot, bounds.lower_match, bounds.upper_nonmatch, bounds.feasible, matched)


def view_vectors(result: DenoiseResult, edge: EdgeKey, view: str) -> tuple[np.ndarray, str]:
    """Singular vectors of `result` living on `view`, with their angle side."""
    if view == edge.row_view:
        return result.left_vectors, result.left_side
    if view == edge.col_view:
        return result.right_vectors, result.right_side
    raise KeyError(f"view {view!r} is not part of edge {edge}")


def build_view_graph(view: str, joint: DenoiseResult, individuals: Mapping[EdgeKey, DenoiseResult],
                     keep_unanchored: bool = False) -> FactorMatchGraph:
    """Match the factors of every matrix involving `view` against the joint factors.

    Candidate pairs of one matrix are accepted greedily by decreasing
    ``|a1 . a2|`` so each individual factor and each joint factor is used at
    most once per matrix.  Individual factors without a partner become
    singleton hyperedges when `keep_unanchored` is set; by default they are
    left out, so a factor enters the graph only through a match.
    """
    joint_angles = [estimate_angle(y, joint.aspect, joint.left_side) for y in joint.data_values]
    groups: dict[int, list[FactorNode]] = {}
    anchors: dict[FactorNode, int | None] = {}
    loose: list[FactorNode] = []

    for edge in sorted(individuals):
        result = individuals[edge]
        if result.rank == 0:
            continue
        vectors, side = view_vectors(result, edge, view)
        candidates = []
        if joint.rank:
            dots = np.abs(vectors.T @ joint.left_vectors)
            for k, y in enumerate(result.data_values):
                theta_k = estimate_angle(y, result.aspect, side)
                for l, theta_l in enumerate(joint_angles):
                    bounds = match_bounds(theta_k.theta, theta_l.theta)
                    if bounds.feasible and dots[k, l] >= max(bounds.lower_match, bounds.upper_nonmatch):
                        candidates.append((-dots[k, l], k, l))
        candidates.sort()
        used_k, used_l = set(), set()
        for _, k, l in candidates:
            if k in used_k or l in used_l:
                continue
            used_k.add(k)
            used_l.add(l)
            node = FactorNode(edge, k, view)
            groups.setdefault(l, []).append(node)
            anchors[node] = l
        for k in range(result.rank):
            if k not in used_k:
                node = FactorNode(edge, k, view)
                loose.append(node)
                if keep_unanchored:
                    anchors[node] = None

    hyperedges = [groups[l] for l in sorted(groups)]
    if keep_unanchored:
        hyperedges += [[n] for n in loose]
    return FactorMatchGraph(hyperedges, owner=view, anchors=anchors)


def simple_rotation(u1, u2, theta: float):
    """Rotation by `theta` in the plane of orthonormal `u1`, `u2`, from `u1` towards `u2`.

    Returns a function applying the rotation to a vector (or to the columns
    of a matrix) without forming the ``n x n`` matrix.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.shape != u2.shape:
        raise ValueError("u1 and u2 must have the same shape")
    if abs(u1 @ u1 - 1) > 1e-8 or abs(u2 @ u2 - 1) > 1e-8 or abs(u1 @ u2) > 1e-8:
        raise ValueError("u1 and u2 must be orthonormal")
    s, c = math.sin(theta), math.cos(theta)

    def apply(v):
        v = np.asarray(v, dtype=float)
        p1 = u1 @ v
        p2 = u2 @ v
        return v + s * (np.multiply.outer(u2, p1) - np.multiply.outer(u1, p2)) \
            + (c - 1.0) * (np.multiply.outer(u1, p1) + np.multiply.outer(u2, p2))

    return apply

"""Large-scale collective matrix factorization.

Denoise a collection of related matrices by optimal singular value
shrinkage, match factors across matrices with asymptotic singular vector
geometry and merge the per-view matches into one factor match graph.
"""
from .datamodel import EdgeKey, ObservedMatrix, ViewLayout, standardize, validate_layout
from .denoise import (
    DenoiseResult,
    asymptotic_cosine,
    asymptotic_data_sv,
    denoise_matrix,
    estimate_noise_scale,
    invert_data_sv,
    mp_median,
    shrink,
)
from .fmgraph import FactorMatchGraph, FactorNode, classify_sharing, merge_all
from .pipeline import fit
from .reconstruct import IntegrationResult, reconstruct_signal

__all__ = [
    "DenoiseResult",
    "EdgeKey",
    "FactorMatchGraph",
    "FactorNode",
    "IntegrationResult",
    "ObservedMatrix",
    "ViewLayout",
    "asymptotic_cosine",
    "asymptotic_data_sv",
    "classify_sharing",
    "denoise_matrix",
    "estimate_noise_scale",
    "fit",
    "invert_data_sv",
    "merge_all",
    "mp_median",
    "reconstruct_signal",
    "shrink",
    "standardize",
    "validate_layout",
]

__version__ = "0.1.0"

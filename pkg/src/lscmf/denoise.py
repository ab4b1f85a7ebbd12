"""Spectral denoising of a single matrix.

All formulas work in the orientation where the aspect ratio
``beta = min(m, n) / max(m, n)`` is at most one and the noise has standard
deviation ``1 / sqrt(max(m, n))``.  Vectors living in the smaller dimension
use the ``"left"`` angle formula, vectors in the larger dimension the
``"right"`` one.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg, optimize
from scipy.sparse.linalg import svds

from .errors import DegenerateInputError, DomainError, InputError

log = logging.getLogger(__name__)

#: singular values below this fraction of the largest one are treated as zero
RELATIVE_FLOOR = 1e-12
#: smaller dimension from which singular values are taken from the Gram matrix
GRAM_MIN_DIM = 1000
GRAM_RELATIVE_FLOOR = 1e-7

LEFT = "left"
RIGHT = "right"


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (0.0 < beta <= 1.0) or not math.isfinite(beta):
        raise DomainError(f"aspect ratio must lie in (0, 1], got {beta!r}")
    return beta


def aspect_ratio(n_rows: int, n_cols: int) -> float:
    """Return ``min(n_rows, n_cols) / max(n_rows, n_cols)``."""
    if n_rows <= 0 or n_cols <= 0:
        raise DomainError(f"matrix dimensions must be positive, got {n_rows}x{n_cols}")
    return min(n_rows, n_cols) / max(n_rows, n_cols)


def side_of(dim: int, other_dim: int) -> str:
    """Angle formula for singular vectors of length `dim` in a `dim` x `other_dim` matrix."""
    return LEFT if dim <= other_dim else RIGHT


def _mp_cdf(q: float, beta: float) -> float:
    lo = (1.0 - math.sqrt(beta)) ** 2
    hi = (1.0 + math.sqrt(beta)) ** 2
    if q <= lo:
        return 0.0
    if q >= hi:
        return 1.0
    # substituting t = lo + s^2 removes the square-root edge singularity,
    # and the 1/t pole at lo == 0 cancels against s^2
    span = hi - lo

    def integrand(s):
        s2 = s * s
        if s2 == 0.0:
            return math.sqrt(span) / (math.pi * beta) if lo == 0.0 else 0.0
        return s2 * math.sqrt(max(span - s2, 0.0)) / (math.pi * beta * (lo + s2))

    val, _ = integrate.quad(integrand, 0.0, math.sqrt(q - lo), epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


@lru_cache(maxsize=None)
def _mp_median_cached(beta: float) -> float:
    lo = (1.0 - math.sqrt(beta)) ** 2
    hi = (1.0 + math.sqrt(beta)) ** 2
    return optimize.bisect(lambda q: _mp_cdf(q, beta) - 0.5, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def mp_median(beta: float) -> float:
    """Median of the Marchenko-Pastur law with unit variance and ratio `beta`.

    Found by bisection on the CDF, which is evaluated by adaptive
    quadrature of the density.  Results are memoized per `beta`.
    """
    return _mp_median_cached(_check_beta(beta))


def estimate_noise_scale(values, n_rows: int, n_cols: int) -> float:
    """Estimate the entrywise noise standard deviation from singular values.

    Parameters
    ----------
    values : array_like
        All singular values of the ``n_rows x n_cols`` matrix.  Either
        orientation of the matrix may be used.
    n_rows, n_cols : int
        Shape of the matrix.

    Returns
    -------
    float
        ``median(values) / sqrt(max(n_rows, n_cols) * mp_median(beta))``.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DegenerateInputError("no singular values given")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise InputError("singular values must be finite and non-negative")
    med = float(np.median(values))
    if med <= 0.0:
        raise DegenerateInputError("median singular value is zero; cannot estimate noise scale")
    beta = aspect_ratio(n_rows, n_cols)
    n = max(n_rows, n_cols)
    return med / math.sqrt(n * mp_median(beta))


def shrink(y: float, beta: float) -> float:
    """Frobenius-optimal shrinker for a single data singular value."""
    beta = _check_beta(beta)
    if y < 0:
        raise DomainError(f"singular value must be non-negative, got {y!r}")
    if y < 1.0 + math.sqrt(beta):
        return 0.0
    # factored discriminant: exactly zero at the threshold
    edge = 1.0 + math.sqrt(beta)
    disc = (y - edge) * (y + edge) * (y * y - (1.0 - math.sqrt(beta)) ** 2)
    return math.sqrt(max(disc, 0.0)) / y


def asymptotic_data_sv(x: float, beta: float) -> float:
    """Limit of the data singular value for a signal singular value `x`."""
    beta = _check_beta(beta)
    if x <= 0:
        raise DomainError(f"signal singular value must be positive, got {x!r}")
    if x <= beta**0.25:
        return 1.0 + math.sqrt(beta)
    return math.sqrt((x + 1.0 / x) * (x + beta / x))


def asymptotic_cosine(x: float, beta: float, side: str) -> float:
    """Limit of ``|<a, u>|`` between data and signal singular vectors."""
    beta = _check_beta(beta)
    if side not in (LEFT, RIGHT):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if x <= 0:
        raise DomainError(f"signal singular value must be positive, got {x!r}")
    if x <= beta**0.25:
        return 0.0
    x2 = x * x
    x4 = x2 * x2
    denom = x4 + beta * x2 if side == LEFT else x4 + x2
    return math.sqrt((x4 - beta) / denom)


def invert_data_sv(y: float, beta: float) -> float:
    """Signal singular value whose asymptotic data singular value is `y`."""
    beta = _check_beta(beta)
    if not y > 1.0 + math.sqrt(beta):
        raise DomainError(f"data singular value {y!r} is not above the bulk edge {1.0 + math.sqrt(beta)!r}")
    t = y * y - beta - 1.0
    disc = max(t * t - 4.0 * beta, 0.0)
    return math.sqrt(0.5 * (t + math.sqrt(disc)))


@dataclass(frozen=True)
class DenoiseResult:
    """Shrinkage estimate of the signal in one (standardized) matrix.

    Only components with a strictly positive shrunk value are kept.
    `data_values` holds the raw singular values of those components and is
    what the angle estimates are computed from.
    """

    shrunk_values: np.ndarray
    data_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    noise_scale: float
    aspect: float
    n_rows: int
    n_cols: int
    notes: tuple = field(default=())

    @property
    def rank(self) -> int:
        return int(self.shrunk_values.shape[0])

    @property
    def left_side(self) -> str:
        return side_of(self.n_rows, self.n_cols)

    @property
    def right_side(self) -> str:
        return side_of(self.n_cols, self.n_rows)

    def signal(self) -> np.ndarray:
        """Denoised estimate of the signal matrix."""
        return (self.left_vectors * self.shrunk_values) @ self.right_vectors.T


def singular_values(matrix) -> np.ndarray:
    """All singular values of `matrix`, descending, with the relative floor applied.

    Matrices whose smaller side reaches `GRAM_MIN_DIM` go through the
    eigenvalues of the smaller Gram matrix, about three times faster than a
    bidiagonal SVD.  That route only resolves values down to roughly
    ``sqrt(eps)`` of the largest, so its floor is `GRAM_RELATIVE_FLOOR`.
    """
    matrix = np.asarray(matrix, dtype=float)
    m, n = matrix.shape
    if min(m, n) >= GRAM_MIN_DIM:
        gram = matrix.T @ matrix if m >= n else matrix @ matrix.T
        eig = linalg.eigvalsh(gram, check_finite=False, overwrite_a=True)
        values = np.sqrt(np.clip(eig[::-1], 0.0, None))
        floor = GRAM_RELATIVE_FLOOR
    else:
        values = linalg.svdvals(matrix, check_finite=False)
        floor = RELATIVE_FLOOR
    if values.size and values[0] > 0:
        values = np.where(values < floor * values[0], 0.0, values)
    return values


def _normalize_signs(left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # make the largest-magnitude entry of every left vector positive
    if left.shape[1] == 0:
        return left, right
    idx = np.argmax(np.abs(left), axis=0)
    signs = np.sign(left[idx, np.arange(left.shape[1])])
    signs[signs == 0] = 1.0
    return left * signs, right * signs


def truncated_svd(matrix: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Leading `k` singular triplets of `matrix`.

    Returns ``(left, values, right, used_full)`` where `used_full` reports
    whether a full decomposition was needed because `k` is too close to the
    smaller dimension for an iterative solver.
    """
    m, n = matrix.shape
    if k == 0:
        return np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)), False
    if 2 * k < min(m, n):
        # deterministic start vector keeps repeated runs bit-identical
        v0 = np.random.default_rng(0).standard_normal(min(m, n))
        u, s, vt = svds(matrix, k=k, v0=v0, tol=0, solver="arpack")
        order = np.argsort(s)[::-1]
        left, values, right = u[:, order], s[order], vt[order].T
        used_full = False
    else:
        u, s, vt = linalg.svd(matrix, full_matrices=False, check_finite=False)
        left, values, right = u[:, :k], s[:k], vt[:k].T
        used_full = True
    left, right = _normalize_signs(left, right)
    return left, values, right, used_full


def denoise_matrix(matrix, values=None) -> DenoiseResult:
    """Shrink the singular values of a standardized matrix.

    Parameters
    ----------
    matrix : array_like, shape (m, n)
        Matrix following the unit noise model, i.e. noise entries with
        standard deviation ``1 / sqrt(max(m, n))``.
    values : array_like, optional
        Precomputed singular values of `matrix`.  Skips the first pass.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise InputError(f"expected a 2-d matrix, got {matrix.ndim} dimensions")
    if not np.all(np.isfinite(matrix)):
        raise InputError("matrix contains non-finite entries")
    m, n = matrix.shape
    beta = aspect_ratio(m, n)
    if values is None:
        values = singular_values(matrix)
    else:
        values = np.asarray(values, dtype=float)

    if values.size and np.median(values) > 0:
        noise_scale = estimate_noise_scale(values, m, n)
    else:
        noise_scale = 1.0 / math.sqrt(max(m, n))

    shrunk = np.array([shrink(y, beta) for y in values])
    rank = int(np.count_nonzero(shrunk > 0))
    notes = ()
    left, top, right, used_full = truncated_svd(matrix, rank)
    if used_full:
        log.info("full SVD fallback for %dx%d matrix at rank %d", m, n, rank)
        notes = ("full_svd_fallback",)
    return DenoiseResult(
        shrunk_values=shrunk[:rank].copy(),
        data_values=values[:rank].copy(),
        left_vectors=left,
        right_vectors=right,
        noise_scale=noise_scale,
        aspect=beta,
        n_rows=m,
        n_cols=n,
        notes=notes,
    )

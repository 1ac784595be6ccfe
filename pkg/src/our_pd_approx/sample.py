"""Monte Carlo paths of y_N and y-hat^n = M y_N.

Generator contract ``philox4x64-ndtri-v1``: a numpy Philox-4x64 bit
generator keyed with ``seed + (stream << 64)`` produces raw 64-bit words;
path p of a batch consumes words [p*N, (p+1)*N). Each word w becomes the
uniform u = ((w >> 11) + 0.5) * 2**-53 in (0, 1) and the standard normal
ndtri(u). Paths are y = U diag(sqrt(lambda)) g, the square root of Sigma_N
taken from its spectral decomposition.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, ValidationError
from .spectrum import SpectrumResult
from .toeplitz import TestFunction

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

GENERATOR_ID = "philox4x64-ndtri-v1"
SEED_LIMIT = 2**64
# eigenvalues below this fraction of lambda_1 are exact zeros of the square root
RANK_TOLERANCE = 1e-12
_ROWS_PER_CHUNK = 8192


@dataclass(frozen=True, eq=False)
class PathBatch:
    """``count`` independent Gaussian windows of length N, one per row."""

    N: int
    count: int
    seed: int
    paths: FloatArray
    generator_id: str = GENERATOR_ID
    stream: int = 0

    def empirical_covariance(self) -> FloatArray:
        return np.asarray(self.paths.T @ self.paths / self.count, dtype=float)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    std_error: float

    def agrees_with(self, value: float, sigmas: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.estimate - value) <= sigmas * self.std_error + floor


@dataclass(frozen=True, eq=False)
class OrthogonalityEstimate:
    """Sample estimate of E[(y - My)(My)^T]."""

    matrix: FloatArray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.matrix)))


def standard_normals(seed: int, count: int, N: int, stream: int = 0) -> FloatArray:
    """count x N standard normals under the generator contract."""
    if not 0 <= seed < SEED_LIMIT:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}", field="seed")
    if not 0 <= stream < SEED_LIMIT:
        raise ValidationError(f"stream must be a 64-bit unsigned integer, got {stream}", field="stream")
    bit_generator = np.random.Philox(key=seed + (stream << 64))
    out = np.empty((count, N))
    # chunks consume the stream in path order, so results do not depend on chunking
    for start in range(0, count, _ROWS_PER_CHUNK):
        rows = min(_ROWS_PER_CHUNK, count - start)
        words = bit_generator.random_raw(rows * N)
        uniforms = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        out[start : start + rows] = scipy.special.ndtri(uniforms).reshape(rows, N)
    return out


def square_root(s: SpectrumResult) -> FloatArray:
    """U diag(sqrt(lambda)) with numerically null eigenvalues set to zero."""
    lam = np.array(s.eigenvalues)
    lam[lam <= RANK_TOLERANCE * max(s.top, np.finfo(float).tiny)] = 0.0
    return np.asarray(s.eigenvectors * np.sqrt(lam), dtype=float)


def sample_paths(s: SpectrumResult, count: int, seed: int, stream: int = 0) -> PathBatch:
    """Draw ``count`` windows y ~ N(0, Sigma_N)."""
    if count < 1:
        raise ValidationError(f"count must be at least 1, got {count}", field="count")
    g = standard_normals(seed, count, s.source_N, stream=stream)
    paths = g @ square_root(s).T
    paths.setflags(write=False)
    logger.debug("sampled %d paths of length %d (seed=%d, stream=%d)", count, s.source_N, seed, stream)
    return PathBatch(N=s.source_N, count=count, seed=seed, paths=paths, stream=stream)


def approximation_paths(batch: PathBatch, M: ArrayLike) -> FloatArray:
    """y-hat = M y for every path."""
    m = _check_map(batch, M)
    return np.asarray(batch.paths @ m.T, dtype=float)


def mc_weak_error(batch: PathBatch, M: ArrayLike, psi: TestFunction) -> MonteCarloEstimate:
    """Sample mean and standard error of (psi^T (I - M) y)^2."""
    m = _check_map(batch, M)
    if psi.N != batch.N:
        raise DimensionError(f"test function has length {psi.N}, paths have N={batch.N}")
    direction = psi.coefficients - m.T @ psi.coefficients
    values = (batch.paths @ direction) ** 2
    estimate = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(batch.count)) if batch.count > 1 else math.inf
    return MonteCarloEstimate(estimate=estimate, std_error=std_error)


def mc_orthogonality(batch: PathBatch, M: ArrayLike) -> OrthogonalityEstimate:
    """Sample mean of (y - My)(My)^T; vanishes at the Monte Carlo rate for the optimal M."""
    m = _check_map(batch, M)
    fitted = batch.paths @ m.T
    residual = batch.paths - fitted
    return OrthogonalityEstimate(matrix=np.asarray(residual.T @ fitted / batch.count, dtype=float))


def subspace_singular_ratio(paths: ArrayLike, n: int) -> float:
    """(n+1)-th singular value of a path matrix relative to its largest."""
    singular = scipy.linalg.svdvals(np.asarray(paths, dtype=float))
    if n >= singular.size or singular[0] == 0.0:
        return 0.0
    return float(singular[n] / singular[0])


def _check_map(batch: PathBatch, M: ArrayLike) -> FloatArray:
    m = np.asarray(M, dtype=float)
    if m.shape != (batch.N, batch.N):
        raise DimensionError(f"map has shape {m.shape}, paths have N={batch.N}")
    return m

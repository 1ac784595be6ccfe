"""Optimal rank-n linear approximation of a random window.

Among all M of rank n, E||y - My||^2 is minimized by the projector onto the
first n eigenvectors of Sigma_N, M = U_n U_n^T, and the minimum equals
lambda_{n+1} + ... + lambda_N. The factor W = U_n Q_n is free up to an
orthogonal Q_n; we always take Q_n = I since M and the rank-n covariance do
not depend on it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, ValidationError
from .spectrum import SpectrumResult

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

DEGENERACY_TOLERANCE = 1e-10
CERTIFICATE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class RankNApproximation:
    """Solution of the rank-n approximation problem for one window length."""

    n: int
    M: FloatArray
    Un: FloatArray
    lambdas_kept: FloatArray
    sigma_hat: FloatArray
    error: float
    degenerate_cut: bool = False

    @property
    def N(self) -> int:
        return int(self.M.shape[0])

    @property
    def weighted_basis(self) -> FloatArray:
        """U_n diag(sqrt(lambda_1), ..., sqrt(lambda_n)); rows are indexed by time."""
        return np.asarray(self.Un * np.sqrt(self.lambdas_kept), dtype=float)


@dataclass(frozen=True)
class ProjectionCertificate:
    """Numerical residuals of the projection structure of a candidate M."""

    symmetry: float
    idempotency: float
    orthogonality: float
    trace: float
    rank: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.symmetry, self.idempotency, self.orthogonality) <= self.tolerance

    @property
    def flagged(self) -> bool:
        return not self.passed

    def to_dict(self) -> dict[str, float | int | bool]:
        return {
            "symmetry": self.symmetry,
            "idempotency": self.idempotency,
            "orthogonality": self.orthogonality,
            "trace": self.trace,
            "rank": self.rank,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def optimal_approximator(s: SpectrumResult, n: int) -> RankNApproximation:
    """Principal-component approximator of rank n."""
    N = s.source_N
    if not 1 <= n <= N:
        raise ValidationError(f"rank n={n} out of range 1..{N}", field="n")
    Un = np.ascontiguousarray(s.eigenvectors[:, :n])
    kept = np.array(s.eigenvalues[:n])
    M = Un @ Un.T
    M = 0.5 * (M + M.T)
    sigma_hat = (Un * kept) @ Un.T
    sigma_hat = 0.5 * (sigma_hat + sigma_hat.T)
    error = s.tail_sum(n)

    degenerate = False
    if n < N:
        gap = float(s.eigenvalues[n - 1] - s.eigenvalues[n])
        if gap <= DEGENERACY_TOLERANCE * max(s.top, 1.0):
            degenerate = True
            logger.warning(
                "degenerate cut at n=%d: lambda_n=%.6g equals lambda_{n+1}; the optimal subspace is not unique",
                n,
                s.eigenvalues[n - 1],
            )

    for array in (Un, kept, M, sigma_hat):
        array.setflags(write=False)
    return RankNApproximation(
        n=n, M=M, Un=Un, lambdas_kept=kept, sigma_hat=sigma_hat, error=error, degenerate_cut=degenerate
    )


def approximation_error_of(T: ArrayLike, M: ArrayLike) -> float:
    """E||y - My||^2 = tr((I - M) T (I - M)^T) for any candidate M."""
    cov = np.asarray(T, dtype=float)
    m = np.asarray(M, dtype=float)
    if cov.ndim != 2 or cov.shape != m.shape or cov.shape[0] != cov.shape[1]:
        raise DimensionError(f"shape mismatch {cov.shape} vs {m.shape}")
    residual = np.eye(cov.shape[0]) - m
    value = float(np.trace(residual @ cov @ residual.T))
    return max(value, 0.0)


def projection_certificate(approx: RankNApproximation, s: SpectrumResult) -> ProjectionCertificate:
    """Residuals of symmetry, idempotency and M Sigma - M Sigma M^T = 0 for approx.M."""
    if approx.N != s.source_N:
        raise DimensionError(f"approximation has N={approx.N}, spectrum has N={s.source_N}")
    return certify_map(approx.M, s)


def certify_map(M: ArrayLike, s: SpectrumResult) -> ProjectionCertificate:
    """Projection certificate for an arbitrary candidate map M."""
    m = np.asarray(M, dtype=float)
    if m.shape != (s.source_N, s.source_N):
        raise DimensionError(f"map has shape {m.shape}, spectrum has N={s.source_N}")
    sigma = s.reconstruct()
    scale = max(float(np.linalg.norm(sigma, "fro")), 1.0)
    m_sigma = m @ sigma
    trace = float(np.trace(m))
    return ProjectionCertificate(
        symmetry=float(np.linalg.norm(m - m.T, "fro")),
        idempotency=float(np.linalg.norm(m - m @ m, "fro")),
        orthogonality=float(np.linalg.norm(m_sigma - m_sigma @ m.T, "fro")),
        trace=trace,
        rank=round(trace),
        tolerance=CERTIFICATE_TOLERANCE * scale,
    )


def random_rank_n_map(N: int, n: int, rng: np.random.Generator) -> FloatArray:
    """Competitor M = XY with X: N x n and Y: n x N standard normal."""
    if not 1 <= n <= N:
        raise ValidationError(f"rank n={n} out of range 1..{N}", field="n")
    return np.asarray(rng.standard_normal((N, n)) @ rng.standard_normal((n, N)), dtype=float)


def random_projection(N: int, n: int, rng: np.random.Generator) -> FloatArray:
    """Orthogonal projector onto a uniformly random n-dimensional subspace."""
    if not 1 <= n <= N:
        raise ValidationError(f"rank n={n} out of range 1..{N}", field="n")
    q, _ = np.linalg.qr(rng.standard_normal((N, n)))
    return np.asarray(q @ q.T, dtype=float)

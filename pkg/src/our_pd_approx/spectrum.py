"""Spectral decomposition of Toeplitz truncations.

Eigenvalues come out in descending order with a fixed eigenvector sign
convention (largest-magnitude entry positive, ties to the lowest index), so
identical input always yields identical output. Within a degenerate cluster
the basis is solver-dependent; only projectors and eigenvalues are
meaningful there.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

import numba
import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import ConvergenceError, ValidationError
from .model import CovarianceSequence
from .toeplitz import ToeplitzTruncation, truncate

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

DIMENSION_CAP = 4096
JACOBI_DIMENSION_CAP = 512
PSD_TOLERANCE = 1e-10
WEYL_TOLERANCE = 1e-10


class Eigensolver(StrEnum):
    LAPACK = "lapack"
    JACOBI = "jacobi"


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Eigenvalues lambda_1 >= ... >= lambda_N with orthonormal eigenvectors as columns."""

    eigenvalues: FloatArray
    eigenvectors: FloatArray
    source_N: int

    @property
    def N(self) -> int:
        return self.source_N

    @property
    def top(self) -> float:
        return float(self.eigenvalues[0])

    def reconstruct(self) -> FloatArray:
        """U diag(lambda) U^T."""
        u = self.eigenvectors
        return np.asarray((u * self.eigenvalues) @ u.T, dtype=float)

    def tail_sum(self, n: int) -> float:
        """lambda_{n+1} + ... + lambda_N."""
        return float(self.eigenvalues[n:].sum())

    def orthonormality_residual(self) -> float:
        u = self.eigenvectors
        return float(np.max(np.abs(u.T @ u - np.eye(self.source_N))))


@dataclass(frozen=True)
class WeylTrack:
    """k-th eigenvalue of Sigma_N as N grows; its limit is the k-th eigenvalue of Sigma."""

    k: int
    Ns: tuple[int, ...]
    values: tuple[float, ...]
    monotone: bool
    max_violation: float

    @property
    def limit_estimate(self) -> float:
        return self.values[-1]


def eigendecompose(
    T: ToeplitzTruncation | ArrayLike,
    tol: float = 1e-12,
    method: Eigensolver | str = Eigensolver.LAPACK,
    psd: bool = True,
    max_dimension: int = DIMENSION_CAP,
    max_sweeps: int = 64,
) -> SpectrumResult:
    """Full spectral decomposition of a symmetric (by default PSD) matrix.

    Negative round-off eigenvalues of a PSD input are clamped to zero once
    they pass the tolerance check.
    """
    matrix = np.array(T.dense if isinstance(T, ToeplitzTruncation) else T, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {matrix.shape}", field="T")
    n = matrix.shape[0]
    if n > max_dimension:
        raise ValidationError(f"N={n} exceeds the configured cap of {max_dimension}", field="N")
    if not np.all(np.isfinite(matrix)):
        raise ValidationError("matrix contains NaN or Inf", field="T")
    asymmetry = float(np.max(np.abs(matrix - matrix.T)))
    if asymmetry > tol * max(1.0, float(np.max(np.abs(matrix)))):
        raise ValidationError(f"matrix is not symmetric (max asymmetry {asymmetry:.3g})", field="T")
    matrix = 0.5 * (matrix + matrix.T)

    if Eigensolver(method) is Eigensolver.JACOBI:
        if n > JACOBI_DIMENSION_CAP:
            raise ValidationError(f"jacobi solver is limited to N <= {JACOBI_DIMENSION_CAP}, got N={n}", field="N")
        values, vectors = _cyclic_jacobi(matrix, max_sweeps)
    else:
        values, vectors = scipy.linalg.eigh(matrix)

    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = _fix_signs(vectors[:, order])

    if psd:
        floor = -PSD_TOLERANCE * max(float(values[0]), 1.0)
        if values[-1] < floor:
            raise ValidationError(
                f"matrix is not positive semidefinite (smallest eigenvalue {values[-1]!r})", field="T"
            )
        values = np.maximum(values, 0.0)

    values.setflags(write=False)
    vectors.setflags(write=False)
    logger.debug("eigendecompose N=%d method=%s top=%.6g", n, method, values[0])
    return SpectrumResult(eigenvalues=values, eigenvectors=vectors, source_N=n)


def weyl_track(
    cov: CovarianceSequence,
    Ns: Sequence[int],
    k: int,
    method: Eigensolver | str = Eigensolver.LAPACK,
) -> WeylTrack:
    """k-th largest eigenvalue of Sigma_N for each N, with a monotonicity report."""
    sizes = tuple(int(N) for N in Ns)
    if not sizes:
        raise ValidationError("need at least one window length", field="Ns")
    if any(b <= a for a, b in zip(sizes[:-1], sizes[1:], strict=False)):
        raise ValidationError("window lengths must be strictly increasing", field="Ns")
    if not 1 <= k <= sizes[0]:
        raise ValidationError(f"k={k} out of range 1..{sizes[0]}", field="k")
    if sizes[-1] > cov.tau_max + 1:
        raise ValidationError(f"N={sizes[-1]} needs tau_max >= {sizes[-1] - 1}", field="Ns")

    values = tuple(eigendecompose(truncate(cov, N), method=method).eigenvalues[k - 1].item() for N in sizes)
    worst = 0.0
    for previous, current in zip(values[:-1], values[1:], strict=False):
        allowed = WEYL_TOLERANCE * max(current, 1.0)
        worst = max(worst, previous - current - allowed)
    monotone = worst <= 0.0
    if not monotone:
        logger.warning("Weyl monotonicity violated for k=%d by %.3g", k, worst)
    return WeylTrack(k=k, Ns=sizes, values=values, monotone=monotone, max_violation=max(worst, 0.0))


def effective_rank(s: SpectrumResult, rel_threshold: float) -> int:
    """Number of eigenvalues above ``rel_threshold * lambda_1``."""
    if not 0 < rel_threshold < 1:
        raise ValidationError(f"threshold must lie in (0, 1), got {rel_threshold!r}", field="rel_threshold")
    return int(np.count_nonzero(s.eigenvalues > rel_threshold * s.top))


def _fix_signs(vectors: FloatArray) -> FloatArray:
    # argmax returns the first index among ties
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivots, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
    return np.ascontiguousarray(vectors * signs)


def _off_diagonal_norm(a: FloatArray) -> float:
    return math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))


def _cyclic_jacobi(matrix: FloatArray, max_sweeps: int) -> tuple[FloatArray, FloatArray]:
    a = np.array(matrix, dtype=np.float64, order="C")
    v = np.eye(a.shape[0])
    threshold = 1e-14 * float(np.linalg.norm(a, "fro"))
    sweeps = _jacobi_sweeps(a, v, threshold, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError(max_sweeps, _off_diagonal_norm(a))
    logger.debug("jacobi converged after %d sweeps", sweeps)
    return np.diag(a).copy(), v


@numba.njit(cache=True)
def _jacobi_sweeps(a: FloatArray, v: FloatArray, threshold: float, max_sweeps: int) -> int:  # pragma: no cover
    # in place; returns the number of full sweeps, -1 if rotations remain
    n = a.shape[0]
    for sweep in range(max_sweeps):
        rotated = False
        # row-major (p, q) order, p < q
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= threshold:
                    continue
                rotated = True
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
        if not rotated:
            return sweep
    return -1

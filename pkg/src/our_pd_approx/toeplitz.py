"""Toeplitz truncations Sigma_N and quadratic forms against test functions."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, LengthError, ValidationError
from .model import CovarianceSequence

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class ToeplitzTruncation:
    """Covariance of the window y(t), ..., y(t+N-1).

    By stationarity the window position does not enter; only the first row
    sigma(0..N-1) is stored and the dense matrix is built on first access.
    """

    N: int
    first_row: FloatArray

    def __post_init__(self) -> None:
        row = np.array(self.first_row, dtype=float)
        if self.N < 1 or row.shape != (self.N,):
            raise ValidationError(f"first row must have length N={self.N}", field="first_row")
        row.setflags(write=False)
        object.__setattr__(self, "first_row", row)

    @cached_property
    def dense(self) -> FloatArray:
        matrix = scipy.linalg.toeplitz(self.first_row)
        matrix.setflags(write=False)
        return matrix

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N, self.N)

    @property
    def trace(self) -> float:
        return float(self.N * self.first_row[0])


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Finitely supported test sequence psi = a^T X_I with I = [t, t+N)."""

    __test__ = False  # keep pytest from collecting this class

    coefficients: FloatArray
    support_offset: int = 0

    def __post_init__(self) -> None:
        coeffs = np.array(self.coefficients, dtype=float)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValidationError("coefficients must be a non-empty 1-D array", field="coefficients")
        if not np.all(np.isfinite(coeffs)):
            raise ValidationError("coefficients contain NaN or Inf", field="coefficients")
        if not np.any(coeffs != 0):
            raise ValidationError("test function needs a nonzero coefficient", field="coefficients")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def N(self) -> int:
        return int(self.coefficients.size)

    @property
    def norm_squared(self) -> float:
        return float(self.coefficients @ self.coefficients)

    def shifted(self, offset: int) -> TestFunction:
        return TestFunction(self.coefficients, support_offset=offset)

    def transform(self, omega: ArrayLike) -> NDArray[np.complex128]:
        """psi_hat(e^{i omega}) = sum_k a_k e^{i omega (t + k)} for support [t, t + N)."""
        grid = np.atleast_1d(np.asarray(omega, dtype=float))
        k = self.support_offset + np.arange(self.N, dtype=float)
        return np.asarray(np.exp(1j * np.outer(grid, k)) @ self.coefficients)

    def power(self, omega: ArrayLike) -> FloatArray:
        """|psi_hat(e^{i omega})|^2."""
        values = self.transform(omega)
        return np.asarray(values.real**2 + values.imag**2, dtype=float)


def truncate(cov: CovarianceSequence, N: int) -> ToeplitzTruncation:
    """N x N Toeplitz truncation of the covariance operator."""
    if N < 1:
        raise ValidationError(f"window length must be at least 1, got {N}", field="N")
    if cov.tau_max < N - 1:
        raise LengthError(required_tau_max=N - 1, available_tau_max=cov.tau_max)
    return ToeplitzTruncation(N=N, first_row=cov.values[:N])


def quadratic_form(T: ToeplitzTruncation | ArrayLike, psi: TestFunction) -> float:
    """a^T T a for a Toeplitz truncation or any dense symmetric matrix."""
    a = psi.coefficients
    if isinstance(T, ToeplitzTruncation):
        if T.N != a.size:
            raise DimensionError(f"test function has length {a.size}, truncation has N={T.N}")
        # sum_tau sigma(tau) r(tau) with r the autocorrelation of a
        r = np.correlate(a, a, mode="full")[a.size - 1 :]
        return float(T.first_row[0] * r[0] + 2.0 * (T.first_row[1:] @ r[1:]))
    matrix = np.asarray(T, dtype=float)
    if matrix.shape != (a.size, a.size):
        raise DimensionError(f"test function has length {a.size}, matrix has shape {matrix.shape}")
    return float(a @ matrix @ a)


def frobenius_distance(a: ArrayLike, b: ArrayLike) -> float:
    left = np.asarray(a, dtype=float)
    right = np.asarray(b, dtype=float)
    if left.shape != right.shape:
        raise DimensionError(f"shape mismatch {left.shape} vs {right.shape}")
    return float(np.linalg.norm(left - right, "fro"))


def toeplitzify(matrix: ArrayLike) -> FloatArray:
    """Nearest symmetric Toeplitz matrix in Frobenius norm (diagonal averaging)."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    row = np.array([0.5 * (np.diagonal(m, tau).mean() + np.diagonal(m, -tau).mean()) for tau in range(n)])
    return np.asarray(scipy.linalg.toeplitz(row), dtype=float)


def toeplitz_defect(matrix: ArrayLike) -> float:
    """||M - toeplitzify(M)||_F / ||M||_F; zero for the zero matrix."""
    m = np.asarray(matrix, dtype=float)
    scale = float(np.linalg.norm(m, "fro"))
    if scale == 0.0:
        return 0.0
    return frobenius_distance(m, toeplitzify(m)) / scale


def export_dense_csv(matrix: ToeplitzTruncation | ArrayLike, path: str | Path, comment: str | None = None) -> Path:
    """Write a dense matrix, one row per line."""
    dense = matrix.dense if isinstance(matrix, ToeplitzTruncation) else np.asarray(matrix, dtype=float)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        for row in dense:
            writer.writerow([repr(float(value)) for value in row])
    logger.debug("wrote %dx%d matrix to %s", dense.shape[0], dense.shape[1], path)
    return target

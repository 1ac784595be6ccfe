"""Stationary extension of a rank-n approximation.

A purely deterministic process of rank n is generated by

    xi(t+1) = A xi(t),    z(t) = c xi(t)

with A orthogonal and (A, c) observable. Given the weighted principal basis
B = U_n diag(sqrt(lambda)) of a window, the shift relation B[1:] = B[:-1] A
is solved in least squares and A is replaced by its nearest orthogonal
matrix. With P = I the model reproduces Sigma-hat exactly whenever the
window came from a line spectrum; otherwise the least-squares residual of
the shift relation measures how far the rank-n covariance is from
stationarity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .errors import ConditioningError, DegenerateBasisError, ValidationError
from .model import FREQUENCY_RESOLUTION, CovarianceSequence
from .pca import RankNApproximation
from .toeplitz import toeplitz_defect

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

RANK_TOLERANCE = 1e-12
ORTHOGONALITY_TOLERANCE = 1e-10
OBSERVABILITY_TOLERANCE = 1e-8
CONDITIONING_FLOOR = 1e-12


@dataclass(frozen=True)
class RealizationDiagnostics:
    orthogonality: float
    observability_sv: float
    stationarity: float
    shift_residual: float
    state_min_eigenvalue: float

    def to_dict(self) -> dict[str, float]:
        return {
            "orthogonality_residual": self.orthogonality,
            "observability_sv": self.observability_sv,
            "stationarity_residual": self.stationarity,
            "shift_residual": self.shift_residual,
            "state_min_eigenvalue": self.state_min_eigenvalue,
        }


@dataclass(frozen=True, eq=False)
class StateSpaceRealization:
    """Orthogonal state-space model (A, c, P) of a rank-n stationary process."""

    A: FloatArray
    c: FloatArray
    P: FloatArray
    basis_N: int
    shift_residual: float = 0.0

    @property
    def n(self) -> int:
        return int(self.A.shape[0])

    def observability_matrix(self, rows_count: int | None = None) -> FloatArray:
        """Rows c A^k for k < rows_count, by default the window length."""
        rows = [self.c]
        for _ in range((rows_count or self.basis_N) - 1):
            rows.append(rows[-1] @ self.A)
        return np.vstack(rows)

    def diagnostics(self) -> RealizationDiagnostics:
        identity = np.eye(self.n)
        return RealizationDiagnostics(
            orthogonality=float(np.linalg.norm(self.A.T @ self.A - identity, "fro")),
            observability_sv=float(scipy.linalg.svdvals(self.observability_matrix())[-1]),
            stationarity=float(np.linalg.norm(self.A @ self.P @ self.A.T - self.P, "fro")),
            shift_residual=self.shift_residual,
            state_min_eigenvalue=float(np.linalg.eigvalsh(self.P)[0]),
        )


@dataclass(frozen=True)
class LineSpectrum:
    """Finite sum of Dirac pulses: (frequency in [0, pi], power) pairs, ascending in frequency."""

    lines: tuple[tuple[float, float], ...]

    @property
    def frequencies(self) -> FloatArray:
        return np.array([theta for theta, _ in self.lines])

    @property
    def powers(self) -> FloatArray:
        return np.array([power for _, power in self.lines])

    @property
    def total_power(self) -> float:
        return float(self.powers.sum())

    def covariance(self, tau: int) -> float:
        return float(self.powers @ np.cos(self.frequencies * abs(tau)))


def stationary_extension(approx: RankNApproximation) -> StateSpaceRealization:
    """Build the orthogonal realization of the rank-n principal-component process."""
    n, N = approx.n, approx.N
    if N < n + 1:
        raise ValidationError(f"window length N={N} cannot support a shift of rank n={n}; need N >= n + 1", field="N")
    lam = approx.lambdas_kept
    if lam[-1] <= RANK_TOLERANCE * max(float(lam[0]), np.finfo(float).tiny):
        raise DegenerateBasisError(
            f"lambda_{n}={lam[-1]!r} is numerically zero; the window supports fewer than {n} oscillations"
        )

    basis = approx.weighted_basis
    head, tail = basis[:-1], basis[1:]
    shift, _, rank, _ = scipy.linalg.lstsq(head, tail)
    if rank < n:
        raise DegenerateBasisError(f"shift equations have rank {rank} < n={n}")

    singular = scipy.linalg.svdvals(shift)
    if singular[-1] < CONDITIONING_FLOOR * max(float(singular[0]), 1.0):
        raise ConditioningError(f"shift operator is singular (smallest singular value {singular[-1]!r})")
    A, _ = scipy.linalg.polar(shift)
    A = np.asarray(A, dtype=float)

    c = np.array(basis[0], dtype=float)
    P = np.eye(n)
    scale = max(float(np.linalg.norm(basis, "fro")), np.finfo(float).tiny)
    shift_residual = float(np.linalg.norm(head @ A - tail, "fro")) / scale
    for array in (A, c, P):
        array.setflags(write=False)
    realization = StateSpaceRealization(A=A, c=c, P=P, basis_N=N, shift_residual=shift_residual)

    diagnostics = realization.diagnostics()
    if diagnostics.orthogonality > ORTHOGONALITY_TOLERANCE:
        raise ConditioningError(f"polar factor is not orthogonal (residual {diagnostics.orthogonality!r})")
    c_norm = float(np.linalg.norm(c))
    if c_norm <= RANK_TOLERANCE * scale:
        raise DegenerateBasisError("readout c vanishes; the pair (A, c) is not observable")
    # N rows instead of n: same rank, but the scale follows sqrt(lambda) rather than the clustering of eig(A)
    top_sv = float(scipy.linalg.norm(realization.observability_matrix(), 2))
    if diagnostics.observability_sv <= RANK_TOLERANCE * top_sv:
        raise DegenerateBasisError(
            f"pair (A, c) is not observable (singular values {diagnostics.observability_sv!r} of {top_sv!r})"
        )
    if diagnostics.observability_sv <= OBSERVABILITY_TOLERANCE * top_sv:
        logger.warning(
            "weakly observable realization N=%d n=%d: smallest singular value %.3g of %.3g",
            N,
            n,
            diagnostics.observability_sv,
            top_sv,
        )
    logger.debug("stationary_extension N=%d n=%d shift_residual=%.3g", N, n, shift_residual)
    return realization


def line_spectrum(r: StateSpaceRealization) -> LineSpectrum:
    """Dirac line spectrum of the realized process.

    The real Schur form of an orthogonal A is block diagonal with 2x2
    rotation blocks and +/-1 entries; each block is one line whose power is
    c_J P_JJ c_J^T in the Schur basis.
    """
    T, Z = scipy.linalg.schur(r.A, output="real")
    c = r.c @ Z
    P = Z.T @ r.P @ Z
    raw: list[tuple[float, float]] = []
    j = 0
    while j < r.n:
        if j + 1 < r.n and T[j + 1, j] != 0.0:
            half_trace = 0.5 * (T[j, j] + T[j + 1, j + 1])
            rotation = math.sqrt(abs(T[j, j + 1] * T[j + 1, j]))
            theta = math.atan2(rotation, half_trace)
            block = slice(j, j + 2)
            j += 2
        else:
            theta = 0.0 if T[j, j] >= 0 else math.pi
            block = slice(j, j + 1)
            j += 1
        power = float(c[block] @ P[block, block] @ c[block])
        raw.append((min(max(theta, 0.0), math.pi), power))

    raw.sort()
    merged: list[tuple[float, float]] = []
    for theta, power in raw:
        if merged and theta - merged[-1][0] <= FREQUENCY_RESOLUTION:
            merged[-1] = (merged[-1][0], merged[-1][1] + power)
        else:
            merged.append((theta, power))
    return LineSpectrum(lines=tuple(merged))


def extend_covariance(r: StateSpaceRealization, tau: int) -> float:
    """sigma-hat(tau) = c A^tau P c^T."""
    power = np.linalg.matrix_power(r.A, abs(int(tau)))
    return float(r.c @ power @ r.P @ r.c)


def extend_covariance_sequence(r: StateSpaceRealization, tau_max: int) -> CovarianceSequence:
    """sigma-hat(0..tau_max) by repeated multiplication with A."""
    if tau_max < 0:
        raise ValidationError(f"tau_max must be nonnegative, got {tau_max}", field="tau_max")
    state = r.P @ r.c
    values = np.empty(tau_max + 1)
    for tau in range(tau_max + 1):
        values[tau] = r.c @ state
        state = r.A @ state
    return CovarianceSequence(values)


def realization_report(approx: RankNApproximation, r: StateSpaceRealization) -> dict[str, Any]:
    """Lines, invariant residuals and the Toeplitz defect of Sigma-hat."""
    lines = line_spectrum(r)
    diagnostics = r.diagnostics()
    return {
        "n": r.n,
        "N": r.basis_N,
        "frequencies": [theta for theta, _ in lines.lines],
        "powers": [power for _, power in lines.lines],
        "toeplitz_defect": toeplitz_defect(approx.sigma_hat),
        **diagnostics.to_dict(),
    }

"""Weak convergence of the rank-n approximations.

For a test function psi supported on a window of length N the gap

    psi^T (Sigma_N - Sigma-hat^n_N) psi = E[psi^T (y - y-hat^n)]^2

is nonnegative, nonincreasing in n and zero at n = N. In the frequency
domain the same quadratic forms are integrals of |psi_hat|^2 against the
symbol and against the line spectrum of the realized process.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .errors import AccuracyError, DimensionError, ValidationError
from .model import CovarianceSequence, QuadratureSpec, Symbol, half_circle_integral
from .pca import optimal_approximator
from .realize import LineSpectrum, line_spectrum, stationary_extension
from .spectrum import SpectrumResult, eigendecompose
from .toeplitz import TestFunction, quadratic_form, toeplitz_defect, truncate

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

GAP_TOLERANCE = 1e-9
# named test functions ahead of the seeded random ones in psi_bank
FIXED_BANK_SIZE = 6
ROUNDOFF = 1e-13


@dataclass(frozen=True, eq=False)
class ConvergenceCurve:
    """Gaps psi^T (Sigma_N - Sigma-hat^n_N) psi for n = 1..N at fixed N and psi."""

    N: int
    psi: TestFunction
    entries: tuple[tuple[int, float], ...]
    sigma_qf: float
    # lambda_1 * ||psi||^2, bounds the rounding error of the spectral gap sums
    scale: float = 0.0

    @property
    def gaps(self) -> FloatArray:
        return np.array([gap for _, gap in self.entries])

    @property
    def tolerance(self) -> float:
        return GAP_TOLERANCE * self.sigma_qf + ROUNDOFF * self.scale

    def violations(self) -> list[str]:
        """Invariant violations, empty when the curve is well formed."""
        problems: list[str] = []
        gaps = self.gaps
        tol = self.tolerance
        if np.any(gaps < -tol):
            problems.append(f"negative gap {float(gaps.min())!r}")
        increases = np.diff(np.concatenate(([self.sigma_qf], gaps)))
        if np.any(increases > tol):
            problems.append(f"gap increases by {float(increases.max())!r}")
        if gaps[-1] > tol:
            problems.append(f"gap at n=N is {float(gaps[-1])!r}")
        return problems

    def first_below(self, level: float) -> int | None:
        """Smallest n whose gap is below ``level``."""
        for n, gap in self.entries:
            if gap < level:
                return n
        return None


@dataclass(frozen=True)
class WeakConvergenceReport:
    """Time- and frequency-domain quadratic forms for one (N, n, psi)."""

    N: int
    n: int
    sigma_qf: float
    sigma_qf_freq: float | None
    sigmahat_qf: float
    sigmahat_qf_freq: float | None
    gap: float
    toeplitz_defect: float

    @property
    def sigma_residual(self) -> float | None:
        if self.sigma_qf_freq is None:
            return None
        return abs(self.sigma_qf - self.sigma_qf_freq)

    @property
    def sigmahat_residual(self) -> float | None:
        if self.sigmahat_qf_freq is None:
            return None
        return abs(self.sigmahat_qf - self.sigmahat_qf_freq)

    def to_dict(self) -> dict[str, Any]:
        return {
            "N": self.N,
            "n": self.n,
            "sigma_qf": self.sigma_qf,
            "sigma_qf_freq": self.sigma_qf_freq,
            "sigmahat_qf": self.sigmahat_qf,
            "sigmahat_qf_freq": self.sigmahat_qf_freq,
            "gap": self.gap,
            "sigma_residual": self.sigma_residual,
            "sigmahat_residual": self.sigmahat_residual,
            "toeplitz_defect": self.toeplitz_defect,
        }


def weak_gap(
    cov: CovarianceSequence,
    N: int,
    n: int,
    psi: TestFunction,
    spectrum: SpectrumResult | None = None,
) -> float:
    """psi^T (Sigma_N - Sigma-hat^n_N) psi, cross-checked against E[psi^T (I - M) y]^2."""
    _check_window(N, psi)
    T = truncate(cov, N)
    s = spectrum if spectrum is not None else eigendecompose(T)
    approx = optimal_approximator(s, n)
    difference = quadratic_form(T, psi) - quadratic_form(approx.sigma_hat, psi)
    error_form = float(_tail_gaps(s, psi)[n])
    scale = s.top * psi.norm_squared
    if abs(difference - error_form) > GAP_TOLERANCE * max(scale, np.finfo(float).tiny):
        raise AccuracyError(
            f"gap forms disagree at N={N}, n={n}: {difference!r} vs {error_form!r}",
            abs(difference - error_form),
        )
    return error_form


def convergence_sweep(
    cov: CovarianceSequence,
    N: int,
    psi: TestFunction,
    spectrum: SpectrumResult | None = None,
) -> ConvergenceCurve:
    """Gap curve for n = 1..N from a single eigendecomposition."""
    _check_window(N, psi)
    T = truncate(cov, N)
    s = spectrum if spectrum is not None else eigendecompose(T)
    tails = _tail_gaps(s, psi)
    curve = ConvergenceCurve(
        N=N,
        psi=psi,
        entries=tuple((n, float(tails[n])) for n in range(1, N + 1)),
        sigma_qf=quadratic_form(T, psi),
        scale=s.top * psi.norm_squared,
    )
    problems = curve.violations()
    if problems:
        logger.warning("convergence curve N=%d violates its invariants: %s", N, "; ".join(problems))
    return curve


def spectral_quadratic_form(
    phi: Symbol | LineSpectrum,
    psi: TestFunction,
    quad: QuadratureSpec | None = None,
) -> float:
    """(1/2pi) int |psi_hat(e^{i w})|^2 phi(e^{i w}) dw.

    Line spectra reduce to sum_k p_k |psi_hat(e^{i theta_k})|^2.
    """
    if isinstance(phi, LineSpectrum):
        return float(phi.powers @ psi.power(phi.frequencies))
    if phi.is_line_spectral:
        frequencies = np.array([theta for theta, _ in phi.lines])
        powers = phi.scale * np.array([power for _, power in phi.lines])
        return float(powers @ psi.power(frequencies))

    quad = quad or QuadratureSpec()

    def integrand(theta: FloatArray) -> FloatArray:
        return (phi.evaluate(theta) * psi.power(theta))[None, :]

    value, _ = half_circle_integral(integrand, phi.half_circle_breakpoints(), quad, bandwidth=float(psi.N - 1))
    return max(float(value[0]) / math.pi, 0.0)


def wconv_report(
    cov: CovarianceSequence,
    symbol: Symbol | None,
    N: int,
    n: int,
    psi: TestFunction,
    quad: QuadratureSpec | None = None,
    spectrum: SpectrumResult | None = None,
    lines: LineSpectrum | None = None,
    extend: bool = True,
) -> WeakConvergenceReport:
    """Compare psi^T Sigma psi and psi^T Sigma-hat psi in time and frequency.

    The frequency-domain value for Sigma-hat uses the line spectrum of the
    stationary extension, either passed in as ``lines`` or built here when
    ``extend`` is set. At n = N no extension exists (the shift needs
    N >= n + 1) and that entry is None. Without a symbol the symbol-side
    frequency value is None as well.
    """
    _check_window(N, psi)
    T = truncate(cov, N)
    s = spectrum if spectrum is not None else eigendecompose(T)
    approx = optimal_approximator(s, n)
    sigma_qf = quadratic_form(T, psi)
    sigma_qf_freq = spectral_quadratic_form(symbol, psi, quad) if symbol is not None else None
    sigmahat_qf = quadratic_form(approx.sigma_hat, psi)
    sigmahat_qf_freq = None
    if lines is not None:
        sigmahat_qf_freq = spectral_quadratic_form(lines, psi)
    elif extend and n < N:
        realization = stationary_extension(approx)
        sigmahat_qf_freq = spectral_quadratic_form(line_spectrum(realization), psi)
    return WeakConvergenceReport(
        N=N,
        n=n,
        sigma_qf=sigma_qf,
        sigma_qf_freq=sigma_qf_freq,
        sigmahat_qf=sigmahat_qf,
        sigmahat_qf_freq=sigmahat_qf_freq,
        gap=weak_gap(cov, N, n, psi, spectrum=s),
        toeplitz_defect=toeplitz_defect(approx.sigma_hat),
    )


def psi_bank(N: int, size: int = 20, seed: int = 0) -> list[tuple[str, TestFunction]]:
    """Named test functions: canonical vectors, boxcar, alternating, Gaussian window, seeded random."""
    if N < 1:
        raise ValidationError(f"window length must be at least 1, got {N}", field="N")
    if size < 1:
        raise ValidationError(f"bank size must be at least 1, got {size}", field="size")
    k = np.arange(N, dtype=float)
    centre = 0.5 * (N - 1)
    width = max(N / 6.0, 0.5)
    fixed: list[tuple[str, FloatArray]] = [
        ("e1", _unit(N, 0)),
        ("boxcar", np.ones(N)),
        ("alternating", np.where(np.arange(N) % 2 == 0, 1.0, -1.0)),
        ("gauss", np.exp(-0.5 * ((k - centre) / width) ** 2)),
        ("e_mid", _unit(N, N // 2)),
        ("e_last", _unit(N, N - 1)),
    ]
    bank = [(name, TestFunction(coeffs)) for name, coeffs in fixed[:size]]
    rng = np.random.default_rng(seed)
    index = 0
    while len(bank) < size:
        bank.append((f"random{index}", TestFunction(rng.standard_normal(N))))
        index += 1
    return bank


def _unit(N: int, index: int) -> FloatArray:
    vector = np.zeros(N)
    vector[index] = 1.0
    return vector


def _tail_gaps(s: SpectrumResult, psi: TestFunction) -> FloatArray:
    """tails[n] = sum_{k > n} lambda_k (u_k^T psi)^2 for n = 0..N."""
    projections = s.eigenvectors.T @ psi.coefficients
    terms = s.eigenvalues * projections**2
    tails = np.zeros(s.source_N + 1)
    for n in range(s.source_N - 1, -1, -1):
        tails[n] = tails[n + 1] + terms[n]
    return tails


def _check_window(N: int, psi: TestFunction) -> None:
    if psi.N != N:
        raise DimensionError(f"test function has length {psi.N}, window has N={N}")

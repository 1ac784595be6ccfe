"""Acceptance suite run by ``pd-approx repro``.

Every criterion is property- or oracle-based and runs on a desk-scale
matrix of symbol families, window lengths and ranks. ``quick`` shrinks the
matrix for smoke runs; the full matrix is the reference.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .converge import convergence_sweep, psi_bank, spectral_quadratic_form, weak_gap
from .model import QuadratureSpec, Symbol, covariance_from_symbol
from .pca import (
    approximation_error_of,
    optimal_approximator,
    projection_certificate,
    random_projection,
    random_rank_n_map,
)
from .realize import extend_covariance_sequence, line_spectrum, stationary_extension
from .reports import dumps_json
from .sample import mc_orthogonality, mc_weak_error, sample_paths
from .spectrum import SpectrumResult, effective_rank, eigendecompose, weyl_track
from .toeplitz import TestFunction, quadratic_form, truncate

logger = logging.getLogger(__name__)

OPTIMALITY_TOLERANCE = 1e-9
COMPETITOR_MARGIN = 1e-10
WEYL_SUP_MARGIN = 1e-8
DENSITY_PARSEVAL_TOLERANCE = 1e-6
LINE_PARSEVAL_TOLERANCE = 1e-10
RECOVERY_FREQUENCY_TOLERANCE = 1e-6
RECOVERY_COVARIANCE_TOLERANCE = 1e-6
ORTHOGONALITY_TOLERANCE = 1e-10
OBSERVABILITY_FLOOR = 1e-8
SLEPIAN_TARGET = 32
SLEPIAN_SPREAD = 3
MC_SIGMAS = 3.0
CLT_SIGMAS = 5.0


def acceptance_families() -> dict[str, Symbol]:
    """The symbol families every criterion sweeps over."""
    return {
        "white": Symbol.white(),
        "ar1_0.3": Symbol.ar1(0.3),
        "ar1_0.5": Symbol.ar1(0.5),
        "ar1_0.9": Symbol.ar1(0.9),
        "bandlimited_pi/8": Symbol.bandlimited(math.pi / 8),
        "bandlimited_pi/4": Symbol.bandlimited(math.pi / 4),
        "lines_2": Symbol.line_spectrum([(math.pi / 3, 1.0), (math.pi / 5, 2.0)]),
    }


def recovery_generators() -> dict[str, Symbol]:
    """Line-spectral generators with at most three lines, including lines at 0 and pi."""
    return {
        "one_line": Symbol.line_spectrum([(math.pi / 4, 1.0)]),
        "two_lines": Symbol.line_spectrum([(math.pi / 3, 1.0), (math.pi / 5, 2.0)]),
        "three_lines": Symbol.line_spectrum([(0.4, 1.0), (1.3, 0.5), (2.5, 2.0)]),
        "with_dc": Symbol.line_spectrum([(0.0, 1.5), (1.0, 1.0)]),
        "with_nyquist": Symbol.line_spectrum([(0.7, 1.0), (math.pi, 0.5)]),
    }


@dataclass
class CriterionResult:
    key: str
    title: str
    checks: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, condition: bool, message: str) -> None:
        self.checks += 1
        if not condition:
            self.failures.append(message)

    def to_dict(self) -> dict[str, Any]:
        return {
            "key": self.key,
            "title": self.title,
            "passed": self.passed,
            "checks": self.checks,
            "failures": list(self.failures),
        }


@dataclass
class AcceptanceSummary:
    results: list[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    @property
    def failed(self) -> list[str]:
        return [result.key for result in self.results if not result.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "failed": self.failed,
            "criteria": [result.to_dict() for result in self.results],
        }


@dataclass(frozen=True)
class AcceptancePlan:
    """Sizes of the acceptance matrix."""

    optimality_Ns: tuple[int, ...] = (4, 8, 16, 32)
    competitors: int = 100
    weyl_Ns: tuple[int, ...] = (8, 16, 32, 64, 128)
    weyl_k: int = 8
    convergence_Ns: tuple[int, ...] = (8, 16, 32, 64)
    bank_size: int = 20
    parseval_Ns: tuple[int, ...] = (8, 32)
    slepian_N: int = 128
    mc_Ns: tuple[int, ...] = (4, 8, 16)
    mc_count: int = 100_000

    @classmethod
    def quick(cls) -> AcceptancePlan:
        return cls(
            optimality_Ns=(4, 8),
            competitors=10,
            weyl_Ns=(8, 16, 32),
            convergence_Ns=(8, 16),
            bank_size=8,
            parseval_Ns=(8,),
            mc_Ns=(4,),
            mc_count=20_000,
        )


class _Context:
    """Covariances and spectra shared between criteria."""

    def __init__(self, quad: QuadratureSpec, tau_max: int) -> None:
        self.quad = quad
        self.families = acceptance_families()
        self.covariances = {
            name: covariance_from_symbol(symbol, tau_max, quad) for name, symbol in self.families.items()
        }
        self._spectra: dict[tuple[str, int], SpectrumResult] = {}

    def spectrum(self, family: str, N: int) -> SpectrumResult:
        key = (family, N)
        if key not in self._spectra:
            self._spectra[key] = eigendecompose(truncate(self.covariances[family], N))
        return self._spectra[key]


def check_optimality(ctx: _Context, plan: AcceptancePlan, seed: int) -> tuple[CriterionResult, CriterionResult]:
    """Optimal error equals the eigenvalue tail and beats random competitors; M Sigma = M Sigma M^T."""
    optimal = CriterionResult("optimality", "rank-n optimality against random competitors")
    orthogonal = CriterionResult("orthogonality", "approximation error uncorrelated with the approximation")
    rng = np.random.default_rng(seed)
    for family, cov in ctx.covariances.items():
        for N in plan.optimality_Ns:
            T = truncate(cov, N).dense
            s = ctx.spectrum(family, N)
            trace = float(np.trace(T))
            scale = max(float(np.linalg.norm(T, "fro")), 1.0)
            for n in range(1, N):
                approx = optimal_approximator(s, n)
                direct = approximation_error_of(T, approx.M)
                tail = float(np.sum(np.linalg.eigvalsh(T)[: N - n]))
                optimal.check(
                    abs(direct - approx.error) <= OPTIMALITY_TOLERANCE * trace
                    and abs(max(tail, 0.0) - approx.error) <= OPTIMALITY_TOLERANCE * trace,
                    f"{family} N={N} n={n}: error {approx.error!r} vs direct {direct!r}",
                )
                best_competitor = math.inf
                for index in range(plan.competitors):
                    make = random_rank_n_map if index % 2 == 0 else random_projection
                    best_competitor = min(best_competitor, approximation_error_of(T, make(N, n, rng)))
                optimal.check(
                    best_competitor >= approx.error - COMPETITOR_MARGIN,
                    f"{family} N={N} n={n}: competitor error {best_competitor!r} beats {approx.error!r}",
                )
                residual = projection_certificate(approx, s).orthogonality
                orthogonal.check(
                    residual <= OPTIMALITY_TOLERANCE * scale,
                    f"{family} N={N} n={n}: ||M Sigma - M Sigma M^T|| = {residual!r}",
                )
    return optimal, orthogonal


def check_weyl(ctx: _Context, plan: AcceptancePlan) -> CriterionResult:
    result = CriterionResult("weyl", "eigenvalues nondecreasing in N")
    for family, cov in ctx.covariances.items():
        for k in range(1, min(plan.weyl_k, plan.weyl_Ns[0]) + 1):
            track = weyl_track(cov, plan.weyl_Ns, k)
            result.check(track.monotone, f"{family} k={k}: violation {track.max_violation!r}")
        symbol = ctx.families[family]
        sup = symbol.ess_sup()
        if symbol.rho is not None and sup is not None:
            top = ctx.spectrum(family, plan.weyl_Ns[-1]).top
            result.check(top <= sup + WEYL_SUP_MARGIN, f"{family}: lambda_1={top!r} exceeds sup {sup!r}")
    return result


def check_gap_curves(ctx: _Context, plan: AcceptancePlan, seed: int) -> CriterionResult:
    result = CriterionResult("weak_convergence", "gap curves nonnegative, nonincreasing, zero at n=N")
    for family, cov in ctx.covariances.items():
        for N in plan.convergence_Ns:
            s = ctx.spectrum(family, N)
            for psi_id, psi in psi_bank(N, plan.bank_size, seed):
                problems = convergence_sweep(cov, N, psi, spectrum=s).violations()
                result.check(not problems, f"{family} N={N} {psi_id}: {'; '.join(problems)}")
    return result


def check_parseval(ctx: _Context, plan: AcceptancePlan, seed: int) -> CriterionResult:
    result = CriterionResult("parseval", "time- and frequency-domain quadratic forms agree")
    for family, cov in ctx.covariances.items():
        symbol = ctx.families[family]
        tolerance = LINE_PARSEVAL_TOLERANCE if symbol.is_line_spectral else DENSITY_PARSEVAL_TOLERANCE
        for N in plan.parseval_Ns:
            T = truncate(cov, N)
            for psi_id, psi in psi_bank(N, plan.bank_size, seed):
                time_value = quadratic_form(T, psi)
                freq_value = spectral_quadratic_form(symbol, psi, ctx.quad)
                reference = max(time_value, cov.variance * psi.norm_squared * 1e-12)
                result.check(
                    abs(time_value - freq_value) <= tolerance * reference,
                    f"{family} N={N} {psi_id}: {time_value!r} vs {freq_value!r}",
                )
    return result


def check_exact_recovery(ctx: _Context) -> CriterionResult:
    result = CriterionResult("exact_recovery", "line-spectral generators recovered by the stationary extension")
    for name, symbol in recovery_generators().items():
        m = len(symbol.lines)
        n = symbol.line_rank
        for N in (4 * m, 4 * m + 8):
            horizon = 4 * N
            cov = covariance_from_symbol(symbol, horizon, ctx.quad)
            s = eigendecompose(truncate(cov, N))
            realization = stationary_extension(optimal_approximator(s, n))
            diagnostics = realization.diagnostics()
            label = f"{name} N={N}"
            result.check(
                diagnostics.orthogonality <= ORTHOGONALITY_TOLERANCE,
                f"{label}: ||A^T A - I|| = {diagnostics.orthogonality!r}",
            )
            result.check(
                diagnostics.observability_sv > OBSERVABILITY_FLOOR,
                f"{label}: observability singular value {diagnostics.observability_sv!r}",
            )
            recovered = line_spectrum(realization)
            expected = np.array([theta for theta, _ in symbol.lines])
            same_count = recovered.frequencies.size == expected.size
            result.check(same_count, f"{label}: recovered {recovered.frequencies.size} lines, expected {expected.size}")
            if same_count:
                error = float(np.max(np.abs(recovered.frequencies - expected)))
                result.check(error <= RECOVERY_FREQUENCY_TOLERANCE, f"{label}: frequency error {error!r}")
            extended = extend_covariance_sequence(realization, horizon)
            deviation = float(np.max(np.abs(extended.values - cov.values)))
            result.check(
                deviation <= RECOVERY_COVARIANCE_TOLERANCE * cov.variance,
                f"{label}: extended covariance deviates by {deviation!r}",
            )
    return result


def check_slepian(ctx: _Context, plan: AcceptancePlan) -> CriterionResult:
    result = CriterionResult("slepian", "band-limited effective rank near the time-bandwidth product")
    rank = effective_rank(ctx.spectrum("bandlimited_pi/4", plan.slepian_N), 0.5)
    result.check(
        abs(rank - SLEPIAN_TARGET) <= SLEPIAN_SPREAD,
        f"effective rank {rank} outside {SLEPIAN_TARGET} +/- {SLEPIAN_SPREAD}",
    )
    return result


def check_monte_carlo(ctx: _Context, plan: AcceptancePlan, seed: int) -> CriterionResult:
    result = CriterionResult("monte_carlo", "sampled weak errors agree with the analytic gaps")
    for family, cov in ctx.covariances.items():
        for N in plan.mc_Ns:
            s = ctx.spectrum(family, N)
            T = truncate(cov, N)
            batch = sample_paths(s, plan.mc_count, seed)
            retry = None
            bank = psi_bank(N, size=2)
            envelope = CLT_SIGMAS * s.top / math.sqrt(plan.mc_count)
            for n in range(1, N):
                approx = optimal_approximator(s, n)
                for psi_id, psi in bank:
                    gap = weak_gap(cov, N, n, psi, spectrum=s)
                    floor = 1e-12 * quadratic_form(T, psi)
                    estimate = mc_weak_error(batch, approx.M, psi)
                    if not estimate.agrees_with(gap, MC_SIGMAS, floor):
                        if retry is None:
                            retry = sample_paths(s, 2 * plan.mc_count, seed, stream=1)
                        logger.warning("Monte Carlo retry for %s N=%d n=%d %s", family, N, n, psi_id)
                        estimate = mc_weak_error(retry, approx.M, psi)
                    result.check(
                        estimate.agrees_with(gap, MC_SIGMAS, floor),
                        f"{family} N={N} n={n} {psi_id}: {estimate.estimate!r} +/- {estimate.std_error!r} vs {gap!r}",
                    )
                residual = mc_orthogonality(batch, approx.M).max_abs
                result.check(residual <= envelope, f"{family} N={N} n={n}: orthogonality {residual!r} > {envelope!r}")
    return result


def check_determinism(quad: QuadratureSpec, seed: int) -> CriterionResult:
    result = CriterionResult("determinism", "identical inputs give byte-identical outputs")
    first, second = _fingerprint(quad, seed), _fingerprint(quad, seed)
    result.check(first == second, "two runs of the reference pipeline differ")
    return result


def _fingerprint(quad: QuadratureSpec, seed: int) -> str:
    """Serialized outputs of a small end-to-end pipeline."""
    symbol = Symbol.ar1(0.5)
    N, n = 8, 3
    cov = covariance_from_symbol(symbol, 4 * N, quad)
    s = eigendecompose(truncate(cov, N))
    approx = optimal_approximator(s, n)
    realization = stationary_extension(approx)
    psi = TestFunction(np.ones(N))
    batch = sample_paths(s, 256, seed)
    payload = {
        "sigma": cov.values,
        "eigenvalues": s.eigenvalues,
        "sigma_hat": approx.sigma_hat,
        "lines": [list(line) for line in line_spectrum(realization).lines],
        "extended": extend_covariance_sequence(realization, 4 * N).values,
        "curve": [gap for _, gap in convergence_sweep(cov, N, psi, spectrum=s).entries],
        "paths": batch.paths,
        "mc": mc_weak_error(batch, approx.M, psi).estimate,
    }
    return dumps_json(payload)


def run_acceptance(
    quick: bool = False,
    seed: int = 20240101,
    quad: QuadratureSpec | None = None,
) -> AcceptanceSummary:
    """Evaluate every acceptance criterion and collect the outcomes."""
    plan = AcceptancePlan.quick() if quick else AcceptancePlan()
    quad = quad or QuadratureSpec()
    tau_max = max(*plan.weyl_Ns, plan.slepian_N, *plan.optimality_Ns, *plan.convergence_Ns) - 1
    ctx = _Context(quad, tau_max)

    stages: list[tuple[str, Callable[[], list[CriterionResult]]]] = [
        ("optimality", lambda: list(check_optimality(ctx, plan, seed))),
        ("weyl", lambda: [check_weyl(ctx, plan)]),
        ("weak_convergence", lambda: [check_gap_curves(ctx, plan, seed)]),
        ("parseval", lambda: [check_parseval(ctx, plan, seed)]),
        ("exact_recovery", lambda: [check_exact_recovery(ctx)]),
        ("slepian", lambda: [check_slepian(ctx, plan)]),
        ("monte_carlo", lambda: [check_monte_carlo(ctx, plan, seed)]),
        ("determinism", lambda: [check_determinism(quad, seed)]),
    ]
    results: list[CriterionResult] = []
    for name, stage in stages:
        logger.info("acceptance: %s", name)
        for outcome in stage():
            if not outcome.passed:
                failed = len(outcome.failures)
                logger.warning("acceptance %s failed %d of %d checks", outcome.key, failed, outcome.checks)
            results.append(outcome)
    return AcceptanceSummary(results=results)

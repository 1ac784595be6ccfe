"""Subcommand handlers.

Each handler takes a validated ExperimentConfig, writes its artifacts under
``config.output_dir`` and returns the JSON summary printed on stdout.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from .acceptance import run_acceptance
from .config import ExperimentConfig, PsiBank
from .converge import FIXED_BANK_SIZE, psi_bank, weak_gap, wconv_report
from .errors import AcceptanceFailure, RealizationError
from .model import CovarianceSequence
from .pca import optimal_approximator, projection_certificate
from .realize import (
    LineSpectrum,
    extend_covariance_sequence,
    line_spectrum,
    realization_report,
    stationary_extension,
)
from .reports import success_report, write_csv, write_json
from .router import CommandRouter
from .sample import (
    GENERATOR_ID,
    PathBatch,
    approximation_paths,
    mc_orthogonality,
    mc_weak_error,
    sample_paths,
    subspace_singular_ratio,
)
from .spectrum import SpectrumResult, effective_rank, eigendecompose, weyl_track
from .toeplitz import TestFunction, export_dense_csv, frobenius_distance, quadratic_form, truncate

logger = logging.getLogger(__name__)

router = CommandRouter()

# extension horizon in multiples of N
EXTENSION_FACTOR = 4
CLT_SIGMAS = 5.0
MC_FLOOR = 1e-12


def _spectrum(config: ExperimentConfig, cov: CovarianceSequence, N: int) -> SpectrumResult:
    return eigendecompose(truncate(cov, N), method=config.method)


def _test_bank(config: ExperimentConfig, N: int) -> list[tuple[str, TestFunction]]:
    if config.psi_bank is PsiBank.CANONICAL:
        return [(f"e{k + 1}", TestFunction(np.eye(N)[k])) for k in range(min(N, config.psi_count))]
    if config.psi_bank is PsiBank.RANDOM:
        bank = psi_bank(N, size=FIXED_BANK_SIZE + config.psi_count, seed=config.seed)
        return bank[FIXED_BANK_SIZE:]
    return psi_bank(N, size=config.psi_count, seed=config.seed)


def _relative(output_dir: Path, path: Path) -> str:
    return str(path.relative_to(output_dir))


@router.register("spectrum")
def run_spectrum(config: ExperimentConfig) -> dict[str, Any]:
    """Eigenvalue tables, Weyl tracks and effective ranks."""
    out = config.output_dir
    Ns = sorted(set(config.Ns))
    cov = config.covariance_for(Ns[-1] - 1)
    files: list[Path] = []
    results = []
    for N in Ns:
        s = _spectrum(config, cov, N)
        files.append(
            write_csv(
                out / f"spectrum_N{N}.csv",
                ["k", "lambda"],
                ((k + 1, value) for k, value in enumerate(s.eigenvalues)),
                config.timestamp,
            )
        )
        rank = effective_rank(s, config.threshold)
        logger.info("spectrum N=%d effective_rank=%d lambda_1=%.6g", N, rank, s.top)
        results.append(
            {
                "N": N,
                "effective_rank": rank,
                "threshold": config.threshold,
                "lambda_max": s.top,
                "lambda_min": float(s.eigenvalues[-1]),
                "trace": float(s.eigenvalues.sum()),
            }
        )

    tracks = [weyl_track(cov, Ns, k, method=config.method) for k in range(1, min(config.weyl_k, Ns[0]) + 1)]
    files.append(
        write_csv(
            out / "weyl.csv",
            ["N", "k", "lambda"],
            ((N, track.k, value) for track in tracks for N, value in zip(track.Ns, track.values, strict=True)),
            config.timestamp,
        )
    )
    weyl = [
        {"k": t.k, "monotone": t.monotone, "max_violation": t.max_violation, "limit_estimate": t.limit_estimate}
        for t in tracks
    ]
    sup = config.symbol.ess_sup() if config.symbol is not None else None
    report = success_report(
        "spectrum",
        source=config.source_label,
        ess_sup=sup,
        results=results,
        weyl=weyl,
        files=[_relative(out, f) for f in files],
    )
    write_json(out / "spectrum.json", report, config.timestamp)
    return report


@router.register("approx")
def run_approx(config: ExperimentConfig) -> dict[str, Any]:
    """Optimal rank-n approximations with their projection certificates."""
    out = config.output_dir
    cov = config.covariance_for(max(config.Ns) - 1)
    files: list[Path] = []
    results = []
    for N in config.Ns:
        T = truncate(cov, N)
        s = _spectrum(config, cov, N)
        for n in config.ranks_for(N):
            approx = optimal_approximator(s, n)
            certificate = projection_certificate(approx, s)
            results.append(
                {
                    "N": N,
                    "n": n,
                    "error": approx.error,
                    "trace": T.trace,
                    "frobenius_gap": frobenius_distance(T.dense, approx.sigma_hat),
                    "degenerate_cut": approx.degenerate_cut,
                    "certificate": certificate.to_dict(),
                }
            )
            if config.dump_sigma_hat:
                comment = f"sigma_hat N={N} n={n}"
                if config.timestamp is not None:
                    comment += f" generated: {config.timestamp}"
                files.append(export_dense_csv(approx.sigma_hat, out / f"sigma_hat_N{N}_n{n}.csv", comment))
    report = success_report(
        "approx", source=config.source_label, results=results, files=[_relative(out, f) for f in files]
    )
    write_json(out / "approx.json", report, config.timestamp)
    return report


@router.register("realize")
def run_realize(config: ExperimentConfig) -> dict[str, Any]:
    """Stationary extensions: lines, invariant residuals and extended covariances."""
    out = config.output_dir
    horizon = EXTENSION_FACTOR * max(config.Ns)
    if config.covariance is not None:
        reference = config.covariance
    else:
        reference = config.covariance_for(horizon)
    files: list[Path] = []
    results = []
    for N in config.Ns:
        s = _spectrum(config, reference, N)
        for n in config.ranks_for(N):
            if n >= N:
                results.append({"N": N, "n": n, "realized": False, "reason": "the shift needs N >= n + 1"})
                continue
            approx = optimal_approximator(s, n)
            try:
                realization = stationary_extension(approx)
            except RealizationError as exc:
                logger.warning("no stationary extension for N=%d n=%d: %s", N, n, exc)
                results.append({"N": N, "n": n, "realized": False, "reason": str(exc)})
                continue
            extended = extend_covariance_sequence(realization, EXTENSION_FACTOR * N)
            rows = [
                (tau, value, reference.lag(tau) if tau <= reference.tau_max else None)
                for tau, value in enumerate(extended.values)
            ]
            path = out / f"realize_N{N}_n{n}.csv"
            files.append(write_csv(path, ["tau", "sigma_hat", "sigma"], rows, config.timestamp))
            results.append({"realized": True, **realization_report(approx, realization)})
    report = success_report(
        "realize", source=config.source_label, results=results, files=[_relative(out, f) for f in files]
    )
    write_json(out / "realize.json", report, config.timestamp)
    return report


@router.register("converge")
def run_converge(config: ExperimentConfig) -> dict[str, Any]:
    """Weak convergence tables: time- and frequency-domain quadratic forms per (n, psi)."""
    out = config.output_dir
    cov = config.covariance_for(max(config.Ns) - 1)
    files: list[Path] = []
    results = []
    for N in config.Ns:
        s = _spectrum(config, cov, N)
        bank = _test_bank(config, N)
        rows = []
        failures = []
        worst_symbol_residual = 0.0
        for n in config.ranks_for(N):
            lines: LineSpectrum | None = None
            if n < N:
                try:
                    lines = line_spectrum(stationary_extension(optimal_approximator(s, n)))
                except RealizationError as exc:
                    logger.warning("frequency-domain Sigma-hat unavailable for N=%d n=%d: %s", N, n, exc)
                    failures.append(n)
            for psi_id, psi in bank:
                entry = wconv_report(
                    cov, config.symbol, N, n, psi, quad=config.quad, spectrum=s, lines=lines, extend=False
                )
                if entry.sigma_residual is not None and entry.sigma_qf > 0:
                    worst_symbol_residual = max(worst_symbol_residual, entry.sigma_residual / entry.sigma_qf)
                rows.append(
                    (
                        n,
                        psi_id,
                        entry.gap,
                        entry.sigma_qf,
                        entry.sigma_qf_freq,
                        entry.sigmahat_qf,
                        entry.sigmahat_qf_freq,
                    )
                )
        files.append(
            write_csv(
                out / f"converge_N{N}.csv",
                ["n", "psi_id", "gap", "sigma_qf", "sigma_qf_freq", "sigmahat_qf", "sigmahat_qf_freq"],
                rows,
                config.timestamp,
            )
        )
        results.append(
            {
                "N": N,
                "rows": len(rows),
                "max_relative_symbol_residual": worst_symbol_residual if config.symbol is not None else None,
                "realization_failures": failures,
            }
        )
    report = success_report(
        "converge", source=config.source_label, results=results, files=[_relative(out, f) for f in files]
    )
    write_json(out / "converge.json", report, config.timestamp)
    return report


@router.register("sample")
def run_sample(config: ExperimentConfig) -> dict[str, Any]:
    """Monte Carlo paths and their agreement with the analytic gaps."""
    out = config.output_dir
    cov = config.covariance_for(max(config.Ns) - 1)
    files: list[Path] = []
    results = []
    for N in config.Ns:
        s = _spectrum(config, cov, N)
        batch = sample_paths(s, config.count, config.seed)
        files.append(
            write_csv(out / f"paths_N{N}.csv", [f"y{t}" for t in range(N)], batch.paths.tolist(), config.timestamp)
        )
        T = truncate(cov, N)
        deviation = float(np.max(np.abs(batch.empirical_covariance() - T.dense)))
        envelope = CLT_SIGMAS * math.sqrt(2.0 * s.top**2 / config.count)
        retry: PathBatch | None = None
        ranks = []
        for n in config.ranks_for(N):
            approx = optimal_approximator(s, n)
            checks = []
            for psi_id, psi in _test_bank(config, N):
                gap = weak_gap(cov, N, n, psi, spectrum=s)
                floor = MC_FLOOR * quadratic_form(T, psi)
                estimate = mc_weak_error(batch, approx.M, psi)
                retried = False
                if not estimate.agrees_with(gap, floor=floor):
                    if retry is None:
                        retry = sample_paths(s, 2 * config.count, config.seed, stream=1)
                    logger.warning("Monte Carlo retry for N=%d n=%d psi=%s with %d paths", N, n, psi_id, retry.count)
                    estimate = mc_weak_error(retry, approx.M, psi)
                    retried = True
                checks.append(
                    {
                        "psi_id": psi_id,
                        "gap": gap,
                        "estimate": estimate.estimate,
                        "std_error": estimate.std_error,
                        "agrees": estimate.agrees_with(gap, floor=floor),
                        "retried": retried,
                    }
                )
            orthogonality = mc_orthogonality(batch, approx.M).max_abs
            ranks.append(
                {
                    "n": n,
                    "weak_error": checks,
                    "orthogonality_max_abs": orthogonality,
                    "orthogonality_envelope": CLT_SIGMAS * s.top / math.sqrt(config.count),
                    "subspace_singular_ratio": subspace_singular_ratio(approximation_paths(batch, approx.M), n),
                }
            )
        results.append(
            {"N": N, "covariance_max_deviation": deviation, "covariance_envelope": envelope, "ranks": ranks}
        )
    report = success_report(
        "sample",
        source=config.source_label,
        generator=GENERATOR_ID,
        seed=config.seed,
        count=config.count,
        results=results,
        files=[_relative(out, f) for f in files],
    )
    write_json(out / "sample.json", report, config.timestamp)
    return report


@router.register("repro")
def run_repro(config: ExperimentConfig) -> dict[str, Any]:
    """Run the acceptance suite, write its summary, and fail on any failed criterion."""
    out = config.output_dir
    summary = run_acceptance(quick=config.quick, seed=config.seed, quad=config.quad)
    files = [
        write_csv(
            out / "repro.csv",
            ["criterion", "passed", "checks", "failures"],
            ((r.key, r.passed, r.checks, len(r.failures)) for r in summary.results),
            config.timestamp,
        )
    ]
    report = success_report("repro", quick=config.quick, seed=config.seed, **summary.to_dict())
    report["files"] = [_relative(out, f) for f in files]
    write_json(out / "repro.json", report, config.timestamp)
    if not summary.passed:
        raise AcceptanceFailure(summary.failed)
    return report

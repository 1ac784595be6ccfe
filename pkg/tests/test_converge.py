"""Tests for our_pd_approx.converge module."""

from __future__ import annotations

import math

import numpy as np
import pytest

from our_pd_approx.converge import (
    FIXED_BANK_SIZE,
    convergence_sweep,
    psi_bank,
    spectral_quadratic_form,
    wconv_report,
    weak_gap,
)
from our_pd_approx.errors import DimensionError, ValidationError
from our_pd_approx.model import CovarianceSequence, Symbol, covariance_from_symbol
from our_pd_approx.realize import LineSpectrum
from our_pd_approx.toeplitz import TestFunction, quadratic_form, truncate

E1 = TestFunction(np.array([1.0, 0.0]))


class TestWeakGap:
    """Tests for weak_gap."""

    def test_ar1_two_by_two(self, ar1_cov: CovarianceSequence) -> None:
        """Should give lambda_2 (u_2^T e1)^2 = 0.25 at n = 1."""
        assert weak_gap(ar1_cov, 2, 1, E1) == pytest.approx(0.25)

    def test_vanishes_at_full_rank(self, ar1_cov: CovarianceSequence) -> None:
        """Should be zero at n = N."""
        assert weak_gap(ar1_cov, 2, 2, E1) == pytest.approx(0.0, abs=1e-15)

    def test_cosine_exact_at_rank_two(self, cosine_cov: CovarianceSequence) -> None:
        """Should vanish once both cosine dimensions are kept."""
        psi = TestFunction(np.arange(1.0, 9.0))
        assert weak_gap(cosine_cov, 8, 2, psi) <= 1e-9

    def test_dimension_mismatch(self, ar1_cov: CovarianceSequence) -> None:
        """Should reject a test function of the wrong length."""
        with pytest.raises(DimensionError):
            weak_gap(ar1_cov, 3, 1, E1)


class TestConvergenceSweep:
    """Tests for convergence_sweep."""

    def test_ar1_curve_well_formed(self, ar1_cov: CovarianceSequence) -> None:
        """Should be nonnegative, nonincreasing and zero at n = N."""
        curve = convergence_sweep(ar1_cov, 16, TestFunction(np.ones(16)))
        assert curve.violations() == []
        assert len(curve.entries) == 16
        assert np.all(np.diff(curve.gaps) <= curve.tolerance)
        assert curve.gaps[-1] == pytest.approx(0.0, abs=curve.tolerance)
        assert curve.gaps[0] <= curve.sigma_qf

    def test_matches_weak_gap(self, ar1_cov: CovarianceSequence) -> None:
        """Should agree with weak_gap entry by entry."""
        psi = TestFunction(np.random.default_rng(4).standard_normal(10))
        curve = convergence_sweep(ar1_cov, 10, psi)
        for n, gap in curve.entries:
            assert gap == pytest.approx(weak_gap(ar1_cov, 10, n, psi), abs=1e-12)

    def test_first_below(self, cosine_cov: CovarianceSequence) -> None:
        """Should find the first rank whose gap drops below the level."""
        curve = convergence_sweep(cosine_cov, 8, TestFunction(np.arange(1.0, 9.0)))
        assert curve.first_below(1e-9) == 2
        assert curve.first_below(-1.0) is None

    def test_violations_reported(self, ar1_cov: CovarianceSequence) -> None:
        """Should describe a curve that increases or stays positive at n = N."""
        curve = convergence_sweep(ar1_cov, 3, TestFunction(np.ones(3)))
        broken = type(curve)(N=3, psi=curve.psi, entries=((1, 0.1), (2, 0.2), (3, 0.05)), sigma_qf=1.0)
        problems = broken.violations()
        assert any("increases" in problem for problem in problems)
        assert any("n=N" in problem for problem in problems)


class TestSpectralQuadraticForm:
    """Tests for spectral_quadratic_form."""

    def test_white(self) -> None:
        """Should give ||psi||^2 for a flat unit symbol."""
        psi = TestFunction(np.array([1.0, -2.0, 0.5]))
        assert spectral_quadratic_form(Symbol.white(), psi) == pytest.approx(psi.norm_squared, rel=1e-12)

    def test_ar1_matches_time_domain(self, ar1_half: Symbol) -> None:
        """Should agree with psi^T Sigma_N psi for a density."""
        cov = covariance_from_symbol(ar1_half, 15)
        psi = TestFunction(np.random.default_rng(8).standard_normal(16))
        expected = quadratic_form(truncate(cov, 16), psi)
        assert spectral_quadratic_form(ar1_half, psi) == pytest.approx(expected, rel=1e-9)

    def test_bandlimited_matches_time_domain(self) -> None:
        """Should handle the jump of a band-limited symbol."""
        symbol = Symbol.bandlimited(math.pi / 4)
        cov = covariance_from_symbol(symbol, 31)
        psi = TestFunction(np.ones(32))
        expected = quadratic_form(truncate(cov, 32), psi)
        assert spectral_quadratic_form(symbol, psi) == pytest.approx(expected, rel=1e-9)

    def test_line_symbol_and_line_spectrum(self, cosine_symbol: Symbol) -> None:
        """Should evaluate line spectra in closed form."""
        psi = TestFunction(np.array([1.0, 0.0, 0.0]))
        assert spectral_quadratic_form(cosine_symbol, psi) == pytest.approx(1.0)
        lines = LineSpectrum(lines=((0.0, 2.0),))
        assert spectral_quadratic_form(lines, TestFunction(np.ones(3))) == pytest.approx(18.0)


class TestWconvReport:
    """Tests for wconv_report."""

    def test_cosine_time_and_frequency_agree(self, cosine_symbol: Symbol, cosine_cov: CovarianceSequence) -> None:
        """Should match all four quadratic forms for an exactly representable process."""
        psi = TestFunction(np.arange(1.0, 9.0))
        report = wconv_report(cosine_cov, cosine_symbol, 8, 2, psi)
        assert report.gap <= 1e-9
        assert report.sigma_residual is not None and report.sigma_residual < 1e-9
        assert report.sigmahat_residual is not None and report.sigmahat_residual < 1e-8
        assert report.toeplitz_defect < 1e-12

    @pytest.mark.parametrize("n", [9, 20, 63])
    def test_ar1_extension_at_high_rank(self, ar1_half: Symbol, n: int) -> None:
        """Should realize and evaluate the frequency-domain form for ranks well past the first few."""
        cov = covariance_from_symbol(ar1_half, 63)
        report = wconv_report(cov, ar1_half, 64, n, TestFunction(np.eye(64)[0]))
        assert report.sigmahat_qf_freq is not None
        assert report.sigma_qf_freq == pytest.approx(1.0, rel=1e-9)

    def test_full_rank_has_no_extension(self, ar1_cov: CovarianceSequence) -> None:
        """Should leave the realized frequency form empty at n = N."""
        report = wconv_report(ar1_cov, None, 2, 2, E1)
        assert report.sigmahat_qf_freq is None
        assert report.sigma_qf_freq is None
        assert report.sigmahat_residual is None
        assert report.to_dict()["sigma_residual"] is None

    def test_precomputed_lines(self, ar1_cov: CovarianceSequence) -> None:
        """Should use the supplied line spectrum instead of realizing again."""
        lines = LineSpectrum(lines=((0.0, 1.0),))
        report = wconv_report(ar1_cov, None, 2, 1, E1, lines=lines)
        assert report.sigmahat_qf_freq == pytest.approx(1.0)

    def test_no_extension_requested(self, ar1_cov: CovarianceSequence) -> None:
        """Should skip the realization when extend is off."""
        report = wconv_report(ar1_cov, None, 4, 1, TestFunction(np.ones(4)), extend=False)
        assert report.sigmahat_qf_freq is None
        assert report.gap > 0


class TestPsiBank:
    """Tests for psi_bank."""

    def test_named_functions_first(self) -> None:
        """Should list the fixed test functions before the random ones."""
        bank = psi_bank(8, size=FIXED_BANK_SIZE + 2)
        names = [name for name, _ in bank]
        assert names[:FIXED_BANK_SIZE] == ["e1", "boxcar", "alternating", "gauss", "e_mid", "e_last"]
        assert names[FIXED_BANK_SIZE:] == ["random0", "random1"]
        assert all(psi.N == 8 for _, psi in bank)

    def test_truncated_bank(self) -> None:
        """Should honour a size below the fixed set."""
        assert [name for name, _ in psi_bank(4, size=2)] == ["e1", "boxcar"]

    def test_seeded(self) -> None:
        """Should repeat the random members for the same seed only."""
        first = psi_bank(6, size=10, seed=3)
        second = psi_bank(6, size=10, seed=3)
        other = psi_bank(6, size=10, seed=4)
        np.testing.assert_array_equal(first[-1][1].coefficients, second[-1][1].coefficients)
        assert not np.array_equal(first[-1][1].coefficients, other[-1][1].coefficients)

    def test_single_point_window(self) -> None:
        """Should build every fixed member at N = 1."""
        assert len(psi_bank(1, size=FIXED_BANK_SIZE)) == FIXED_BANK_SIZE

    def test_invalid_size(self) -> None:
        """Should reject an empty bank."""
        with pytest.raises(ValidationError):
            psi_bank(4, size=0)

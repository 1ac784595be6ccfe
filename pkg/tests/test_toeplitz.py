"""Tests for our_pd_approx.toeplitz module."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from our_pd_approx.errors import DimensionError, LengthError, ValidationError
from our_pd_approx.converge import spectral_quadratic_form
from our_pd_approx.model import CovarianceSequence, Symbol, covariance_from_symbol
from our_pd_approx.spectrum import eigendecompose
from our_pd_approx.toeplitz import (
    TestFunction,
    export_dense_csv,
    frobenius_distance,
    quadratic_form,
    toeplitz_defect,
    toeplitzify,
    truncate,
)


class TestTruncate:
    """Tests for truncate."""

    def test_white_identity(self, white_cov: CovarianceSequence) -> None:
        """Should give the identity for white noise."""
        np.testing.assert_array_equal(truncate(white_cov, 3).dense, np.eye(3))

    def test_ar1_two_by_two(self, ar1_cov: CovarianceSequence) -> None:
        """Should fill the Toeplitz pattern from sigma."""
        np.testing.assert_array_equal(truncate(ar1_cov, 2).dense, [[1.0, 0.5], [0.5, 1.0]])

    def test_cosine_rank_two(self, cosine_cov: CovarianceSequence) -> None:
        """Should be rank two for a single cosine line."""
        s = eigendecompose(truncate(cosine_cov, 8))
        assert s.eigenvalues[2] < 1e-10

    def test_length_error(self) -> None:
        """Should name the required tau_max when lags are missing."""
        cov = CovarianceSequence(np.array([1.0, 0.5]))
        with pytest.raises(LengthError) as info:
            truncate(cov, 4)
        assert info.value.required_tau_max == 3
        assert info.value.available_tau_max == 1

    def test_trace_and_shape(self, ar1_cov: CovarianceSequence) -> None:
        """Should report N * sigma(0) as the trace."""
        T = truncate(ar1_cov, 5)
        assert T.shape == (5, 5)
        assert T.trace == pytest.approx(5.0)

    def test_invalid_window(self, ar1_cov: CovarianceSequence) -> None:
        """Should reject N < 1."""
        with pytest.raises(ValidationError):
            truncate(ar1_cov, 0)


class TestQuadraticForm:
    """Tests for quadratic_form."""

    def test_identity(self, white_cov: CovarianceSequence) -> None:
        """Should give 3 for the identity and the all-ones vector."""
        assert quadratic_form(truncate(white_cov, 3), TestFunction(np.ones(3))) == pytest.approx(3.0)

    def test_picks_variance(self, ar1_cov: CovarianceSequence) -> None:
        """Should give sigma(0) for psi = e1."""
        assert quadratic_form(truncate(ar1_cov, 2), TestFunction(np.array([1.0, 0.0]))) == pytest.approx(1.0)

    def test_difference(self, ar1_cov: CovarianceSequence) -> None:
        """Should give 2 - 2 rho for psi = (1, -1)."""
        assert quadratic_form(truncate(ar1_cov, 2), TestFunction(np.array([1.0, -1.0]))) == pytest.approx(1.0)

    def test_banded_matches_dense(self, ar1_cov: CovarianceSequence) -> None:
        """Should agree with the dense product."""
        rng = np.random.default_rng(3)
        psi = TestFunction(rng.standard_normal(17))
        T = truncate(ar1_cov, 17)
        assert quadratic_form(T, psi) == pytest.approx(quadratic_form(T.dense, psi), rel=1e-13)

    def test_support_offset_invariance(self, ar1_half: Symbol, ar1_cov: CovarianceSequence) -> None:
        """Should not depend on where the window starts."""
        psi = TestFunction(np.random.default_rng(11).standard_normal(6))
        moved = psi.shifted(37)
        T = truncate(ar1_cov, 6)
        assert quadratic_form(T, moved) == pytest.approx(quadratic_form(T, psi), rel=1e-14)
        assert spectral_quadratic_form(ar1_half, moved) == pytest.approx(spectral_quadratic_form(ar1_half, psi))
        lines = Symbol.line_spectrum([(0.3, 1.0), (2.0, 0.5)])
        assert spectral_quadratic_form(lines, moved) == pytest.approx(spectral_quadratic_form(lines, psi))

    @pytest.mark.parametrize("N", [4, 8, 16])
    @pytest.mark.parametrize(
        "symbol",
        [
            Symbol.white(),
            Symbol.bandlimited(math.pi / 4),
            Symbol.ar1(0.5),
            Symbol.ar1(-0.9),
            Symbol.line_spectrum([(math.pi / 3, 1.0), (math.pi / 5, 2.0)]),
        ],
        ids=["white", "bandlimited", "ar1", "ar1_negative", "lines"],
    )
    def test_nonnegative_for_random_functions(self, symbol: Symbol, N: int) -> None:
        """Should keep psi^T Sigma_N psi >= 0 for 100 random test functions."""
        T = truncate(covariance_from_symbol(symbol, N - 1), N)
        rng = np.random.default_rng(N)
        for _ in range(100):
            psi = TestFunction(rng.standard_normal(N))
            assert quadratic_form(T, psi) >= -1e-9 * psi.norm_squared

    def test_dimension_mismatch(self, ar1_cov: CovarianceSequence) -> None:
        """Should reject a test function of the wrong length."""
        with pytest.raises(DimensionError):
            quadratic_form(truncate(ar1_cov, 3), TestFunction(np.ones(2)))
        with pytest.raises(DimensionError):
            quadratic_form(np.eye(3), TestFunction(np.ones(2)))


class TestTestFunction:
    """Tests for TestFunction."""

    def test_zero_rejected(self) -> None:
        """Should require a nonzero coefficient."""
        with pytest.raises(ValidationError):
            TestFunction(np.zeros(3))

    def test_transform_delta(self) -> None:
        """Should have |psi_hat| = 1 for a unit impulse."""
        psi = TestFunction(np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(psi.power(np.linspace(-math.pi, math.pi, 9)), 1.0)

    def test_transform_boxcar_at_zero(self) -> None:
        """Should sum the coefficients at omega = 0."""
        psi = TestFunction(np.ones(4))
        assert psi.transform(0.0)[0] == pytest.approx(4.0)
        assert psi.norm_squared == 4.0

    def test_shifted_keeps_coefficients(self) -> None:
        """Should only move the support."""
        psi = TestFunction(np.array([1.0, 2.0])).shifted(5)
        assert psi.support_offset == 5
        np.testing.assert_array_equal(psi.coefficients, [1.0, 2.0])

    def test_shift_is_a_phase(self) -> None:
        """Should multiply psi_hat by e^{i omega t} and leave |psi_hat|^2 alone."""
        psi = TestFunction(np.array([1.0, -0.5, 2.0]))
        omega = np.linspace(-math.pi, math.pi, 7)
        moved = psi.shifted(5)
        np.testing.assert_allclose(moved.transform(omega), np.exp(5j * omega) * psi.transform(omega), atol=1e-12)
        np.testing.assert_allclose(moved.power(omega), psi.power(omega), atol=1e-12)


class TestToeplitzify:
    """Tests for frobenius_distance, toeplitzify and toeplitz_defect."""

    def test_distance(self) -> None:
        """Should give 0 for equal matrices and sqrt(2) for I2 vs 0."""
        assert frobenius_distance(np.eye(2), np.eye(2)) == 0.0
        assert frobenius_distance(np.eye(2), np.zeros((2, 2))) == pytest.approx(math.sqrt(2))

    def test_distance_shape_mismatch(self) -> None:
        """Should reject differently shaped operands."""
        with pytest.raises(DimensionError):
            frobenius_distance(np.eye(2), np.eye(3))

    def test_toeplitz_fixed_point(self, ar1_cov: CovarianceSequence) -> None:
        """Should leave a Toeplitz matrix unchanged."""
        dense = truncate(ar1_cov, 6).dense
        np.testing.assert_allclose(toeplitzify(dense), dense, atol=1e-15)
        assert toeplitz_defect(dense) == pytest.approx(0.0, abs=1e-15)

    def test_diagonal_averaging(self) -> None:
        """Should average each diagonal."""
        matrix = np.array([[1.0, 2.0], [2.0, 3.0]])
        np.testing.assert_allclose(toeplitzify(matrix), [[2.0, 2.0], [2.0, 2.0]])
        assert toeplitz_defect(matrix) > 0

    def test_zero_matrix(self) -> None:
        """Should report no defect for the zero matrix."""
        assert toeplitz_defect(np.zeros((3, 3))) == 0.0


class TestExportDenseCsv:
    """Tests for export_dense_csv."""

    def test_writes_rows(self, tmp_path: Path, ar1_cov: CovarianceSequence) -> None:
        """Should write one line per matrix row with exact floats."""
        path = tmp_path / "sigma.csv"
        export_dense_csv(truncate(ar1_cov, 3), path, comment="N=3")
        lines = path.read_text().splitlines()
        assert lines[0] == "# N=3"
        assert lines[1] == "1.0,0.5,0.25"
        assert len(lines) == 4

"""Shared test fixtures for our-pd-approx."""

from __future__ import annotations

import math

import numpy as np
import pytest

from our_pd_approx.model import CovarianceSequence, Symbol, covariance_from_symbol


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "unit: Unit tests (no external dependencies)")
    config.addinivalue_line("markers", "integration: Integration tests (exercise the CLI end to end)")
    config.addinivalue_line("markers", "slow: Slow tests (>5s)")


COSINE_FREQUENCY = 2 * math.pi / 8


@pytest.fixture
def ar1_half() -> Symbol:
    return Symbol.ar1(0.5)


@pytest.fixture
def ar1_cov() -> CovarianceSequence:
    """Exact AR(1) covariances 0.5**tau up to tau = 256."""
    return CovarianceSequence(0.5 ** np.arange(257, dtype=float))


@pytest.fixture
def white_cov() -> CovarianceSequence:
    values = np.zeros(129)
    values[0] = 1.0
    return CovarianceSequence(values)


@pytest.fixture
def cosine_symbol() -> Symbol:
    """Unit-power cosine line at 2 pi / 8."""
    return Symbol.line_spectrum([(COSINE_FREQUENCY, 1.0)])


@pytest.fixture
def cosine_cov(cosine_symbol: Symbol) -> CovarianceSequence:
    return covariance_from_symbol(cosine_symbol, 128)


@pytest.fixture
def two_line_symbol() -> Symbol:
    return Symbol.line_spectrum([(math.pi / 3, 1.0), (math.pi / 5, 2.0)])

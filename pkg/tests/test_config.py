"""Tests for our_pd_approx.config module."""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np
import pytest

from our_pd_approx.cli import PDApproxCLI
from our_pd_approx.config import (
    DEFAULT_OUTPUT_DIR,
    DEFAULT_SEED,
    ExperimentConfig,
    PsiBank,
    default_output_dir,
    parse_symbol_spec,
)
from our_pd_approx.errors import ConfigError, LengthError
from our_pd_approx.model import CovarianceSequence, Symbol, dump_covariance
from our_pd_approx.router import CommandRouter
from our_pd_approx.spectrum import Eigensolver


def _args(*argv: str) -> argparse.Namespace:
    return PDApproxCLI(router=CommandRouter()).parse_args(list(argv))


class TestParseSymbolSpec:
    """Tests for parse_symbol_spec."""

    @pytest.mark.parametrize(
        ("text", "expected"),
        [
            ("white", Symbol.white()),
            ("white:scale=2", Symbol.white(2.0)),
            ("bandlimited:W=0.7854", Symbol.bandlimited(0.7854)),
            ("ar1:rho=0.5", Symbol.ar1(0.5)),
            ("AR1: rho = -0.3, scale=2", Symbol.ar1(-0.3, 2.0)),
            ("lines:(0.7854,1);(1.0472,2)", Symbol.line_spectrum([(0.7854, 1.0), (1.0472, 2.0)])),
            ("lines:(0.5, 1);scale=3", Symbol.line_spectrum([(0.5, 1.0)], 3.0)),
        ],
    )
    def test_valid(self, text: str, expected: Symbol) -> None:
        """Should build the described symbol."""
        assert parse_symbol_spec(text) == expected

    @pytest.mark.parametrize(
        ("text", "path"),
        [
            ("pink", "config.symbol"),
            ("ar1", "config.symbol.rho"),
            ("ar1:rho=2", "config.symbol.rho"),
            ("ar1:rho=abc", "config.symbol.rho"),
            ("ar1:rho=nan", "config.symbol.rho"),
            ("white:W=1", "config.symbol.W"),
            ("bandlimited:W=4", "config.symbol.W"),
            ("ar1:rho", "config.symbol"),
            ("lines:(4,1)", "config.symbol.lines"),
            ("piecewise", "config.symbol"),
        ],
    )
    def test_invalid(self, text: str, path: str) -> None:
        """Should raise ConfigError naming the offending field."""
        with pytest.raises(ConfigError) as info:
            parse_symbol_spec(text)
        assert info.value.path == path

    def test_piecewise_needs_file(self) -> None:
        """Should point piecewise symbols at the file option."""
        with pytest.raises(ConfigError, match="--symbol-file"):
            parse_symbol_spec("piecewise")


class TestExperimentConfig:
    """Tests for ExperimentConfig validation and helpers."""

    def test_defaults(self) -> None:
        """Should default to N = 16 and the fixed seed."""
        config = ExperimentConfig(command="spectrum", symbol=Symbol.white())
        assert config.Ns == (16,)
        assert config.seed == DEFAULT_SEED == 20240101
        assert config.output_dir == DEFAULT_OUTPUT_DIR
        assert config.source_label == "white"

    @pytest.mark.parametrize(
        ("kwargs", "path"),
        [
            ({}, "config.source"),
            ({"symbol": Symbol.white(), "covariance": CovarianceSequence(np.ones(4))}, "config.source"),
            ({"symbol": Symbol.white(), "Ns": ()}, "config.Ns"),
            ({"symbol": Symbol.white(), "Ns": (4, 0)}, "config.Ns[1]"),
            ({"covariance": CovarianceSequence(np.ones(4)), "Ns": (8,)}, "config.Ns[0]"),
            ({"symbol": Symbol.white(), "Ns": (5000,)}, "config.Ns[0]"),
            ({"symbol": Symbol.white(), "Ns": (8, 600), "method": Eigensolver.JACOBI}, "config.Ns[1]"),
            ({"symbol": Symbol.white(), "Ns": (4, 8), "ns": (1, 5)}, "config.ns[1]"),
            ({"symbol": Symbol.white(), "ns": (0,)}, "config.ns[0]"),
            ({"symbol": Symbol.white(), "ns": (1,), "n_sweep": True}, "config.ns"),
            ({"symbol": Symbol.white(), "seed": -1}, "config.seed"),
            ({"symbol": Symbol.white(), "count": 0}, "config.count"),
            ({"symbol": Symbol.white(), "psi_count": 0}, "config.psi_count"),
            ({"symbol": Symbol.white(), "threshold": 1.0}, "config.threshold"),
            ({"symbol": Symbol.white(), "weyl_k": 0}, "config.weyl_k"),
        ],
    )
    def test_invalid(self, kwargs: dict[str, object], path: str) -> None:
        """Should raise ConfigError with the dotted field path."""
        with pytest.raises(ConfigError) as info:
            ExperimentConfig(command="approx", **kwargs)  # type: ignore[arg-type]
        assert info.value.path == path

    def test_large_window_allowed_on_request(self) -> None:
        """Should lift the lag cap with allow_large."""
        config = ExperimentConfig(command="spectrum", symbol=Symbol.white(), Ns=(5000,), allow_large=True)
        assert config.Ns == (5000,)

    def test_repro_needs_no_source(self) -> None:
        """Should accept repro without a process source."""
        config = ExperimentConfig(command="repro", Ns=(), quick=True)
        assert config.quick

    def test_ranks_for(self) -> None:
        """Should expand a sweep, keep explicit ranks and default to one."""
        sweep = ExperimentConfig(command="approx", symbol=Symbol.white(), Ns=(3,), n_sweep=True)
        explicit = ExperimentConfig(command="approx", symbol=Symbol.white(), ns=(1, 2))
        default = ExperimentConfig(command="approx", symbol=Symbol.white())
        assert sweep.ranks_for(3) == [1, 2, 3]
        assert explicit.ranks_for(16) == [1, 2]
        assert default.ranks_for(16) == [1]

    def test_covariance_for_symbol(self) -> None:
        """Should compute lags from the symbol."""
        config = ExperimentConfig(command="approx", symbol=Symbol.ar1(0.5), Ns=(4,))
        cov = config.covariance_for(10)
        assert cov.tau_max == 10
        np.testing.assert_allclose(cov.values, 0.5 ** np.arange(11), atol=1e-12)

    def test_covariance_for_short_sequence(self) -> None:
        """Should refuse to extend a given covariance sequence."""
        config = ExperimentConfig(command="realize", covariance=CovarianceSequence(np.ones(4)), Ns=(4,))
        assert config.covariance_for(3).tau_max == 3
        with pytest.raises(LengthError):
            config.covariance_for(8)
        assert config.source_label == "covariance"


class TestDefaultOutputDir:
    """Tests for default_output_dir."""

    def test_default(self) -> None:
        """Should fall back to ./pdapprox-out."""
        assert default_output_dir({}) == Path("pdapprox-out")

    def test_environment(self) -> None:
        """Should honour PDAPPROX_OUTPUT_DIR."""
        assert default_output_dir({"PDAPPROX_OUTPUT_DIR": "/tmp/runs"}) == Path("/tmp/runs")

    def test_blank_environment(self) -> None:
        """Should ignore a blank variable."""
        assert default_output_dir({"PDAPPROX_OUTPUT_DIR": "  "}) == DEFAULT_OUTPUT_DIR


class TestFromNamespace:
    """Tests for ExperimentConfig.from_namespace."""

    def test_symbol_run(self) -> None:
        """Should collect sizes, ranks and the timestamp."""
        args = _args("approx", "--symbol", "ar1:rho=0.5", "--N", "2", "4", "--n", "1")
        config = ExperimentConfig.from_namespace(args, {"PDAPPROX_OUTPUT_DIR": "/tmp/out"}, "2026-01-01T00:00:00")
        assert config.symbol == Symbol.ar1(0.5)
        assert config.Ns == (2, 4)
        assert config.ns == (1,)
        assert config.output_dir == Path("/tmp/out")
        assert config.timestamp == "2026-01-01T00:00:00"
        assert config.method is Eigensolver.LAPACK

    def test_explicit_output_dir_and_no_timestamp(self, tmp_path: Path) -> None:
        """Should prefer --output-dir and drop the timestamp on request."""
        args = _args("spectrum", "--symbol", "white", "--output-dir", str(tmp_path), "--no-timestamp")
        config = ExperimentConfig.from_namespace(args, {"PDAPPROX_OUTPUT_DIR": "/elsewhere"}, "ts")
        assert config.output_dir == tmp_path
        assert config.timestamp is None

    def test_sample_options(self) -> None:
        """Should read the sample-specific options."""
        args = _args("sample", "--symbol", "white", "--N", "4", "--count", "50", "--psi-bank", "canonical")
        config = ExperimentConfig.from_namespace(args, {})
        assert config.count == 50
        assert config.psi_bank is PsiBank.CANONICAL
        assert config.psi_count == 2

    def test_covariance_file(self, tmp_path: Path) -> None:
        """Should load a covariance CSV."""
        path = tmp_path / "cov.csv"
        dump_covariance(CovarianceSequence(0.5 ** np.arange(4.0)), path)
        config = ExperimentConfig.from_namespace(_args("approx", "--covariance", str(path), "--N", "4"), {})
        assert config.covariance is not None
        assert config.covariance.tau_max == 3

    def test_unreadable_covariance_file(self, tmp_path: Path) -> None:
        """Should report a missing file as a configuration error."""
        args = _args("approx", "--covariance", str(tmp_path / "missing.csv"))
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_namespace(args, {})
        assert info.value.path == "config.covariance"

    def test_exclusive_sources(self) -> None:
        """Should reject more than one process source."""
        args = _args("approx", "--symbol", "white", "--covariance", "cov.csv")
        with pytest.raises(ConfigError, match="mutually exclusive"):
            ExperimentConfig.from_namespace(args, {})

    def test_quadrature_options(self) -> None:
        """Should build the quadrature rule and map its errors to config paths."""
        config = ExperimentConfig.from_namespace(_args("spectrum", "--symbol", "white", "--quad-panels", "128"), {})
        assert config.quad.panels == 128
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_namespace(_args("spectrum", "--symbol", "white", "--quad-nodes", "1"), {})
        assert info.value.path == "config.quad.nodes_per_panel"

    def test_repro(self) -> None:
        """Should not require a source or window for repro."""
        config = ExperimentConfig.from_namespace(_args("repro", "--quick"), {})
        assert config.Ns == ()
        assert config.quick
        assert math.isclose(config.quad.tol, 1e-10)

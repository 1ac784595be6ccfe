"""Experiment configuration.

An ExperimentConfig is built once from parsed command-line arguments and the
environment, validated, and handed to a subcommand handler. Validation
failures raise ConfigError carrying the dotted path of the offending field.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import re
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import TypeVar

from .errors import ConfigError, LengthError, ValidationError
from .model import (
    TAU_MAX_CAP,
    CovarianceSequence,
    QuadratureSpec,
    Symbol,
    SymbolFamily,
    covariance_from_symbol,
    load_covariance,
    load_symbol,
)
from .spectrum import JACOBI_DIMENSION_CAP, Eigensolver

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "PDAPPROX_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = Path("pdapprox-out")
DEFAULT_SEED = 20240101

_Loaded = TypeVar("_Loaded")

_PAIR = re.compile(r"\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)")


class PsiBank(StrEnum):
    STANDARD = "standard"
    CANONICAL = "canonical"
    RANDOM = "random"


def default_output_dir(environ: Mapping[str, str] | None = None) -> Path:
    env = os.environ if environ is None else environ
    value = env.get(OUTPUT_DIR_ENV, "").strip()
    return Path(value) if value else DEFAULT_OUTPUT_DIR


def parse_symbol_spec(text: str) -> Symbol:
    """Parse ``FAMILY[:k=v,...]`` into a Symbol.

    Examples: ``white``, ``white:scale=2``, ``bandlimited:W=0.7854``,
    ``ar1:rho=0.5``, ``lines:(0.7854,1);(1.0472,2)``.
    """
    name, _, params = text.strip().partition(":")
    try:
        family = SymbolFamily(name.strip().lower())
    except ValueError as exc:
        raise ConfigError(f"unknown symbol family {name!r}", "config.symbol") from exc

    pairs: list[tuple[float, float]] = []
    if family is SymbolFamily.LINES:
        path = "config.symbol.lines"
        pairs = [(_number(t, path), _number(p, path)) for t, p in _PAIR.findall(params)]
        params = _PAIR.sub("", params)
    options = _key_values(params.replace(";", ","))

    allowed = {"scale"} | {SymbolFamily.BANDLIMITED: {"W"}, SymbolFamily.AR1: {"rho"}}.get(family, set())
    for key in options:
        if key not in allowed:
            raise ConfigError(f"parameter {key!r} does not apply to family {family.value}", f"config.symbol.{key}")

    try:
        scale = options.get("scale", 1.0)
        if family is SymbolFamily.WHITE:
            return Symbol.white(scale)
        if family is SymbolFamily.BANDLIMITED:
            return Symbol.bandlimited(_required_option(options, "W"), scale)
        if family is SymbolFamily.AR1:
            return Symbol.ar1(_required_option(options, "rho"), scale)
        if family is SymbolFamily.LINES:
            return Symbol.line_spectrum(pairs, scale)
    except ValidationError as exc:
        raise ConfigError(str(exc), f"config.symbol.{exc.field or 'value'}") from exc
    raise ConfigError("piecewise symbols are read from --symbol-file", "config.symbol")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated settings for one CLI run."""

    command: str
    symbol: Symbol | None = None
    covariance: CovarianceSequence | None = None
    Ns: tuple[int, ...] = (16,)
    ns: tuple[int, ...] = ()
    n_sweep: bool = False
    psi_bank: PsiBank = PsiBank.STANDARD
    psi_count: int = 20
    seed: int = DEFAULT_SEED
    count: int = 10_000
    output_dir: Path = DEFAULT_OUTPUT_DIR
    timestamp: str | None = None
    allow_large: bool = False
    method: Eigensolver = Eigensolver.LAPACK
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    threshold: float = 0.5
    weyl_k: int = 8
    dump_sigma_hat: bool = False
    quick: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.command != "repro":
            if (self.symbol is None) == (self.covariance is None):
                raise ConfigError("give exactly one of a symbol or a covariance sequence", "config.source")
            if not self.Ns:
                raise ConfigError("at least one window length is required", "config.Ns")
        for i, N in enumerate(self.Ns):
            if N < 1:
                raise ConfigError(f"window length must be at least 1, got {N}", f"config.Ns[{i}]")
            if self.covariance is not None and N > self.covariance.tau_max + 1:
                raise ConfigError(
                    f"N={N} needs lags up to {N - 1}, covariance has tau_max={self.covariance.tau_max}",
                    f"config.Ns[{i}]",
                )
            if self.covariance is None and N - 1 > TAU_MAX_CAP and not self.allow_large:
                raise ConfigError(f"N={N} exceeds the lag cap of {TAU_MAX_CAP}", f"config.Ns[{i}]")
            if self.method is Eigensolver.JACOBI and N > JACOBI_DIMENSION_CAP:
                raise ConfigError(f"--method jacobi supports N <= {JACOBI_DIMENSION_CAP}, got {N}", f"config.Ns[{i}]")
        smallest = min(self.Ns, default=0)
        for i, n in enumerate(self.ns):
            if n < 1:
                raise ConfigError(f"rank must be at least 1, got {n}", f"config.ns[{i}]")
            if self.Ns and n > smallest:
                raise ConfigError(f"rank n={n} exceeds the smallest window N={smallest}", f"config.ns[{i}]")
        if self.n_sweep and self.ns:
            raise ConfigError("--n and --n-sweep are mutually exclusive", "config.ns")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer", "config.seed")
        if self.count < 1:
            raise ConfigError(f"path count must be at least 1, got {self.count}", "config.count")
        if self.psi_count < 1:
            raise ConfigError(f"test bank size must be at least 1, got {self.psi_count}", "config.psi_count")
        if not 0 < self.threshold < 1:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}", "config.threshold")
        if self.weyl_k < 1:
            raise ConfigError(f"Weyl track count must be at least 1, got {self.weyl_k}", "config.weyl_k")

    def ranks_for(self, N: int) -> list[int]:
        """Ranks to evaluate at window length N (1..N for a sweep, 1 when unset)."""
        if self.n_sweep:
            return list(range(1, N + 1))
        return list(self.ns) if self.ns else [1]

    def covariance_for(self, tau_max: int) -> CovarianceSequence:
        """Covariance lags 0..tau_max from the configured source."""
        if self.covariance is not None:
            if self.covariance.tau_max < tau_max:
                raise LengthError(tau_max, self.covariance.tau_max)
            return self.covariance
        assert self.symbol is not None
        return covariance_from_symbol(self.symbol, tau_max, self.quad, allow_large=self.allow_large)

    @property
    def source_label(self) -> str:
        if self.symbol is not None:
            return self.symbol.family.value
        return "covariance"

    @classmethod
    def from_namespace(
        cls,
        args: argparse.Namespace,
        environ: Mapping[str, str] | None = None,
        timestamp: str | None = None,
    ) -> ExperimentConfig:
        symbol: Symbol | None = None
        covariance: CovarianceSequence | None = None
        spec = getattr(args, "symbol", None)
        symbol_file = getattr(args, "symbol_file", None)
        covariance_file = getattr(args, "covariance", None)
        sources = (("--symbol", spec), ("--symbol-file", symbol_file), ("--covariance", covariance_file))
        given = [name for name, value in sources if value]
        if len(given) > 1:
            raise ConfigError(f"{' and '.join(given)} are mutually exclusive", "config.source")
        if spec:
            symbol = parse_symbol_spec(spec)
        elif symbol_file:
            symbol = _load(load_symbol, symbol_file, "config.symbol_file")
        elif covariance_file:
            covariance = _load(load_covariance, covariance_file, "config.covariance")

        output_dir = getattr(args, "output_dir", None)
        defaults = QuadratureSpec()
        try:
            quad = QuadratureSpec(
                nodes_per_panel=getattr(args, "quad_nodes", defaults.nodes_per_panel),
                panels=getattr(args, "quad_panels", defaults.panels),
                tol=getattr(args, "quad_tol", defaults.tol),
            )
        except ValidationError as exc:
            raise ConfigError(str(exc), f"config.{exc.field or 'quad'}") from exc

        return cls(
            command=args.command,
            symbol=symbol,
            covariance=covariance,
            Ns=tuple(getattr(args, "Ns", None) or ((16,) if args.command != "repro" else ())),
            ns=tuple(getattr(args, "ns", None) or ()),
            n_sweep=bool(getattr(args, "n_sweep", False)),
            psi_bank=PsiBank(getattr(args, "psi_bank", PsiBank.STANDARD)),
            psi_count=getattr(args, "psi_count", 20),
            seed=getattr(args, "seed", DEFAULT_SEED),
            count=getattr(args, "count", 10_000),
            output_dir=Path(output_dir) if output_dir else default_output_dir(environ),
            timestamp=None if getattr(args, "no_timestamp", False) else timestamp,
            allow_large=bool(getattr(args, "allow_large_tau", False)),
            method=Eigensolver(getattr(args, "method", Eigensolver.LAPACK)),
            quad=quad,
            threshold=getattr(args, "threshold", 0.5),
            weyl_k=getattr(args, "weyl_k", 8),
            dump_sigma_hat=bool(getattr(args, "dump_sigma_hat", False)),
            quick=bool(getattr(args, "quick", False)),
        )


def _load(loader: Callable[[str], _Loaded], path: str, field_path: str) -> _Loaded:
    try:
        return loader(path)
    except ValidationError as exc:
        raise ConfigError(str(exc), field_path) from exc


def _key_values(text: str) -> dict[str, float]:
    options: dict[str, float] = {}
    for item in (part.strip() for part in text.split(",")):
        if not item:
            continue
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"expected key=value, got {item!r}", "config.symbol")
        options[key] = _number(value, f"config.symbol.{key}")
    return options


def _number(text: str, path: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise ConfigError(f"{text.strip()!r} is not a number", path) from exc
    if not math.isfinite(value):
        raise ConfigError(f"{text.strip()!r} is not finite", path)
    return value


def _required_option(options: Mapping[str, float], key: str) -> float:
    if key not in options:
        raise ConfigError("missing parameter", f"config.symbol.{key}")
    return options[key]

"""Spectral symbols and covariance sequences.

A Symbol is the spectral density phi(e^{i theta}) of a real stationary
process, described analytically by a family and its parameters. A
CovarianceSequence holds sigma(0..tau_max), the Fourier coefficients of the
symbol. The two are converted with composite Gauss-Legendre quadrature over
[0, pi]; every symbol is even, so the half circle carries all the
information.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import AccuracyError, ParseError, ValidationError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Integrand = Callable[[FloatArray], FloatArray]

TAU_MAX_CAP = 4096
FREQUENCY_RESOLUTION = 1e-8

# lags integrated per quadrature call; bounds the (lags x nodes) work array
_TAU_CHUNK = 128
_POSITIVITY_GRID = 257


class SymbolFamily(StrEnum):
    WHITE = "white"
    BANDLIMITED = "bandlimited"
    AR1 = "ar1"
    LINES = "lines"
    PIECEWISE = "piecewise"


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre rule settings.

    The panel count grows with the highest oscillation frequency of the
    integrand so that no panel spans more than ``max_phase_per_panel``
    radians of phase. Accuracy is estimated by comparing against the same
    rule on twice as many panels.
    """

    nodes_per_panel: int = 16
    panels: int = 64
    tol: float = 1e-10
    max_phase_per_panel: float = 8.0

    def __post_init__(self) -> None:
        if self.panels < 8:
            raise ValidationError("panel count must be at least 8", field="quad.panels")
        if self.nodes_per_panel < 2:
            raise ValidationError("need at least 2 nodes per panel", field="quad.nodes_per_panel")
        if not self.tol > 0:
            raise ValidationError("tolerance must be positive", field="quad.tol")
        if not self.max_phase_per_panel > 0:
            raise ValidationError("phase per panel must be positive", field="quad.max_phase_per_panel")

    def panels_for(self, bandwidth: float) -> int:
        """Panels needed on [0, pi] for an integrand oscillating up to ``bandwidth``."""
        return max(self.panels, math.ceil(math.pi * bandwidth / self.max_phase_per_panel))


@dataclass(frozen=True)
class Symbol:
    """Spectral density of a real stationary process.

    Line-spectral symbols are kept as (frequency, power) pairs with
    frequencies in [0, pi]; the power of a line at theta not in {0, pi}
    counts both of its +/- theta halves. Piecewise symbols are polynomials in
    |theta| between breakpoints 0 = theta_0 < ... < theta_m = pi, which makes
    them even by construction.
    """

    family: SymbolFamily
    scale: float = 1.0
    bandwidth: float | None = None
    rho: float | None = None
    lines: tuple[tuple[float, float], ...] = ()
    breakpoints: tuple[float, ...] = ()
    coefficients: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "family", SymbolFamily(self.family))
        except ValueError as exc:
            raise ValidationError(f"unknown family {self.family!r}", field="family") from exc
        _require_finite(self.scale, "scale")
        if not self.scale > 0:
            raise ValidationError("scale must be positive", field="scale")
        if self.family is SymbolFamily.BANDLIMITED:
            if self.bandwidth is None:
                raise ValidationError("band-limited symbol needs a half-bandwidth", field="W")
            _require_finite(self.bandwidth, "W")
            if not 0 < self.bandwidth <= math.pi:
                raise ValidationError(f"half-bandwidth must lie in (0, pi], got {self.bandwidth!r}", field="W")
        elif self.family is SymbolFamily.AR1:
            if self.rho is None:
                raise ValidationError("AR(1) symbol needs a pole", field="rho")
            _require_finite(self.rho, "rho")
            if not -1 < self.rho < 1:
                raise ValidationError(f"pole must lie inside the unit disc, got {self.rho!r}", field="rho")
        elif self.family is SymbolFamily.LINES:
            object.__setattr__(self, "lines", _validated_lines(self.lines))
        elif self.family is SymbolFamily.PIECEWISE:
            self._validate_piecewise()

    # -- constructors -------------------------------------------------------

    @classmethod
    def white(cls, scale: float = 1.0) -> Symbol:
        return cls(SymbolFamily.WHITE, scale=scale)

    @classmethod
    def bandlimited(cls, bandwidth: float, scale: float = 1.0) -> Symbol:
        return cls(SymbolFamily.BANDLIMITED, scale=scale, bandwidth=bandwidth)

    @classmethod
    def ar1(cls, rho: float, scale: float = 1.0) -> Symbol:
        return cls(SymbolFamily.AR1, scale=scale, rho=rho)

    @classmethod
    def line_spectrum(cls, lines: Iterable[Sequence[float]], scale: float = 1.0) -> Symbol:
        return cls(SymbolFamily.LINES, scale=scale, lines=tuple((float(t), float(p)) for t, p in lines))

    @classmethod
    def piecewise(
        cls,
        breakpoints: Sequence[float],
        coefficients: Sequence[Sequence[float]],
        scale: float = 1.0,
    ) -> Symbol:
        return cls(
            SymbolFamily.PIECEWISE,
            scale=scale,
            breakpoints=tuple(float(b) for b in breakpoints),
            coefficients=tuple(tuple(float(c) for c in piece) for piece in coefficients),
        )

    # -- evaluation ---------------------------------------------------------

    @property
    def is_line_spectral(self) -> bool:
        return self.family is SymbolFamily.LINES

    @property
    def line_rank(self) -> int:
        """Rank of the covariance of a line-spectral process."""
        if not self.is_line_spectral:
            raise ValidationError("only line spectra have finite rank", field="family")
        return sum(1 if _is_real_frequency(theta) else 2 for theta, _ in self.lines)

    def half_circle_breakpoints(self) -> tuple[float, ...]:
        """Breakpoints on [0, pi] where the density may jump."""
        if self.family is SymbolFamily.PIECEWISE:
            return self.breakpoints
        if self.family is SymbolFamily.BANDLIMITED and self.bandwidth is not None and self.bandwidth < math.pi:
            return (0.0, self.bandwidth, math.pi)
        return (0.0, math.pi)

    def evaluate(self, theta: ArrayLike) -> FloatArray:
        """Density values phi(e^{i theta}) on a grid in [-pi, pi]."""
        th = np.abs(np.asarray(theta, dtype=float))
        if self.family is SymbolFamily.WHITE:
            return np.full(th.shape, self.scale)
        if self.family is SymbolFamily.BANDLIMITED:
            assert self.bandwidth is not None
            return np.where(th <= self.bandwidth, self.scale, 0.0)
        if self.family is SymbolFamily.AR1:
            assert self.rho is not None
            rho = self.rho
            return self.scale * (1.0 - rho * rho) / (1.0 - 2.0 * rho * np.cos(th) + rho * rho)
        if self.family is SymbolFamily.PIECEWISE:
            edges = np.asarray(self.breakpoints)
            piece = np.clip(np.searchsorted(edges, th, side="right") - 1, 0, len(self.coefficients) - 1)
            out = np.empty(th.shape)
            for k, coeffs in enumerate(self.coefficients):
                mask = piece == k
                out[mask] = np.polynomial.polynomial.polyval(th[mask], coeffs)
            return self.scale * out
        raise ValidationError("line spectra have no density; use the (frequency, power) pairs", field="family")

    def ess_sup(self) -> float | None:
        """Essential supremum of the density, or None for line spectra."""
        if self.family in (SymbolFamily.WHITE, SymbolFamily.BANDLIMITED):
            return self.scale
        if self.family is SymbolFamily.AR1:
            assert self.rho is not None
            r = abs(self.rho)
            return self.scale * (1.0 + r) / (1.0 - r)
        if self.family is SymbolFamily.PIECEWISE:
            return float(np.max(self._piecewise_grid_values()))
        return None

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"family": self.family.value, "scale": self.scale}
        if self.family is SymbolFamily.BANDLIMITED:
            data["W"] = self.bandwidth
        elif self.family is SymbolFamily.AR1:
            data["rho"] = self.rho
        elif self.family is SymbolFamily.LINES:
            data["lines"] = [[theta, power] for theta, power in self.lines]
        elif self.family is SymbolFamily.PIECEWISE:
            data["breakpoints"] = list(self.breakpoints)
            data["coefficients"] = [list(piece) for piece in self.coefficients]
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Symbol:
        if not isinstance(data, dict):
            raise ValidationError("symbol must be a JSON object")
        try:
            family = SymbolFamily(data.get("family"))
        except ValueError as exc:
            raise ValidationError(f"unknown family {data.get('family')!r}", field="family") from exc
        scale = _as_float(data.get("scale", 1.0), "scale")
        if family is SymbolFamily.WHITE:
            return cls.white(scale)
        if family is SymbolFamily.BANDLIMITED:
            return cls.bandlimited(_as_float(_required(data, "W"), "W"), scale)
        if family is SymbolFamily.AR1:
            return cls.ar1(_as_float(_required(data, "rho"), "rho"), scale)
        if family is SymbolFamily.LINES:
            raw = _required(data, "lines")
            try:
                pairs = [(_as_float(t, "lines"), _as_float(p, "lines")) for t, p in raw]
            except (TypeError, ValueError) as exc:
                raise ValidationError("lines must be [frequency, power] pairs", field="lines") from exc
            return cls.line_spectrum(pairs, scale)
        breakpoints = [_as_float(b, "breakpoints") for b in _required(data, "breakpoints")]
        coefficients = [[_as_float(c, "coefficients") for c in piece] for piece in _required(data, "coefficients")]
        return cls.piecewise(breakpoints, coefficients, scale)

    # -- internals ----------------------------------------------------------

    def _validate_piecewise(self) -> None:
        edges = self.breakpoints
        if len(edges) < 2:
            raise ValidationError("need at least two breakpoints", field="breakpoints")
        for value in edges:
            _require_finite(value, "breakpoints")
        if abs(edges[0]) > 0 or not math.isclose(edges[-1], math.pi, rel_tol=0, abs_tol=1e-12):
            raise ValidationError(
                "piecewise symbols are given on [0, pi] and mirrored to stay even",
                field="breakpoints",
            )
        if any(b <= a for a, b in zip(edges[:-1], edges[1:], strict=False)):
            raise ValidationError("breakpoints must be strictly increasing", field="breakpoints")
        if len(self.coefficients) != len(edges) - 1:
            raise ValidationError(
                f"expected {len(edges) - 1} coefficient lists, got {len(self.coefficients)}",
                field="coefficients",
            )
        for piece in self.coefficients:
            if not piece:
                raise ValidationError("empty coefficient list", field="coefficients")
            for value in piece:
                _require_finite(value, "coefficients")
        if float(np.min(self._piecewise_grid_values())) < 0:
            raise ValidationError("symbol takes negative values", field="coefficients")

    def _piecewise_grid_values(self) -> FloatArray:
        values = []
        for (a, b), coeffs in zip(
            zip(self.breakpoints[:-1], self.breakpoints[1:], strict=False), self.coefficients, strict=False
        ):
            grid = np.linspace(a, b, _POSITIVITY_GRID)
            values.append(np.polynomial.polynomial.polyval(grid, coeffs))
        return self.scale * np.concatenate(values)


@dataclass(frozen=True, eq=False)
class CovarianceSequence:
    """Covariances sigma(0..tau_max) of a real stationary process.

    Only nonnegative lags are stored; sigma(-tau) = sigma(tau).
    """

    values: FloatArray
    origin: Symbol | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValidationError("covariance must be a non-empty 1-D sequence", field="values")
        if not np.all(np.isfinite(values)):
            raise ValidationError("covariance contains NaN or Inf", field="values")
        if not values[0] > 0:
            raise ValidationError("sigma(0) must be positive", field="values[0]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def tau_max(self) -> int:
        return int(self.values.size - 1)

    @property
    def variance(self) -> float:
        return float(self.values[0])

    def __len__(self) -> int:
        return int(self.values.size)

    def lag(self, tau: int) -> float:
        return float(self.values[abs(tau)])


def half_circle_integral(
    integrand: Integrand,
    breakpoints: Sequence[float],
    quad: QuadratureSpec,
    bandwidth: float = 0.0,
    scale: float | None = None,
) -> tuple[FloatArray, float]:
    """Integrate a batch of functions over [breakpoints[0], breakpoints[-1]].

    ``integrand`` maps node positions of shape (k,) to values of shape
    (m, k); the result has shape (m,). Breakpoints always fall on panel
    edges, so jumps of the integrand cost no accuracy.

    Returns the refined estimate and the achieved residual. Raises
    AccuracyError when the residual exceeds ``quad.tol`` relative to
    ``scale`` (default: the largest magnitude of the result).
    """
    panels = quad.panels_for(bandwidth)
    coarse = _apply_rule(integrand, breakpoints, panels, quad.nodes_per_panel)
    fine = _apply_rule(integrand, breakpoints, 2 * panels, quad.nodes_per_panel)
    residual = float(np.max(np.abs(fine - coarse))) if fine.size else 0.0
    reference = scale if scale is not None else (float(np.max(np.abs(fine))) if fine.size else 0.0)
    if residual > quad.tol * max(reference, np.finfo(float).tiny):
        raise AccuracyError("quadrature did not reach tolerance", residual)
    return fine, residual


def _apply_rule(integrand: Integrand, breakpoints: Sequence[float], panels: int, nodes: int) -> FloatArray:
    x, w = np.polynomial.legendre.leggauss(nodes)
    span = breakpoints[-1] - breakpoints[0]
    thetas: list[FloatArray] = []
    weights: list[FloatArray] = []
    for a, b in zip(breakpoints[:-1], breakpoints[1:], strict=False):
        count = max(1, math.ceil(panels * (b - a) / span))
        edges = np.linspace(a, b, count + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        thetas.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
        weights.append((half[:, None] * w[None, :]).ravel())
    theta = np.concatenate(thetas)
    values = np.atleast_2d(integrand(theta))
    return np.asarray(values @ np.concatenate(weights), dtype=float)


def covariance_from_symbol(
    symbol: Symbol,
    tau_max: int,
    quad: QuadratureSpec | None = None,
    allow_large: bool = False,
) -> CovarianceSequence:
    """Fourier coefficients sigma(tau) = (1/2pi) int phi e^{i theta tau} d theta.

    Line spectra use the closed form sigma(tau) = sum_k p_k cos(theta_k tau).
    """
    if tau_max < 0:
        raise ValidationError(f"tau_max must be nonnegative, got {tau_max}", field="tau_max")
    if tau_max > TAU_MAX_CAP and not allow_large:
        raise ValidationError(
            f"tau_max={tau_max} exceeds the cap of {TAU_MAX_CAP}; pass allow_large=True to override",
            field="tau_max",
        )
    taus = np.arange(tau_max + 1, dtype=float)

    if symbol.is_line_spectral:
        thetas = np.array([theta for theta, _ in symbol.lines])
        powers = symbol.scale * np.array([power for _, power in symbol.lines])
        values = np.cos(np.outer(taus, thetas)) @ powers
        return CovarianceSequence(values, origin=symbol)

    quad = quad or QuadratureSpec()
    edges = symbol.half_circle_breakpoints()
    # (1/2pi) int_{-pi}^{pi} = (1/pi) int_0^{pi} for even integrands
    total, _ = half_circle_integral(lambda th: symbol.evaluate(th)[None, :], edges, quad)
    reference = abs(float(total[0]))

    values = np.empty(tau_max + 1)
    worst = 0.0
    for start in range(0, tau_max + 1, _TAU_CHUNK):
        block = taus[start : start + _TAU_CHUNK]

        def integrand(th: FloatArray, block: FloatArray = block) -> FloatArray:
            return symbol.evaluate(th)[None, :] * np.cos(np.outer(block, th))

        chunk, residual = half_circle_integral(integrand, edges, quad, bandwidth=float(block[-1]), scale=reference)
        values[start : start + block.size] = chunk / math.pi
        worst = max(worst, residual / math.pi)

    logger.debug("covariance_from_symbol family=%s tau_max=%d residual=%.3g", symbol.family, tau_max, worst)
    return CovarianceSequence(values, origin=symbol)


def partial_symbol(cov: CovarianceSequence, theta: ArrayLike) -> FloatArray:
    """Truncated Fourier sum sum_{|tau| <= tau_max} e^{-i theta tau} sigma(tau)."""
    grid = np.atleast_1d(np.asarray(theta, dtype=float))
    if grid.size == 0:
        raise ValidationError("frequency grid is empty", field="theta")
    if np.any(np.abs(grid) > math.pi + 1e-12):
        raise ValidationError("frequency grid must lie in [-pi, pi]", field="theta")
    sigma = cov.values
    lags = np.arange(1, sigma.size, dtype=float)
    phase = np.exp(-1j * np.outer(grid, lags))
    positive = phase @ sigma[1:]
    negative = phase.conj() @ sigma[1:]
    total = sigma[0] + positive + negative
    imaginary = float(np.max(np.abs(total.imag)))
    if imaginary > 1e-12 * sigma[0]:
        raise AccuracyError("partial symbol has a non-negligible imaginary part", imaginary)
    return np.asarray(total.real, dtype=float)


def load_covariance(path: str | Path, format: str | None = None) -> CovarianceSequence:
    """Read a covariance sequence from CSV (``tau,sigma``) or JSON (``{"sigma": [...]}``)."""
    path = Path(path)
    kind = (format or path.suffix.lstrip(".")).lower()
    if kind == "csv":
        return _load_covariance_csv(path)
    if kind == "json":
        data = _load_json(path)
        if not isinstance(data, dict) or "sigma" not in data:
            raise ParseError('expected an object with a "sigma" array', field="sigma")
        try:
            values = [float(v) for v in data["sigma"]]
        except (TypeError, ValueError) as exc:
            raise ParseError("sigma entries must be numbers", field="sigma") from exc
        return CovarianceSequence(np.array(values))
    raise ParseError(f"unsupported covariance format {kind!r}", field="format")


def load_symbol(path: str | Path, format: str | None = None) -> Symbol:
    """Read a Symbol from its JSON description."""
    path = Path(path)
    kind = (format or path.suffix.lstrip(".") or "json").lower()
    if kind != "json":
        raise ParseError(f"unsupported symbol format {kind!r}", field="format")
    return Symbol.from_dict(_load_json(path))


def dump_covariance(cov: CovarianceSequence, path: str | Path, comment: str | None = None) -> None:
    """Write ``cov`` as a ``tau,sigma`` CSV readable by load_covariance."""
    with Path(path).open("w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tau", "sigma"])
        for tau, value in enumerate(cov.values):
            writer.writerow([tau, repr(float(value))])


def _load_covariance_csv(path: Path) -> CovarianceSequence:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    values: list[float] = []
    header_seen = False
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or row[0].lstrip().startswith("#"):
            continue
        cells = [cell.strip() for cell in row]
        if not header_seen:
            if cells != ["tau", "sigma"]:
                raise ParseError(f"expected header 'tau,sigma', got {','.join(cells)!r}", line=lineno)
            header_seen = True
            continue
        if len(cells) != 2:
            raise ParseError(f"expected 2 columns, got {len(cells)}", line=lineno)
        try:
            tau = int(cells[0])
            sigma = float(cells[1])
        except ValueError as exc:
            raise ParseError(f"cannot parse row {','.join(cells)!r}", line=lineno) from exc
        if tau != len(values):
            raise ParseError(f"expected tau={len(values)}, got tau={tau}", line=lineno, field="tau")
        if not math.isfinite(sigma):
            raise ParseError("sigma is NaN or Inf", line=lineno, field="sigma")
        values.append(sigma)
    if not header_seen:
        raise ParseError("missing header 'tau,sigma'", line=1)
    return CovarianceSequence(np.array(values))


def _load_json(path: Path) -> Any:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc


def _reject_constant(name: str) -> float:
    raise ParseError(f"non-finite constant {name} is not allowed")


def _validated_lines(lines: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    pairs = sorted((float(theta), float(power)) for theta, power in lines)
    if not pairs:
        raise ValidationError("line spectrum needs at least one line", field="lines")
    for theta, power in pairs:
        _require_finite(theta, "lines")
        _require_finite(power, "lines")
        if not 0.0 <= theta <= math.pi:
            raise ValidationError(f"line frequency {theta!r} outside [0, pi]", field="lines")
        if not power > 0:
            raise ValidationError(f"line power {power!r} must be positive", field="lines")
    for (a, _), (b, _) in zip(pairs[:-1], pairs[1:], strict=False):
        if b - a <= FREQUENCY_RESOLUTION:
            raise ValidationError(f"line frequencies {a!r} and {b!r} coincide", field="lines")
    return tuple(pairs)


def _is_real_frequency(theta: float) -> bool:
    return theta <= FREQUENCY_RESOLUTION or theta >= math.pi - FREQUENCY_RESOLUTION


def _require_finite(value: float, field: str) -> None:
    if not math.isfinite(value):
        raise ValidationError(f"{value!r} is not finite", field=field)


def _required(data: dict[str, Any], key: str) -> Any:
    if key not in data:
        raise ValidationError("missing parameter", field=key)
    return data[key]


def _as_float(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ValidationError(f"expected a number, got {value!r}", field=field)
    result = float(value)
    _require_finite(result, field)
    return result

"""Command-line front-end for our-pd-approx.

Parses arguments into an ExperimentConfig, dispatches to the registered
subcommand and maps failures onto exit codes. External pieces (the router,
the clock used for timestamps, extra error handlers) are injectable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from collections.abc import Callable, Mapping, Sequence
from datetime import UTC, datetime

from .config import DEFAULT_SEED, OUTPUT_DIR_ENV, ExperimentConfig, PsiBank
from .errors import AcceptanceFailure, ConfigError, PDApproxError, ValidationError
from .reports import dumps_json, error_report
from .router import CommandRouter
from .spectrum import Eigensolver

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

ErrorHandler = Callable[[Exception, str], int]


def _report_error(exc: Exception, command: str, code: int, **extra: object) -> int:
    print(dumps_json(error_report(str(exc), command=command, **extra)), file=sys.stderr)
    return code


def _config_error(exc: Exception, command: str) -> int:
    path = getattr(exc, "path", None) or getattr(exc, "field", None)
    return _report_error(exc, command, EXIT_CONFIG, field=path)


def _acceptance_failure(exc: Exception, command: str) -> int:
    return _report_error(exc, command, EXIT_FAILURE, failed=getattr(exc, "failed", []))


def _library_error(exc: Exception, command: str) -> int:
    return _report_error(exc, command, EXIT_FAILURE, kind=type(exc).__name__)


DEFAULT_ERROR_HANDLERS: list[tuple[type[Exception], ErrorHandler]] = [
    (ConfigError, _config_error),
    (ValidationError, _config_error),
    (AcceptanceFailure, _acceptance_failure),
    (PDApproxError, _library_error),
]


class PDApproxCLI:
    """Argument parsing, logging setup and error handling around the command router.

    Example:
        PDApproxCLI().run(["approx", "--symbol", "ar1:rho=0.5", "--N", "2", "--n", "1"])

        # With a custom handler checked before the defaults:
        PDApproxCLI(error_handlers=[(AccuracyError, my_handler)]).run(argv)
    """

    prog: str = "pd-approx"
    description: str = "Finite-rank purely deterministic approximation of stationary processes"

    def __init__(
        self,
        router: CommandRouter | None = None,
        error_handlers: list[tuple[type[Exception], ErrorHandler]] | None = None,
        clock: Callable[[], datetime] | None = None,
        environ: Mapping[str, str] | None = None,
    ) -> None:
        """Initialize the CLI.

        Args:
            router: Command registry; defaults to the built-in subcommands.
            error_handlers: Optional list of (ExceptionType, handler) tuples checked
                            in order before the defaults; first match wins. Handler
                            receives (exception, command) and returns the exit code.
            clock: Source of the timestamp written into output files.
            environ: Environment used for defaults such as the output directory.
        """
        if router is None:
            from .commands import router as default_router

            router = default_router
        self.router = router
        self._error_handlers = (error_handlers or []) + DEFAULT_ERROR_HANDLERS
        self._clock = clock or (lambda: datetime.now(UTC))
        self._environ = environ

    def build_parser(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        source = common.add_argument_group("process source")
        source.add_argument("--symbol", help="symbol spec, e.g. ar1:rho=0.5 or lines:(0.7854,1)")
        source.add_argument("--symbol-file", help="symbol JSON file")
        source.add_argument("--covariance", help="covariance CSV (tau,sigma) or JSON ({\"sigma\": [...]})")
        sizes = common.add_argument_group("sizes")
        sizes.add_argument("--N", dest="Ns", type=int, nargs="+", help="window lengths")
        sizes.add_argument("--n", dest="ns", type=int, nargs="+", help="approximation ranks")
        sizes.add_argument("--n-sweep", action="store_true", help="evaluate every rank 1..N")
        sizes.add_argument("--allow-large-tau", action="store_true", help="lift the covariance lag cap")
        numerics = common.add_argument_group("numerics")
        numerics.add_argument("--method", choices=[m.value for m in Eigensolver], default=Eigensolver.LAPACK.value)
        numerics.add_argument("--quad-nodes", type=int, default=16, help="Gauss-Legendre nodes per panel")
        numerics.add_argument("--quad-panels", type=int, default=64, help="base panel count on [0, pi]")
        numerics.add_argument("--quad-tol", type=float, default=1e-10, help="relative quadrature tolerance")
        output = common.add_argument_group("output")
        output.add_argument("--seed", type=int, default=DEFAULT_SEED)
        output.add_argument("--output-dir", help=f"artifact directory (default: ${OUTPUT_DIR_ENV} or ./pdapprox-out)")
        output.add_argument("--no-timestamp", action="store_true", help="omit the generated timestamp")

        parser = argparse.ArgumentParser(prog=self.prog, description=self.description)
        parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
        sub = parser.add_subparsers(dest="command", required=True)

        spectrum = sub.add_parser("spectrum", parents=[common], help="eigenvalues, Weyl tracks, effective rank")
        spectrum.add_argument("--threshold", type=float, default=0.5, help="cutoff as a fraction of lambda_1")
        spectrum.add_argument("--weyl-k", type=int, default=8, help="number of eigenvalues to track across N")

        approx = sub.add_parser("approx", parents=[common], help="optimal rank-n approximations")
        approx.add_argument("--dump-sigma-hat", action="store_true", help="write each Sigma-hat as CSV")

        sub.add_parser("realize", parents=[common], help="stationary extensions and line spectra")

        for name, help_text in (("converge", "weak convergence tables"), ("sample", "Monte Carlo checks")):
            command = sub.add_parser(name, parents=[common], help=help_text)
            command.add_argument("--psi-bank", choices=[b.value for b in PsiBank], default=PsiBank.STANDARD.value)
            command.add_argument("--psi-count", type=int, default=20 if name == "converge" else 2)
            if name == "sample":
                command.add_argument("--count", type=int, default=10_000, help="number of sample paths")

        repro = sub.add_parser("repro", parents=[common], help="run the acceptance suite")
        repro.add_argument("--quick", action="store_true", help="reduced matrix for smoke runs")
        return parser

    def parse_args(self, argv: Sequence[str] | None = None) -> argparse.Namespace:
        """Parse command line arguments."""
        return self.build_parser().parse_args(argv)

    def configure_logging(self, verbosity: int) -> None:
        level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
        logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")

    def run(self, argv: Sequence[str] | None = None) -> int:
        """Run one subcommand and return its exit code."""
        args = self.parse_args(argv)
        self.configure_logging(args.verbose)
        command = args.command
        try:
            timestamp = self._clock().isoformat(timespec="seconds")
            config = ExperimentConfig.from_namespace(args, self._environ, timestamp)
            logger.info("%s: writing artifacts to %s", command, config.output_dir)
            result = self.router.dispatch(command, config)
            print(dumps_json(result))
            return EXIT_OK if result.get("success") else EXIT_FAILURE

        except Exception as e:
            for exc_type, handler in self._error_handlers:
                if isinstance(e, exc_type):
                    return handler(e, command)

            logger.exception(f"Unexpected error in command {command}")
            print(dumps_json(error_report(f"Internal error: {e!s}")), file=sys.stderr)
            return EXIT_FAILURE


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(PDApproxCLI(environ=os.environ).run(argv))


if __name__ == "__main__":
    main()

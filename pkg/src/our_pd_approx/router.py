"""Command routing helper for the experiment CLI.

Provides a decorator-based registry for dispatching subcommands to handler functions.
"""

from __future__ import annotations

from collections.abc import Callable
from typing import TYPE_CHECKING, Any

from .errors import ConfigError

if TYPE_CHECKING:
    from .config import ExperimentConfig

Handler = Callable[["ExperimentConfig"], dict[str, Any]]


class CommandRouter:
    """Simple command routing helper.

    Allows registering subcommand handlers and dispatching to them by name.

    Example:
        router = CommandRouter()

        @router.register("spectrum")
        def run_spectrum(config: ExperimentConfig) -> dict:
            return success_report("spectrum", results=[...])

        # In the CLI:
        report = router.dispatch(config.command, config)
    """

    def __init__(self) -> None:
        self._handlers: dict[str, Handler] = {}

    def register(self, name: str) -> Callable[[Handler], Handler]:
        """Decorator to register a command handler.

        Args:
            name: Subcommand name to register
        """

        def decorator(func: Handler) -> Handler:
            self._handlers[name] = func
            return func

        return decorator

    def dispatch(self, name: str, config: ExperimentConfig) -> dict[str, Any]:
        """Dispatch to the appropriate handler.

        Args:
            name: Subcommand name
            config: Validated experiment configuration

        Returns:
            Handler report

        Raises:
            ConfigError: If no handler is registered under ``name``
        """
        handler = self._handlers.get(name)
        if handler is None:
            raise ConfigError(f"Unknown command: {name}", "config.command")
        return handler(config)

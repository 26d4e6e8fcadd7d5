"""A small command-line application shell.

Feature packages register subcommands on a `CommandRouter`; `CliApp` collects
the routers, exposes every `Settings` field as a flag (``BATCH_SIZE`` is
``--batch-size``), resolves exception handlers by exception type and times
each command.
"""

import argparse
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from pydantic_settings import BaseSettings

from labelrepair.core.exceptions import ArgumentError
from labelrepair.core.settings import Settings, load_settings
from labelrepair.core.timing import log_duration

logger = logging.getLogger(__name__)

type Handler = Callable[[argparse.Namespace, Settings], int | None]
type ExceptionHandler = Callable[[Exception], int]


@dataclass(frozen=True)
class Argument:
    """One command-specific argument, forwarded to `add_argument`."""

    flags: tuple[str, ...]
    options: dict[str, Any] = field(default_factory=dict)


def argument(*flags: str, **options: Any) -> Argument:
    return Argument(flags=flags, options=options)


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    handler: Handler
    arguments: tuple[Argument, ...] = ()
    # the argument holding the KEY=value configuration file
    config_argument: str = "config"


class CommandRouter:
    def __init__(self, tags: Sequence[str] = ()):
        self.tags = tuple(tags)
        self.commands: list[Command] = []

    def command(
        self,
        name: str,
        help: str,
        arguments: Sequence[Argument] = (),
        config_argument: str = "config",
    ) -> Callable[[Handler], Handler]:
        def register(handler: Handler) -> Handler:
            self.commands.append(
                Command(name, help, handler, tuple(arguments), config_argument)
            )
            return handler

        return register


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ArgumentError(f"{self.prog}: {message}")


def settings_flag(name: str) -> str:
    return "--" + name.lower().replace("_", "-")


def _add_settings_flags(parser: argparse.ArgumentParser, settings_cls) -> None:
    group = parser.add_argument_group("configuration (KEY=value file keys)")
    for name, info in settings_cls.model_fields.items():
        if info.annotation is bool:
            group.add_argument(
                settings_flag(name),
                dest=name,
                action=argparse.BooleanOptionalAction,
                default=argparse.SUPPRESS,
                help=f"{name} (default {info.default})",
            )
        else:
            group.add_argument(
                settings_flag(name),
                dest=name,
                default=argparse.SUPPRESS,
                metavar="VALUE",
                help=f"{name} (default {info.default})",
            )


class CliApp:
    def __init__(
        self,
        title: str,
        version: str,
        settings_cls: type[BaseSettings] = Settings,
    ):
        self.title = title
        self.version = version
        self.settings_cls = settings_cls
        self.routers: list[CommandRouter] = []
        self.exception_handlers: dict[type[BaseException], ExceptionHandler] = {}

    def include_router(self, router: CommandRouter) -> None:
        self.routers.append(router)

    def add_exception_handler(
        self, exc_class: type[BaseException], handler: ExceptionHandler
    ) -> None:
        self.exception_handlers[exc_class] = handler

    @property
    def commands(self) -> dict[str, Command]:
        return {c.name: c for router in self.routers for c in router.commands}

    def build_parser(self) -> argparse.ArgumentParser:
        parser = _Parser(prog=self.title, description=f"{self.title} {self.version}")
        parser.add_argument(
            "--version", action="version", version=f"{self.title} {self.version}"
        )
        subparsers = parser.add_subparsers(dest="command", required=True)
        for command in self.commands.values():
            sub = subparsers.add_parser(command.name, help=command.help)
            for arg in command.arguments:
                sub.add_argument(*arg.flags, **arg.options)
            if command.config_argument == "config":
                sub.add_argument(
                    "--config", type=Path, default=None, help="KEY=value settings file"
                )
            _add_settings_flags(sub, self.settings_cls)
        return parser

    def handle_exception(self, exc: Exception) -> int:
        for cls in type(exc).__mro__:
            handler = self.exception_handlers.get(cls)
            if handler is not None:
                return handler(exc)
        raise exc

    def _settings(self, command: Command, namespace: argparse.Namespace) -> Settings:
        overrides = {
            name: getattr(namespace, name)
            for name in self.settings_cls.model_fields
            if hasattr(namespace, name)
        }
        config = getattr(namespace, command.config_argument)
        settings = load_settings(config, **overrides)
        logging.getLogger().setLevel(settings.LOG_LEVEL.upper())
        for key, value in settings.resolved().items():
            logger.info(f"config {key}={value}")
        return settings

    def run(self, argv: Sequence[str] | None = None) -> int:
        try:
            namespace = self.build_parser().parse_args(argv)
        except SystemExit as exc:
            # --help and --version
            return int(exc.code or 0)
        except Exception as exc:
            return self.handle_exception(exc)

        command = self.commands[namespace.command]
        with log_duration(f"Command {command.name}"):
            try:
                settings = self._settings(command, namespace)
                return command.handler(namespace, settings) or 0
            except Exception as exc:
                return self.handle_exception(exc)

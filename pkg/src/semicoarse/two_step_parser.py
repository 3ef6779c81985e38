"""Subcommand parser with position-independent global options and shared option groups.

``semicoarse solve --n 6 -v`` and ``semicoarse -v solve --n 6`` parse alike: a
first pass pulls the global options out of the whole command line, a second
pass parses the command itself. Generator, LP and schedule flags are declared
once as named groups and attached to the commands that take them.

Example:
    >>> parser = TwoStepParser(description="solver")
    >>> parser.add_global_argument("--verbose", "-v", action="store_true")
    >>> grid = parser.add_shared_group("grid", title="grid options")
    >>> grid.add_argument("--n", type=int, default=10)
    >>> solve = parser.add_command("solve", help="Solve an LP", groups=["grid"])
    >>> kind = solve.add_argument("--kind", default="cce")
    >>> parser.parse_args(["solve", "--n", "6", "-v"]).n
    6
"""

import argparse
from dataclasses import dataclass, field
from typing import Any


ArgumentSpec = tuple[tuple[str, ...], dict[str, Any]]


def _collector() -> argparse.ArgumentParser:
    # holds actions until the real parser exists
    return argparse.ArgumentParser(add_help=False)


def _copy_actions(source: argparse.ArgumentParser, target: Any) -> None:
    for action in source._actions:
        if action.dest != "help":
            target._add_action(action)


@dataclass
class _CommandSpec:
    options: dict[str, Any]
    groups: list[str]
    collector: argparse.ArgumentParser = field(default_factory=_collector)


class TwoStepParser:
    """Parse ``[globals] command [args and globals]`` in two passes.

    Pass one reads only the global options with ``parse_known_args``; pass two
    builds the full parser with subcommands. Global values from pass one
    overwrite whatever the subcommand section left in the namespace.
    """

    def __init__(
        self,
        description: str | None = None,
        formatter_class: type[argparse.HelpFormatter] = argparse.RawDescriptionHelpFormatter,
        **kwargs: Any,
    ) -> None:
        self.description = description
        self.formatter_class = formatter_class
        self.parser_kwargs = kwargs
        self._globals: list[ArgumentSpec] = []
        self._shared: dict[str, tuple[str, argparse.ArgumentParser]] = {}
        self._commands: dict[str, _CommandSpec] = {}

    def add_global_argument(self, *args: str, **kwargs: Any) -> None:
        """Register an option accepted on either side of the command name."""
        self._globals.append((args, kwargs))

    def add_shared_group(self, name: str, title: str | None = None) -> argparse.ArgumentParser:
        """Declare an option group; commands opt in with ``groups=[name]``.

        Returns:
            Collector to call ``add_argument`` on
        """
        collector = _collector()
        self._shared[name] = (title or f"{name} options", collector)
        return collector

    def add_command(
        self,
        name: str,
        help: str | None = None,
        description: str | None = None,
        groups: list[str] | None = None,
        **kwargs: Any,
    ) -> argparse.ArgumentParser:
        """Register a subcommand.

        Args:
            name: Command name
            help: One-line summary in the top-level help
            description: Text at the top of the command's own help
            groups: Shared option groups the command takes
            **kwargs: Passed through to ``add_parser`` (epilog, formatter_class, ...)

        Returns:
            Collector for the command's own arguments

        Raises:
            ValueError: A group was never declared
        """
        attached = list(groups or [])
        missing = [group for group in attached if group not in self._shared]
        if missing:
            raise ValueError(f"unknown option group(s): {', '.join(missing)}")
        spec = _CommandSpec({"help": help, "description": description, **kwargs}, attached)
        self._commands[name] = spec
        return spec.collector

    def _add_globals(self, target: Any) -> None:
        for args, kwargs in self._globals:
            target.add_argument(*args, **kwargs)

    def _globals_only(self) -> argparse.ArgumentParser:
        # allow_abbrev off: a command flag like --n must not match a global prefix
        parser = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
        self._add_globals(parser)
        return parser

    def _full_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            description=self.description, formatter_class=self.formatter_class, **self.parser_kwargs
        )
        self._add_globals(parser)
        commands = parser.add_subparsers(dest="command", help="Command to execute", required=True)
        for name, spec in self._commands.items():
            options = {"formatter_class": self.formatter_class, **spec.options}
            command = commands.add_parser(name, **options)
            _copy_actions(spec.collector, command)
            for group in spec.groups:
                title, collector = self._shared[group]
                _copy_actions(collector, command.add_argument_group(title))
            self._add_globals(command.add_argument_group("global options"))
        return parser

    def parse_args(self, argv: list[str] | None = None) -> argparse.Namespace:
        """Parse argv (``sys.argv[1:]`` when None) into one namespace."""
        global_values, _ = self._globals_only().parse_known_args(argv)
        namespace = self._full_parser().parse_args(argv)
        for key, value in vars(global_values).items():
            setattr(namespace, key, value)
        return namespace

import argparse
from typing import Callable, List, Optional, Union
from occflow.config import Schema
from occflow.exceptions import CommandNotFoundError


Handler = Callable[[argparse.Namespace], int]


class Command(object):
    """
    Command Class

    Attributes:
        name (`str`): The subcommand name, e.g. `gen-scene`.
        handler (`Handler`): Runs the command and returns the exit code.
        schema (`Optional[Schema]`): The schema of the config file the command reads.
        help (`str`): One-line description shown by `--help`.

    """

    def __init__(self, name: str, handler: Handler, schema: Optional[Schema] = None, help: Optional[str] = "") -> None:
        """
        Command Constructor

        :param name: str, The subcommand name.
        :param handler: Handler, Runs the command and returns the exit code.
        :param schema: Optional[Schema], The schema of the config file the command reads.
        :param help: Optional[str], One-line description.
        :return: None

        """

        self.name = name
        self.handler = handler
        self.schema = schema
        self.help = help

    @property
    def name(self) -> str:
        return self._name

    @name.setter
    def name(self, value: str) -> None:
        if not value or any(c.isspace() for c in value):
            raise ValueError(f"invalid command name `{value}`")

        self._name = value

    @property
    def handler(self) -> Handler:
        return self._handler

    @handler.setter
    def handler(self, value: Handler) -> None:
        if not callable(value):
            raise ValueError(f"handler of `{self.name}` is not callable")

        self._handler = value

    @property
    def schema(self) -> Optional[Schema]:
        return self._schema

    @schema.setter
    def schema(self, value: Optional[Schema]) -> None:
        self._schema = value

    @property
    def help(self) -> str:
        return self._help

    @help.setter
    def help(self, value: Optional[str]) -> None:
        self._help = value or ""

    def __call__(self, args: argparse.Namespace) -> int:
        return self.handler(args)


class CommandRegistry(object):
    """
    Command Registry Class

    Collection of the subcommands of the command line, in registration order.

    Attributes:
        commands (`List[Command]`): The registered commands.

    """

    def __init__(self, commands: Optional[Union[Command, List[Command]]] = None) -> None:
        self._commands = {}
        self.register(commands=commands)

    def __contains__(self, name: str) -> bool:
        return name in self._commands

    def __len__(self) -> int:
        return len(self._commands)

    def register(self, commands: Optional[Union[Command, List[Command]]]) -> None:
        """
        Register the provided commands.

        :param commands: Optional[Union[Command, List[Command]]], The command(s) to register.
        :return: None

        :raises: KeyError

        """

        if commands is not None:
            commands = [commands] if isinstance(commands, Command) else commands

            for command in commands:
                if command.name in self._commands:
                    raise KeyError(f"a command has already been registered as `{command.name}`")

                self._commands[command.name] = command

    def unregister(self, commands: Union[Command, List[Command], str, List[str]]) -> None:
        """
        Unregister the provided commands, given as commands or names.

        :param commands: Union[Command, List[Command], str, List[str]], The command(s) to remove.
        :return: None

        """

        if commands is not None:
            commands = [commands] if isinstance(commands, (Command, str)) else commands

            for command in commands:
                self._commands.pop(command.name if isinstance(command, Command) else command, None)

    def clear(self) -> None:
        self._commands = {}

    def lookup(self, name: str) -> Command:
        """
        Get the command registered under a name.

        :param name: str, The subcommand name.
        :return: Command

        :raises: CommandNotFoundError

        """

        if name not in self._commands:
            raise CommandNotFoundError(name=name)

        return self._commands[name]

    @property
    def commands(self) -> List[Command]:
        return list(self._commands.values())

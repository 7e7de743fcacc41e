from typing import Any, List, Optional


class OccflowError(Exception):
    """
    Occflow Error Class

    Base class of the errors the command line turns into exit codes.

    Attributes:
        exit_code (`int`): The process exit code associated with the error.

    """

    exit_code = 1


class ConfigError(OccflowError):
    """
    Config Error Class

    """

    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        """
        Config Error Constructor

        :param message: str, The diagnostic naming the bad field.
        :param line: Optional[int], Source line of the offending key.
        :return: None

        """

        self.line = line
        super().__init__(message)


class ArtifactNotFoundError(OccflowError):
    """
    Artifact Not Found Error Class

    """

    exit_code = 2

    def __init__(self, path: str) -> None:
        """
        Artifact Not Found Error Constructor

        :param path: str, The missing file.
        :return: None

        """

        self.path = path
        super().__init__(f"`{path}` does not exist")


class SceneMismatchError(OccflowError):
    """
    Scene Mismatch Error Class

    Raised when reports that are compared do not share a scene and seed.

    """

    exit_code = 2

    def __init__(self, expected: str, found: str) -> None:
        super().__init__(f"cannot compare reports of `{expected}` with `{found}`")


class GridFormatError(OccflowError):
    """
    Grid Format Error Class

    """

    exit_code = 2


class RayFormatError(OccflowError):
    """
    Ray Format Error Class

    """

    exit_code = 2


class CommandNotFoundError(OccflowError):
    """
    Command Not Found Error Class

    """

    exit_code = 2

    def __init__(self, name: str) -> None:
        """
        Command Not Found Error Constructor

        :param name: str, The name of the command that is not registered.
        :return: None

        """

        super().__init__(f"`{name}` command not found")


class NonFiniteLossError(OccflowError):
    """
    Non Finite Loss Error Class

    Attributes:
        term (`str`): The loss term that evaluated to NaN or infinity.
        iteration (`int`): The iteration at which it happened.

    """

    exit_code = 3

    def __init__(self, term: str, value: Any, iteration: Optional[int] = None) -> None:
        """
        Non Finite Loss Error Constructor

        :param term: str, The offending loss term.
        :param value: Any, Its value.
        :param iteration: Optional[int], The iteration at which it happened.
        :return: None

        """

        self.term = term
        self.iteration = iteration
        where = f" at iteration {iteration}" if iteration is not None else ""
        super().__init__(f"loss term `{term}` is {value}{where}")


class DivergenceError(OccflowError):
    """
    Divergence Error Class

    Attributes:
        iteration (`int`): The iteration at which the loss diverged.
        loss (`float`): The diverged total loss.
        trace (`List`): The loss records up to and including the iteration.

    """

    exit_code = 3

    def __init__(self, iteration: int, loss: float, trace: List) -> None:
        self.iteration = iteration
        self.loss = loss
        self.trace = trace
        super().__init__(f"total loss {loss:.6g} diverged at iteration {iteration}")

from typing import Any, Optional


class ConfigValidationError(ValueError):
    def __init__(self, field: str, value: Any, message: str, line: Optional[int] = None) -> None:
        """

        :param field: str, The dotted path of the configuration field that raised the error.
        :param value: Any, The binding value that is invalid.
        :param message: str, The error message that was received and caught
            while doing field validation.
        :param line: Optional[int], The 1-based line of the offending key in the source
            file, when known.
        :return: None

        """

        self.field = field
        self.value = value
        self.message = message
        self.line = line
        location = f" (line {line})" if line is not None else ""
        super().__init__(f"Invalid Field Assignment{location}: {field}={value} ({message}).")

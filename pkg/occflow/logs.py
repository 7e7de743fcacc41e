import os
import logging
from typing import Optional
from occflow.enums import LogLevel


FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

LEVELS = {
    LogLevel.ERROR: logging.ERROR,
    LogLevel.INFO: logging.INFO,
    LogLevel.DEBUG: logging.DEBUG,
}


def resolve_level(value: Optional[str] = None) -> int:
    """
    Translate an `OCCFLOW_LOG` value into a logging level.

    Unknown values fall back to INFO.

    :param value: Optional[str], The value (None reads the environment).
    :return: int

    """

    value = os.environ.get("OCCFLOW_LOG", "info") if value is None else value

    try:
        return LEVELS[LogLevel(value.strip().lower())]
    except ValueError:
        return logging.INFO


def configure(level: Optional[str] = None) -> logging.Logger:
    """
    Install a single stream handler on the package logger.

    Calling it again replaces the handler instead of stacking a second one.

    :param level: Optional[str], One of `error`, `info`, `debug` (None reads `OCCFLOW_LOG`).
    :return: logging.Logger

    """

    logger = logging.getLogger("occflow")
    logger.setLevel(resolve_level(value=level))

    for handler in list(logger.handlers):
        if getattr(handler, "_occflow", False):
            logger.removeHandler(handler)

    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(FORMAT))
    handler._occflow = True
    logger.addHandler(handler)
    logger.propagate = False
    return logger


def progress_enabled() -> bool:
    """
    Whether progress bars should be drawn (only when INFO messages are shown).

    :return: bool

    """

    return logging.getLogger("occflow").isEnabledFor(logging.INFO)

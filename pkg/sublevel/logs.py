import logging
import os
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

_ROOT = "sublevel"
_configured = False


def configure(level: Optional[str] = None, console: Optional[Console] = None) -> logging.Logger:
    """Installs a rich handler on the package logger.

    Safe to call repeatedly; only the level changes after the first call.

    Args:
        level (str, optional): Logging level name. Defaults to the
            `SUBLEVEL_LOG_LEVEL` environment variable, then 'WARNING'.
        console (Console, optional): Console the handler writes to.
            Defaults to a stderr console.
    """

    global _configured

    logger = logging.getLogger(_ROOT)
    if level is None:
        level = os.getenv("SUBLEVEL_LOG_LEVEL", "WARNING")
    logger.setLevel(level.upper())

    if not _configured:
        handler = RichHandler(
            console=console or Console(stderr=True),
            show_path=False,
            rich_tracebacks=True,
        )
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
        logger.propagate = False
        _configured = True
    return logger


def get_logger(name: str) -> logging.Logger:
    if not name.startswith(_ROOT):
        name = f"{_ROOT}.{name}"
    return logging.getLogger(name)

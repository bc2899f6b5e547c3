"""
Logging setup shared by the CLI and the HTTP service
"""

import logging
import sys

from pythonjsonlogger import jsonlogger

_HANDLER_NAME = "pipescan"


def configure_logging(level: str = "INFO", json_format: bool = True) -> None:
    """
    Install a single stderr handler on the root logger

    Args:
        level: Logging level name
        json_format: Emit JSON lines when True, plain text otherwise
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        if handler.get_name() == _HANDLER_NAME:
            root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(_HANDLER_NAME)
    if json_format:
        formatter: logging.Formatter = jsonlogger.JsonFormatter(
            "%(asctime)s %(levelname)s %(name)s %(message)s"
        )
    else:
        formatter = logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
    handler.setFormatter(formatter)

    root.addHandler(handler)
    root.setLevel(level.upper())

"""Logging setup"""

import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from src.utils.config import Config


def setup_logging(level: Optional[str] = None) -> None:
    """Route package logs to stderr through rich"""
    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
    )
    logging.basicConfig(
        level=(level or Config.LOG_LEVEL).upper(),
        format="%(name)s: %(message)s",
        datefmt="[%X]",
        handlers=[handler],
        force=True,
    )

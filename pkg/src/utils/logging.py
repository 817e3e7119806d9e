"""
Logging configuration for the thermal-stability twin.

Events go to stderr so CLI reports on stdout stay clean. Everything logged
inside `run_context` carries the bound keys (command, scenario, seed, ...).
"""

import logging
import sys
from contextlib import contextmanager
from typing import Iterator, Optional

import structlog

from src.config import settings


def setup_logging(log_level: Optional[str] = None, log_format: Optional[str] = None):
    """
    Configure structlog on top of the stdlib root logger.

    Args:
        log_level: Overrides settings.log_level
        log_format: 'json' or 'console'; overrides settings.log_format
    """
    level = getattr(logging, (log_level or settings.log_level).upper(), logging.INFO)
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level, force=True)

    renderer = (
        structlog.processors.JSONRenderer()
        if (log_format or settings.log_format) == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.stdlib.add_log_level,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


@contextmanager
def run_context(**values) -> Iterator[None]:
    """Bind keys to every event logged inside the block."""
    structlog.contextvars.bind_contextvars(**values)
    try:
        yield
    finally:
        structlog.contextvars.unbind_contextvars(*values)


def get_logger(name: Optional[str] = None):
    logger = structlog.get_logger()
    if name:
        logger = logger.bind(logger_name=name)
    return logger

"""
Logging configuration for the library, CLI and HTTP service.
"""

import logging
import logging.config
import sys
from typing import Any, Dict, List, Optional

from config.settings import settings

FORMATTERS: Dict[str, Dict[str, str]] = {
    "standard": {
        "format": "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
    },
    "json": {
        "()": "pythonjsonlogger.jsonlogger.JsonFormatter",
        "format": "%(asctime)s %(name)s %(levelname)s %(message)s"
    },
}

# Third-party loggers that only matter when something is wrong
QUIET_LOGGERS = ("httpx", "redis", "asyncio")


def _logger_entry(level: str, handlers: List[str]) -> Dict[str, Any]:
    return {"handlers": list(handlers), "level": level, "propagate": False}


def setup_logging(level: Optional[str] = None, fmt: Optional[str] = None, serve: bool = False):
    """Setup logging configuration.

    Console output goes to stderr so that CLI data written to stdout stays clean.
    numpy/scipy RuntimeWarnings raised during fits are routed through the
    ``py.warnings`` logger so that they appear in JSON logs as well.
    """
    level = (level or settings.LOG_LEVEL).upper()
    formatter = "json" if (fmt or settings.LOG_FORMAT) == "json" else "standard"

    handlers: Dict[str, Dict[str, Any]] = {
        "console": {
            "level": level,
            "class": "logging.StreamHandler",
            "formatter": formatter,
            "stream": sys.stderr,
        }
    }
    if settings.LOG_FILE:
        handlers["file"] = {
            "level": level,
            "class": "logging.FileHandler",
            "filename": settings.LOG_FILE,
            "formatter": formatter,
        }
    names = list(handlers)

    loggers = {
        "": _logger_entry("WARNING", names),
        "metaridge": _logger_entry(level, names),
        "py.warnings": _logger_entry("WARNING", names),
    }
    if serve:
        loggers["uvicorn"] = _logger_entry("INFO", names)
        loggers["uvicorn.access"] = _logger_entry("INFO", names)

    logging.config.dictConfig({
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": FORMATTERS,
        "handlers": handlers,
        "loggers": loggers,
    })
    logging.captureWarnings(True)

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

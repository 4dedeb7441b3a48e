# qwell/core/logger.py
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Optional

LOG_FORMAT = "[%(asctime)s] [%(levelname)s] [%(name)s] : %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
LOG_FILE = "qwell.log"

_LEVEL_COLORS = {
    "DEBUG": "\033[94m",
    "INFO": "\033[92m",
    "WARNING": "\033[93m",
    "ERROR": "\033[91m",
    "CRITICAL": "\033[91m",
}
_RESET = "\033[0m"
# marks the handlers installed here, so a second setup replaces them and leaves foreign ones alone
_OWNED = "_qwell_handler"


class ColoredFormatter(logging.Formatter):
    """Level name in ANSI color; formats a copy so the file handler sees the plain record."""

    def format(self, record: logging.LogRecord) -> str:
        color = _LEVEL_COLORS.get(record.levelname)
        if color is None:
            return super().format(record)
        colored = logging.makeLogRecord(record.__dict__)
        colored.levelname = f"{color}{record.levelname}{_RESET}"
        return super().format(colored)


def _own(handler: logging.Handler, level: int, formatter: logging.Formatter) -> logging.Handler:
    handler.setLevel(level)
    handler.setFormatter(formatter)
    setattr(handler, _OWNED, True)
    return handler


def setup_logging(level: Optional[str] = None, logs_dir: Optional[str] = None,
                  color: Optional[bool] = None) -> logging.Logger:
    """
    Console records on stderr (stdout carries the command result) and a rotating
    <logs_dir>/qwell.log, 10 MB x 5 backups. Level and directory default to
    QWELL_LOG_LEVEL / QWELL_LOG_DIR; an empty directory skips the file. Colors
    default to on when stderr is a terminal.
    """
    from qwell.core.config import settings

    level_name = (level or settings.QWELL_LOG_LEVEL).upper()
    log_level = getattr(logging, level_name, logging.INFO)
    logs_dir = settings.QWELL_LOG_DIR if logs_dir is None else logs_dir
    if color is None:
        color = sys.stderr.isatty()

    root = logging.getLogger()
    root.setLevel(log_level)
    for handler in [h for h in root.handlers if getattr(h, _OWNED, False)]:
        root.removeHandler(handler)
        handler.close()

    console_format = ColoredFormatter if color else logging.Formatter
    root.addHandler(_own(logging.StreamHandler(sys.stderr), log_level, console_format(LOG_FORMAT, datefmt=DATE_FORMAT)))

    log_file_path = None
    if logs_dir:
        os.makedirs(logs_dir, exist_ok=True)
        log_file_path = os.path.join(logs_dir, LOG_FILE)
        file_handler = RotatingFileHandler(log_file_path, maxBytes=10 * 1024 * 1024, backupCount=5, encoding="utf-8")
        root.addHandler(_own(file_handler, log_level, logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)))

    logger = logging.getLogger("Qwell")
    logger.debug(f"Logging at {level_name} - colors: {color} | file: {log_file_path or 'off'}")
    return logger

# qwell/tests/test_logger.py
"""Logging setup: owned handlers, plain file records, optional log file."""
import logging

import pytest

from qwell.core.logger import ColoredFormatter, LOG_FORMAT, setup_logging


def _owned(root: logging.Logger):
    return [h for h in root.handlers if getattr(h, "_qwell_handler", False)]


@pytest.fixture
def root_logger():
    root = logging.getLogger()
    level = root.level
    yield root
    for handler in _owned(root):
        root.removeHandler(handler)
        handler.close()
    root.setLevel(level)


def test_repeated_setup_replaces_only_its_handlers(root_logger, tmp_path):
    foreign = logging.NullHandler()
    root_logger.addHandler(foreign)
    try:
        setup_logging("DEBUG", str(tmp_path), color=False)
        setup_logging("DEBUG", str(tmp_path), color=False)
        assert len(_owned(root_logger)) == 2
        assert foreign in root_logger.handlers
        assert root_logger.level == logging.DEBUG
    finally:
        root_logger.removeHandler(foreign)


def test_file_records_carry_no_color_codes(root_logger, tmp_path):
    setup_logging("INFO", str(tmp_path), color=True)
    logging.getLogger("Qwell.Test").warning("tail mass above tolerance")
    for handler in _owned(root_logger):
        handler.flush()
    text = (tmp_path / "qwell.log").read_text(encoding="utf-8")
    assert "[WARNING] [Qwell.Test] : tail mass above tolerance" in text
    assert "\033[" not in text


def test_empty_log_dir_skips_the_file(root_logger):
    setup_logging("INFO", "", color=False)
    handlers = _owned(root_logger)
    assert len(handlers) == 1
    assert type(handlers[0]) is logging.StreamHandler


def test_colored_formatter_leaves_record_untouched():
    record = logging.LogRecord("Qwell.Test", logging.WARNING, __file__, 1, "careful", None, None)
    text = ColoredFormatter(LOG_FORMAT).format(record)
    assert "\033[93mWARNING\033[0m" in text
    assert record.levelname == "WARNING"

"""Logging configuration with timestamps and run IDs."""

import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Optional

LOGGER_NAME = "quasiboson"


def setup_logger(
    log_level: str = "INFO",
    log_file: Optional[str] = None,
    run_id: Optional[str] = None
) -> logging.Logger:
    """
    Set up the package logger with file and console handlers.

    Console output goes to stderr so that JSON/CSV written to stdout
    is never interleaved with log records.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        log_file: Path to log file (default: logs/quasiboson.log)
        run_id: Optional run identifier attached to every record

    Returns:
        Configured logger instance
    """
    if log_file is None:
        log_file = os.getenv("QUASIBOSON_LOG_FILE")
    if log_file is None:
        log_dir = Path("logs")
        log_dir.mkdir(exist_ok=True)
        log_file = str(log_dir / "quasiboson.log")
    else:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(getattr(logging, log_level.upper(), logging.INFO))
    logger.handlers.clear()
    logger.propagate = False

    class RunFormatter(logging.Formatter):
        """Formatter that stamps the run ID and an ISO timestamp."""

        def format(self, record: logging.LogRecord) -> str:
            if not hasattr(record, 'run_id'):
                record.run_id = run_id or "N/A"
            record.iso_timestamp = datetime.now().isoformat()
            return super().format(record)

    formatter = RunFormatter(
        fmt='[%(iso_timestamp)s] [%(run_id)s] [%(levelname)s] %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    file_handler = logging.FileHandler(log_file, encoding='utf-8')
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.WARNING)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    return logger


def get_logger(run_id: Optional[str] = None) -> logging.Logger:
    """
    Get or create the package logger.

    Args:
        run_id: Optional run ID used if the logger is configured here

    Returns:
        Logger instance
    """
    logger = logging.getLogger(LOGGER_NAME)
    if not logger.handlers:
        log_level = os.getenv("LOG_LEVEL", "INFO")
        setup_logger(log_level=log_level, run_id=run_id)
    return logger

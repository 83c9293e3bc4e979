"""
Ferroscope Structured Logger
============================

Centralized logging utility for the whole pipeline.
Features:
- Console output (human readable)
- Rotating file logs (daily rotation, 7 days retention)
- JSON structured format for file logs, one object per line
- Singleton pattern to prevent duplicate handlers
- Log level taken from ConfigLoader; the JSON file handler is attached by
  `enable_file`, so importing the package never touches disk

Usage:
    from ferroscope.utils.logger import logger
    logger.info("GAN epoch finished", epoch=3, disc_loss=0.61)
"""

import json
import logging
import os
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from typing import Any, Optional, Union

from ferroscope.utils.config_loader import config


class JSONFormatter(logging.Formatter):
    """JSON formatter that lifts structured context into top-level fields."""

    def format(self, record: logging.LogRecord) -> str:
        log_entry = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        context = getattr(record, "context", None)
        if context:
            try:
                log_entry.update(context)
            except Exception:
                log_entry["context_error"] = "Failed to merge structured context"

        if record.exc_info:
            try:
                log_entry["exception"] = self.formatException(record.exc_info)
            except Exception:
                log_entry["exception"] = "Failed to format exception"

        try:
            return json.dumps(log_entry, ensure_ascii=False, default=str)
        except Exception as e:
            return json.dumps({"error": f"JSON serialization failed: {e}", "message": log_entry["message"]})


class ConsoleFormatter(logging.Formatter):
    """Human readable line with key=value context appended."""

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        context = getattr(record, "context", None)
        if context:
            line += " | " + " ".join(f"{k}={_short(v)}" for k, v in context.items())
        return line


def _short(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


class StructuredLogger:
    """Singleton structured logger for ferroscope."""

    _instance = None

    def __new__(cls) -> "StructuredLogger":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._setup_logger()
        return cls._instance

    def _setup_logger(self) -> None:
        """Configure level and console handler."""
        self.logger = logging.getLogger("ferroscope")

        try:
            log_level_str = str(config.get("logging.level", "INFO")).upper()
            self.logger.setLevel(getattr(logging, log_level_str, logging.INFO))
        except Exception as e:
            self.logger.setLevel(logging.INFO)
            print(f"Warning: Failed to load log level from config: {e}. Using INFO.")

        self.logger.propagate = False

        console_handler = logging.StreamHandler()
        console_handler.setFormatter(
            ConsoleFormatter(fmt="%(asctime)s | %(levelname)-8s | %(message)s", datefmt="%Y-%m-%d %H:%M:%S")
        )
        self.logger.addHandler(console_handler)
        self.file_handler: Optional[TimedRotatingFileHandler] = None

    def enable_file(self, log_dir: Union[str, Path, None] = None) -> Optional[Path]:
        """Attach the rotating JSON file handler; returns the log file path, or None on failure."""
        log_dir = Path(log_dir if log_dir is not None else config.get("logging.dir", "logs"))
        log_file = log_dir / "ferroscope.log"
        if self.file_handler is not None:
            if self.file_handler.baseFilename == os.path.abspath(log_file):
                return log_file
            self.disable_file()
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
            file_handler = TimedRotatingFileHandler(
                filename=log_file,
                when="midnight",
                interval=1,
                backupCount=7,
                encoding="utf-8",
            )
        except OSError as e:
            self.logger.warning(f"Failed to setup file logging: {e}. Using console only.")
            return None
        file_handler.setFormatter(JSONFormatter())
        self.logger.addHandler(file_handler)
        self.file_handler = file_handler
        return log_file

    def disable_file(self) -> None:
        if self.file_handler is None:
            return
        self.logger.removeHandler(self.file_handler)
        self.file_handler.close()
        self.file_handler = None

    def debug(self, message: str, **context: Any) -> None:
        self.logger.debug(message, extra={"context": context})

    def info(self, message: str, **context: Any) -> None:
        self.logger.info(message, extra={"context": context})

    def warning(self, message: str, **context: Any) -> None:
        self.logger.warning(message, extra={"context": context})

    def error(self, message: str, **context: Any) -> None:
        self.logger.error(message, extra={"context": context})

    def critical(self, message: str, **context: Any) -> None:
        self.logger.critical(message, extra={"context": context})

    def set_level(self, level: str) -> None:
        """Apply a level name from a user configuration after startup."""
        self.logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))


# Singleton instance - import and use directly
logger = StructuredLogger()

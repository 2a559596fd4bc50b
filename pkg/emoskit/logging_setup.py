import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

from .env import env_flag, env_path


_LOG_FILE_NAME = "emoskit.log"
_MAX_LOG_BYTES = 5 * 1024 * 1024
_BACKUP_COUNT = 5


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever ``sys.stderr`` is at emit time."""

    def __init__(self) -> None:
        super().__init__(sys.stderr)

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value) -> None:
        pass


def setup_logging(level: int | None = None, log_dir: Path | None = None) -> None:
    if level is None:
        level = logging.DEBUG if env_flag("EMOSKIT_DEBUG") else logging.INFO
    log_dir = log_dir or env_path("EMOSKIT_LOG_DIR")

    root_logger = logging.getLogger()
    if getattr(root_logger, "_emoskit_logging_configured", False):
        root_logger.setLevel(level)
        for handler in root_logger.handlers:
            handler.setLevel(level)
        return

    formatter = logging.Formatter("%(asctime)s %(levelname)s [%(name)s] %(message)s")

    # Progress goes to stderr; stdout stays free for command output.
    stream_handler = _StderrHandler()
    stream_handler.setLevel(level)
    stream_handler.setFormatter(formatter)

    root_logger.handlers.clear()
    root_logger.setLevel(level)
    root_logger.addHandler(stream_handler)

    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            log_dir / _LOG_FILE_NAME,
            maxBytes=_MAX_LOG_BYTES,
            backupCount=_BACKUP_COUNT,
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    root_logger._emoskit_logging_configured = True

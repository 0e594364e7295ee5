"""
Application logging configuration.

- General logs: {LOG_DIR}/app.log plus console (stderr, stdout carries CLI reports)
- Exact refinement passes: {LOG_DIR}/refine.log (separate file)
"""

import logging
import sys
from pathlib import Path
from typing import Optional

from hdr.core.config import get_settings


# Logger name used by exact_refine level passes (has its own log file)
REFINE_LOGGER_NAME = "hdr.refine"

# Format for log messages
LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(
    log_dir: Optional[str] = None,
    log_level: Optional[str] = None,
) -> None:
    """
    Configure application logging at startup.

    - Creates log directory if it does not exist (skipped when LOG_DIR is empty).
    - Root logger: writes to {log_dir}/app.log and to stderr.
    - Logger "hdr.refine": writes only to {log_dir}/refine.log (no propagation to root).

    **Input (request):**
        - log_dir: Directory for log files. Default from settings LOG_DIR (default "logs").
        - log_level: Level name (DEBUG, INFO, WARNING, ERROR). Default from settings LOG_LEVEL.

    **Output (response):** None.
    """
    settings = get_settings()
    dir_name = settings.LOG_DIR if log_dir is None else log_dir
    level = getattr(logging, (log_level or settings.LOG_LEVEL).upper(), logging.INFO)

    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    # Remove existing handlers to avoid duplicates on reload
    for h in root_logger.handlers[:]:
        root_logger.removeHandler(h)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    refine_logger = logging.getLogger(REFINE_LOGGER_NAME)
    refine_logger.setLevel(level)
    for h in refine_logger.handlers[:]:
        refine_logger.removeHandler(h)

    if not dir_name:
        refine_logger.propagate = True
        return

    dir_path = Path(dir_name)
    dir_path.mkdir(parents=True, exist_ok=True)

    # ---- Root / app logger: app.log + console ----
    app_file_handler = logging.FileHandler(dir_path / "app.log", encoding="utf-8")
    app_file_handler.setLevel(level)
    app_file_handler.setFormatter(formatter)
    root_logger.addHandler(app_file_handler)

    # ---- Refinement logger: refine.log only (separate file) ----
    refine_file_handler = logging.FileHandler(dir_path / "refine.log", encoding="utf-8")
    refine_file_handler.setLevel(level)
    refine_file_handler.setFormatter(formatter)
    refine_logger.propagate = False  # refinement traces only in refine.log
    refine_logger.addHandler(refine_file_handler)

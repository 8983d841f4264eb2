"""Logging setup shared by the CLI and the web app"""

import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

LOG_FORMAT = '[%(asctime)s] %(levelname)s in %(module)s: %(message)s'


def configure_logging(
    log_file: Optional[str] = None,
    level: str = 'INFO',
    logger: Optional[logging.Logger] = None
) -> logging.Logger:
    """
    Attach console and (optionally) rotating file handlers.

    Args:
        log_file: Path of the rotating log file, or None for console only
        level: Level name (e.g. 'INFO', 'DEBUG')
        logger: Logger to configure; defaults to the root logger

    Returns:
        The configured logger
    """
    logger = logger or logging.getLogger()
    log_level = getattr(logging, str(level).upper(), logging.INFO)
    formatter = logging.Formatter(LOG_FORMAT)

    if not any(isinstance(h, logging.StreamHandler) and not isinstance(h, RotatingFileHandler)
               for h in logger.handlers):
        console = logging.StreamHandler()
        console.setFormatter(formatter)
        logger.addHandler(console)

    if log_file:
        log_dir = os.path.dirname(os.path.abspath(log_file))
        if not os.path.exists(log_dir):
            os.makedirs(log_dir)

        handler = RotatingFileHandler(
            log_file,
            maxBytes=10485760,  # 10MB
            backupCount=10
        )
        handler.setFormatter(formatter)
        handler.setLevel(log_level)
        logger.addHandler(handler)

    logger.setLevel(log_level)
    return logger

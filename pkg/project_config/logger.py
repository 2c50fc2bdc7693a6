import os
import logging
from logging.handlers import RotatingFileHandler
from project_config.settings import ROOT_DIR, LOG_LEVEL

# Ensure the logs directory exists
LOGS_DIR = os.path.join(ROOT_DIR, "logs")
os.makedirs(LOGS_DIR, exist_ok=True)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def get_logger(name: str, log_file: str = "degdiff.log", level: int | str = LOG_LEVEL) -> logging.Logger:
    """
    Creates and returns a logger instance with the given name, log file, and log level.

    Args:
        name (str): Name of the logger, usually `__name__`.
        log_file (str): Name of the log file inside the `logs/` directory (default: degdiff.log).
        level (int | str): Logging level, e.g. `logging.DEBUG` or `"DEBUG"`. Defaults to the `LOG_LEVEL` setting.

    Returns:
        logging.Logger: Configured logger instance.
    """
    log_file_path = os.path.join(LOGS_DIR, log_file)

    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Check if logger already has handlers to avoid duplicate logs
    if not logger.hasHandlers():
        console_handler = logging.StreamHandler()
        console_handler.setLevel(level)
        console_handler.setFormatter(logging.Formatter(LOG_FORMAT))

        # File handler with rotation
        file_handler = RotatingFileHandler(
            log_file_path, maxBytes=5 * 1024 * 1024, backupCount=3
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))

        logger.addHandler(console_handler)
        logger.addHandler(file_handler)

    return logger

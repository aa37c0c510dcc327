"""Logging configuration for CWSSNet"""

import logging
import logging.handlers
from pathlib import Path
from typing import Optional, Tuple

from .settings import settings

# Package-wide loggers; handlers are attached by setup_logging()
logger = logging.getLogger("cwssnet")
training_logger = logging.getLogger("cwssnet.training")


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> Tuple[logging.Logger, logging.Logger]:
    """Setup logging configuration"""

    log_path = Path(log_file or settings.LOG_FILE)
    log_dir = log_path.parent
    log_dir.mkdir(parents=True, exist_ok=True)

    # Configure logging format
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # Setup root logger
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, (level or settings.LOG_LEVEL).upper()))
    for handler in list(root_logger.handlers):
        if getattr(handler, "_cwssnet", False):
            root_logger.removeHandler(handler)
            handler.close()

    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)

    # File handler with rotation
    file_handler = logging.handlers.RotatingFileHandler(
        log_path,
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=5
    )
    file_handler.setFormatter(formatter)

    # Error file handler
    error_handler = logging.handlers.RotatingFileHandler(
        log_dir / "errors.log",
        maxBytes=5 * 1024 * 1024,  # 5MB
        backupCount=3
    )
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(formatter)

    for handler in (console_handler, file_handler, error_handler):
        handler._cwssnet = True
        root_logger.addHandler(handler)

    # Training log handler: one line per epoch, kept out of the main log
    training_handler = logging.handlers.RotatingFileHandler(
        log_dir / "training.log",
        maxBytes=5 * 1024 * 1024,  # 5MB
        backupCount=3
    )
    training_handler.setFormatter(formatter)
    for handler in list(training_logger.handlers):
        training_logger.removeHandler(handler)
        handler.close()
    training_logger.addHandler(training_handler)
    training_logger.addHandler(console_handler)
    training_logger.setLevel(logging.INFO)
    training_logger.propagate = False

    return root_logger, training_logger

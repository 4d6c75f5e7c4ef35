"""
Logging setup for the library and the pipeline scripts
"""
import logging
from typing import Optional, Union

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: Union[str, int] = "WARNING", logfile: Optional[str] = None) -> logging.Logger:
    """Configure the package logger once; later calls only change the level"""
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.WARNING)

    logger = logging.getLogger("anticyclo")
    logger.setLevel(level)

    if not logger.handlers:
        handler = logging.FileHandler(logfile) if logfile else logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    for handler in logger.handlers:
        handler.setLevel(level)

    return logger

# pipeline/logging_setup.py

import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = "INFO") -> None:
    """Route package loggers to stderr so command output on stdout stays clean"""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_cornersim", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._cornersim = True
    root.addHandler(handler)
    root.setLevel(getattr(logging, level.upper(), logging.INFO))

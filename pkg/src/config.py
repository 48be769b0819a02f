"""
Runtime configuration for the isomorphic Busemann-Petty laboratory

This module provides environment-driven settings, structured logging and the
timing decorator shared by the experiment harnesses and the CLI.
"""

import json
import logging
import os
import platform
import sys
import time
from datetime import datetime, timezone
from functools import wraps
from typing import Any, Dict

from dotenv import load_dotenv

load_dotenv()


class LabConfig:
    """Laboratory configuration settings"""

    # Logging
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
    LOG_FORMAT = os.getenv("LOG_FORMAT", "json").lower()

    # Output
    OUTPUT_DIR = os.getenv("ISOBP_OUTPUT_DIR", "runs")

    # Quadrature defaults
    SEED = int(os.getenv("ISOBP_SEED", "0"))
    SPHERE_NODES = int(os.getenv("ISOBP_SPHERE_NODES", "20000"))
    SUBSPHERE_NODES = int(os.getenv("ISOBP_SUBSPHERE_NODES", "256"))
    RADIAL_TOL = float(os.getenv("ISOBP_RADIAL_TOL", "1e-10"))
    RADIAL_ORDER = int(os.getenv("ISOBP_RADIAL_ORDER", "12"))
    ANGULAR_NODES = int(os.getenv("ISOBP_ANGULAR_NODES", "64"))

    # Thread pool used for chunked direction sweeps
    WORKERS = int(os.getenv("ISOBP_WORKERS", "1"))


class JsonFormatter(logging.Formatter):
    """One JSON object per record: time, level, logger, message, extra_fields, traceback"""

    def format(self, record: logging.LogRecord) -> str:
        entry = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            **getattr(record, "extra_fields", {}),
        }
        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(entry, default=str)


def setup_logging(name: str = "isobp") -> logging.Logger:
    """Logger writing to stderr (stdout carries listings and schemas) in LOG_FORMAT"""
    logger = logging.getLogger(name)
    logger.setLevel(LabConfig.LOG_LEVEL)
    logger.handlers.clear()

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(
        JsonFormatter()
        if LabConfig.LOG_FORMAT == "json"
        else logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
    )
    logger.addHandler(handler)
    logger.propagate = False
    return logger


logger = setup_logging()


def timed(func):
    """Log the duration of an experiment function, or its failure before re-raising"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            logger.error(
                f"{func.__name__} failed",
                exc_info=True,
                extra={
                    "extra_fields": {
                        "operation": func.__name__,
                        "duration_seconds": round(time.perf_counter() - start, 3),
                        "error_type": type(e).__name__,
                    }
                },
            )
            raise
        logger.info(
            f"{func.__name__} finished",
            extra={
                "extra_fields": {
                    "operation": func.__name__,
                    "duration_seconds": round(time.perf_counter() - start, 3),
                }
            },
        )
        return result

    return wrapper


def runtime_snapshot() -> Dict[str, Any]:
    """
    Describe the runtime that produced a report

    Returns:
        Dictionary with interpreter, library versions and active configuration
    """
    import numpy
    import scipy

    return {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "system": {
            "python_version": platform.python_version(),
            "platform": platform.platform(),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
        "configuration": {
            "seed": LabConfig.SEED,
            "sphere_nodes": LabConfig.SPHERE_NODES,
            "subsphere_nodes": LabConfig.SUBSPHERE_NODES,
            "radial_tol": LabConfig.RADIAL_TOL,
            "radial_order": LabConfig.RADIAL_ORDER,
            "angular_nodes": LabConfig.ANGULAR_NODES,
            "workers": LabConfig.WORKERS,
            "log_level": LabConfig.LOG_LEVEL,
        },
    }

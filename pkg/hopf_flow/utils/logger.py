import logging
import sys
from typing import Any
import json
from datetime import datetime, timezone
from functools import wraps
import numpy as np
from pydantic import BaseModel
from hopf_flow.config import get_settings, get_log_level

settings = get_settings()


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist() if value.size <= 8 else f"ndarray{value.shape}"
    return str(value)


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        log_obj = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
        }

        if hasattr(record, 'props'):
            log_obj.update(record.props)

        return json.dumps(log_obj, default=_json_default)

def setup_logger(name: str = "hopf_flow") -> logging.Logger:
    logger = logging.getLogger(name)

    if not logger.handlers:
        handler = logging.StreamHandler(sys.stdout)
        handler.setFormatter(JsonFormatter())
        logger.addHandler(handler)
        logger.propagate = False

    logger.setLevel(get_log_level(settings.LOG_LEVEL))
    return logger


def _describe(value: Any) -> str:
    """Short form of a call argument: arrays by shape, curves and reports by type and size."""
    if isinstance(value, np.ndarray):
        return f"ndarray{value.shape}"
    if isinstance(value, BaseModel):
        size = getattr(value, "size", None)
        return type(value).__name__ if size is None else f"{type(value).__name__}(size={size})"
    text = repr(value)
    return text if len(text) <= 80 else text[:80] + "..."


def log_error(logger: logging.Logger):
    def decorator(func: Any):
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                logger.error(
                    "Error in function execution",
                    extra={
                        "props": {
                            "function": func.__name__,
                            "error": str(e),
                            "error_type": type(e).__name__,
                            "args": [_describe(arg) for arg in args],
                            "kwargs": {key: _describe(value) for key, value in kwargs.items()},
                        }
                    }
                )
                raise
        return wrapper
    return decorator

logger = setup_logger()

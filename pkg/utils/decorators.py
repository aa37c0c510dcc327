"""Decorators for CWSSNet pipeline functions"""

import functools
import logging
import time
from typing import Callable

from utils.errors import CwssnetError

logger = logging.getLogger(__name__)


def handle_errors(func: Callable) -> Callable:
    """Decorator to log errors with traceback before re-raising"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except CwssnetError as e:
            logger.error(f"Error in {func.__name__}: {e}")
            raise
        except Exception as e:
            logger.error(f"Error in {func.__name__}: {str(e)}", exc_info=True)
            raise

    return wrapper


def stage(name: str):
    """Decorator tagging package errors with the pipeline stage name"""

    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except CwssnetError as e:
                raise e.with_stage(name)

        return wrapper

    return decorator


def timed(label: str):
    """Decorator logging the wall time of a call"""

    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            started = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                elapsed = time.perf_counter() - started
                logger.info(f"{label} finished in {elapsed:.2f}s")

        return wrapper

    return decorator

import logging
import os

from labelrepair.core.exceptions import (
    BaseAppError,
    ParseError,
)

logger = logging.getLogger(__name__)

EXIT_USAGE = getattr(os, "EX_USAGE", 64)
EXIT_DATA = getattr(os, "EX_DATAERR", 65)
EXIT_SOFTWARE = getattr(os, "EX_SOFTWARE", 70)
EXIT_CONFIG = getattr(os, "EX_CONFIG", 78)
EXIT_UNEXPECTED = 1


def parse_error_handler(exc: ParseError) -> int:
    if exc.cell is not None:
        logger.error(f"Parse error in cell {exc.cell!r}: {exc.message}")
    else:
        logger.error(f"Parse error: {exc.message}")
    return EXIT_DATA


def consistency_error_handler(exc: BaseAppError) -> int:
    logger.error(f"Inconsistent input: {exc.message}")
    return EXIT_DATA


def usage_error_handler(exc: BaseAppError) -> int:
    logger.error(f"Invalid request: {exc.message}")
    return EXIT_USAGE


def configuration_error_handler(exc: BaseAppError) -> int:
    logger.error(f"Configuration error: {exc.message}")
    return EXIT_CONFIG


def training_error_handler(exc: BaseAppError) -> int:
    logger.error(f"Model error: {exc.message}")
    return EXIT_SOFTWARE


def file_error_handler(exc: OSError) -> int:
    logger.error(f"I/O error: {exc}")
    return EXIT_DATA


def global_exception_handler(exc: Exception) -> int:
    logger.exception(f"Unexpected error: {exc}")
    return EXIT_UNEXPECTED

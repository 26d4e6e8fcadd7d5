import logging
import time
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass

logger = logging.getLogger(__name__)


def format_duration(seconds: float) -> str:
    if seconds >= 3600:
        hours = int(seconds // 3600)
        minutes = int((seconds % 3600) // 60)
        secs = seconds % 60
        return f"{hours} h {minutes} min {secs:.4f} sec"
    if seconds >= 60:
        minutes = int(seconds // 60)
        secs = seconds % 60
        return f"{minutes} min {secs:.4f} sec"
    return f"{seconds:.4f} seconds"


@dataclass
class Stopwatch:
    started_at: float
    elapsed: float = 0.0


@contextmanager
def log_duration(label: str) -> Iterator[Stopwatch]:
    watch = Stopwatch(started_at=time.perf_counter())
    try:
        yield watch
    finally:
        watch.elapsed = time.perf_counter() - watch.started_at
        logger.info(f"{label} took {format_duration(watch.elapsed)}")

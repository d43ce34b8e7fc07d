"""
LoggingTraceSink: Log every iteration through loguru.

Description:
    A simple sink for debugging and development. Writes one line per iteration at the
    configured level; nothing is kept.

How to initialize:
    sink = LoggingTraceSink()              # DEBUG lines
    sink = LoggingTraceSink(level="INFO")
"""

from loguru import logger

from ..trace import TraceRecord
from .base import TraceSink


class LoggingTraceSink(TraceSink):
    def __init__(self, level: str = "DEBUG") -> None:
        self.level = level

    def emit(self, run_id: str, record: TraceRecord) -> None:
        stale = " (stale)" if record.gap_stale else ""
        logger.log(
            self.level,
            f"[{run_id}] iter {record.iter} {record.step_type}: f={record.objective:.6g} "
            f"gap={record.gap:.3g}{stale} nn={record.nuclear_norm:.6g} rank={record.rank} "
            f"tau={record.tau:.3g}",
        )

    def close(self, run_id: str) -> None:
        logger.log(self.level, f"[{run_id}] done")

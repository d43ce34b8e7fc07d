"""
InMemoryTraceSink: Keep emitted records in memory.

Description:
    Stores the records of every run id in a dictionary for the lifetime of the object.
    Records are lost when the sink is discarded.

How to initialize:
    sink = InMemoryTraceSink()

Methods:
    - records(run_id): Records emitted for the run, in order. Empty list if unknown.
    - closed(run_id): Whether close was called for the run.
    - clear(run_id): Forgets the run.
"""

from ..trace import TraceRecord
from .base import TraceSink


class InMemoryTraceSink(TraceSink):
    def __init__(self) -> None:
        self._records: dict[str, list[TraceRecord]] = {}
        self._closed: set[str] = set()

    def emit(self, run_id: str, record: TraceRecord) -> None:
        self._records.setdefault(run_id, []).append(record)

    def close(self, run_id: str) -> None:
        self._closed.add(run_id)

    def records(self, run_id: str) -> list[TraceRecord]:
        return list(self._records.get(run_id, []))

    def closed(self, run_id: str) -> bool:
        return run_id in self._closed

    def clear(self, run_id: str) -> None:
        self._records.pop(run_id, None)
        self._closed.discard(run_id)

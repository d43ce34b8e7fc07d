"""
Base class for all trace sinks.

Description:
    TraceSink is an abstract base class that defines where solver iterations go. The solver
    orchestrator calls emit once per iteration and close once when a run ends. Subclasses
    must implement emit; close is a no-op unless the sink holds resources.

How to initialize:
    Do not instantiate TraceSink directly. Use a subclass (e.g., LoggingTraceSink,
    InMemoryTraceSink, CsvTraceSink) or combine several with FanOutTraceSink.

Methods:
    - emit(run_id, record): Receives one TraceRecord of the run `run_id`.
    - close(run_id): Called after the last record of the run.
"""

from abc import ABC, abstractmethod

from ..trace import TraceRecord


class TraceSink(ABC):
    @abstractmethod
    def emit(self, run_id: str, record: TraceRecord) -> None:
        pass

    def close(self, run_id: str) -> None:  # noqa: B027
        pass


class FanOutTraceSink(TraceSink):
    def __init__(self, *sinks: TraceSink) -> None:
        self.sinks = list(sinks)

    def emit(self, run_id: str, record: TraceRecord) -> None:
        for sink in self.sinks:
            sink.emit(run_id, record)

    def close(self, run_id: str) -> None:
        for sink in self.sinks:
            sink.close(run_id)

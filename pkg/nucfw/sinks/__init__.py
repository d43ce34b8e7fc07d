from .base import FanOutTraceSink, TraceSink
from .console import LoggingTraceSink
from .csv import CsvTraceSink
from .memory import InMemoryTraceSink

__all__ = [
    "CsvTraceSink",
    "FanOutTraceSink",
    "InMemoryTraceSink",
    "LoggingTraceSink",
    "TraceSink",
]

"""
CsvTraceSink: Persistent traces as CSV files.

Description:
    Writes the records of each run id to its own file `trace_<run_id>.csv` in `out_dir`.
    The header is written when the first record of a run arrives; the file is flushed and
    closed by close(run_id).

How to initialize:
    sink = CsvTraceSink(out_dir="traces")
    # 'out_dir' is created if it does not exist.

File Format:
    UTF-8, "\n" line endings, header
    iter,objective,gap,nuclear_norm,rank,step_type,tau,elapsed_s
    Floats are written with repr precision so reruns compare bitwise.
"""

import csv
import os
from typing import Any, TextIO

from ..trace import TRACE_COLUMNS, TraceRecord
from .base import TraceSink


class CsvTraceSink(TraceSink):
    def __init__(self, out_dir: str = "traces") -> None:
        self.out_dir = out_dir
        if not os.path.exists(self.out_dir):
            os.makedirs(self.out_dir)
        self._files: dict[str, tuple[TextIO, Any]] = {}

    def path_for(self, run_id: str) -> str:
        return os.path.join(self.out_dir, f"trace_{run_id}.csv")

    def _open(self, run_id: str) -> tuple[TextIO, Any]:
        if run_id not in self._files:
            f = open(self.path_for(run_id), "w", encoding="utf-8", newline="")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            self._files[run_id] = (f, writer)
        return self._files[run_id]

    def emit(self, run_id: str, record: TraceRecord) -> None:
        _, writer = self._open(run_id)
        writer.writerow(record.as_row())

    def close(self, run_id: str) -> None:
        # a run without records still gets a header-only file
        f, _ = self._open(run_id)
        del self._files[run_id]
        f.close()

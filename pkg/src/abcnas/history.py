"""Append-only CSV history of evaluation events."""

from __future__ import annotations

import csv
from pathlib import Path

from .colony import HISTORY_FIELDS, HistoryRecord

HEADER = ",".join(HISTORY_FIELDS)


def format_row(record: HistoryRecord) -> list[str]:
    return [
        str(record.iteration),
        record.phase,
        str(record.source_index),
        record.candidate,
        repr(float(record.objective)),
        repr(float(record.fitness)),
        str(record.trials),
        "true" if record.cache_hit else "false",
        repr(float(record.elapsed_seconds)),
        "true" if record.is_global_best else "false",
    ]


class CsvHistory:
    """History sink; rows are buffered by the OS and flushed at every iteration barrier."""

    def __init__(self, path, keep_rows: int | None = None):
        """Open ``path`` for appending.

        ``keep_rows=None`` starts a fresh file. Otherwise the existing file is
        truncated to its header plus the first ``keep_rows`` data rows, which is
        how a resumed run discards events recorded after its last checkpoint.
        """
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if keep_rows is None or not self.path.exists():
            if keep_rows:
                raise OSError(f"{self.path} is missing; cannot resume history with {keep_rows} rows")
            self.path.write_text(HEADER + "\n")
            self.rows = 0
        else:
            lines = self.path.read_text().splitlines(keepends=True)
            if not lines or lines[0].rstrip("\r\n") != HEADER:
                raise OSError(f"{self.path} has an unexpected header")
            if len(lines) - 1 < keep_rows:
                raise OSError(f"{self.path} has {len(lines) - 1} rows, checkpoint expects {keep_rows}")
            self.path.write_text("".join(lines[: keep_rows + 1]))
            self.rows = keep_rows
        self._fh = open(self.path, "a", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")

    def __call__(self, record: HistoryRecord):
        self._writer.writerow(format_row(record))
        self.rows += 1

    def flush(self):
        self._fh.flush()

    def close(self):
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_history(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

"""Per-step run log and its CSV form."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

STEP_COLUMNS = ("n", "t", "dt", "err", "trials", "work", "wall")
TIMING_COLUMNS = ("wall",)


def fmt(value) -> str:
    """17-significant-digit scientific notation for floats, plain for ints."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.16e}"


@dataclass
class RunRecord:
    """Rows ``(n, t, dt, err, trials, work, wall)`` plus run metadata.

    ``work`` and ``wall`` are cumulative from the start of the run.
    """

    meta: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def add(self, n, t, dt, err, trials, work, wall):
        self.rows.append((int(n), float(t), float(dt), float(err), int(trials), int(work), float(wall)))

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        k = STEP_COLUMNS.index(name)
        dtype = int if name in ("n", "trials", "work") else float
        return np.array([r[k] for r in self.rows], dtype=dtype)

    @property
    def total_work(self) -> int:
        return self.rows[-1][5] if self.rows else 0

    def value_at(self, name: str, t: float) -> float:
        """Cumulative counter ``name`` at the first committed time ``>= t``."""
        times = self.column("t")
        k = int(np.searchsorted(times, t * (1 - 1e-12), side="left"))
        if k >= len(times):
            raise ValueError(f"record ends at t = {times[-1]}, before {t}")
        return self.column(name)[k]

    def to_csv(self, path_or_buf=None, include_timing: bool = True) -> str:
        buf = io.StringIO()
        for key in sorted(self.meta):
            buf.write(f"# {key} = {self.meta[key]}\n")
        cols = [c for c in STEP_COLUMNS if include_timing or c not in TIMING_COLUMNS]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        idx = [STEP_COLUMNS.index(c) for c in cols]
        for row in self.rows:
            writer.writerow([fmt(row[i]) for i in idx])
        text = buf.getvalue()
        if path_or_buf is not None:
            if hasattr(path_or_buf, "write"):
                path_or_buf.write(text)
            else:
                with open(path_or_buf, "w", newline="") as fh:
                    fh.write(text)
        return text

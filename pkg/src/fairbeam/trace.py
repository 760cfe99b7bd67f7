"""Per-iteration solve traces and their CSV export."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import MetricsReport, to_db

__all__ = ["RunTrace", "TRACE_COLUMNS"]

TRACE_COLUMNS = ["iteration", "surrogate", "obj_linear", "min_sinr_db", "min_scnr_db", "elapsed_ms"]


@dataclass
class RunTrace:
    """History of one solve: surrogate and true objective per iteration,
    the per-user/per-target ratio vectors, and wall-clock timings."""

    solver: str = ""
    surrogate: list = field(default_factory=list)
    objective_linear: list = field(default_factory=list)
    sinr: list = field(default_factory=list)
    scnr: list = field(default_factory=list)
    elapsed_s: list = field(default_factory=list)
    converged: bool = False
    best_iteration: int = 0

    def append(self, surrogate: float, report: MetricsReport, elapsed_s: float) -> None:
        self.surrogate.append(float(surrogate))
        self.objective_linear.append(report.objective_linear)
        self.sinr.append(np.asarray(report.sinr, dtype=float))
        self.scnr.append(np.asarray(report.scnr, dtype=float))
        self.elapsed_s.append(float(elapsed_s))

    def __len__(self) -> int:
        return len(self.surrogate)

    @property
    def total_seconds(self) -> float:
        return float(sum(self.elapsed_s))

    def min_sinr(self) -> np.ndarray:
        return np.array([float(np.min(s)) for s in self.sinr])

    def min_scnr(self) -> np.ndarray:
        return np.array([float(np.min(s)) for s in self.scnr])

    def relative_changes(self) -> np.ndarray:
        """|surrogate step| / max(|previous|, eps), one entry per iteration
        after the first."""
        s = np.asarray(self.surrogate)
        if len(s) < 2:
            return np.empty(0)
        return np.abs(np.diff(s)) / np.maximum(np.abs(s[:-1]), 1e-12)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for i in range(len(self)):
                writer.writerow(
                    [
                        i + 1,
                        f"{self.surrogate[i]:.12g}",
                        f"{self.objective_linear[i]:.12g}",
                        f"{to_db(float(np.min(self.sinr[i]))):.12g}",
                        f"{to_db(float(np.min(self.scnr[i]))):.12g}",
                        f"{self.elapsed_s[i] * 1e3:.12g}",
                    ]
                )

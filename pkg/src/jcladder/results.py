"""Tabulated sweep output shared by the Lindblad, trajectory and experiment layers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class SweepResult:
    """Observables versus one swept parameter.

    ``columns`` maps a column name to an array with one entry per grid point.
    ``histograms`` (optional) holds the per-point count histograms and
    ``metadata`` whatever is needed to re-run the sweep.
    """

    axis: str
    values: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    histograms: list[Any] | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        for name, col in self.columns.items():
            col = np.asarray(col)
            if col.shape[0] != self.values.shape[0]:
                raise ValueError(f"column {name!r} has {col.shape[0]} rows, expected {self.values.shape[0]}")
            self.columns[name] = col

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

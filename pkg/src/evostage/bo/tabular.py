"""Tabular benchmarks: every configuration and its objective listed in a CSV file."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class TabularFormatError(ValueError):
    pass


@dataclass
class TabularBenchmark:
    name: str
    param_names: list[str]
    ids: list[str]
    configs: np.ndarray  # (rows, params), raw values
    values: np.ndarray
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        lo = self.configs.min(axis=0)
        span = self.configs.max(axis=0) - lo
        span[span == 0] = 1.0
        self.normalized = (self.configs - lo) / span
        self._index = {tuple(row): i for i, row in enumerate(self.normalized)}

    @property
    def best_value(self) -> float:
        return float(self.values.min())

    @property
    def optimum_value(self) -> float:
        return self.best_value

    @property
    def dim(self) -> int:
        return self.configs.shape[1]

    def row_of(self, u) -> int:
        """Row index of a normalized point, snapping to the nearest configuration."""
        key = tuple(np.asarray(u, dtype=float))
        if key in self._index:
            return self._index[key]
        d = np.sum((self.normalized - np.asarray(u, dtype=float)) ** 2, axis=1)
        return int(np.argmin(d))

    def value_at(self, u) -> float:
        return float(self.values[self.row_of(u)])


def load_tabular(path, name: str | None = None) -> TabularBenchmark:
    """Parse ``id,<param columns...>,objective`` rows; errors cite the file row number."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TabularFormatError(f"{path}: empty file") from None
        for required in ("id", "objective"):
            if required not in header:
                raise TabularFormatError(f"{path}: missing column {required!r}")
        if header[0] != "id" or header[-1] != "objective":
            raise TabularFormatError(f"{path}: header must be id,<params...>,objective")
        params = header[1:-1]
        if not params:
            raise TabularFormatError(f"{path}: no parameter columns")
        ids, rows, values, seen = [], [], [], {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise TabularFormatError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            try:
                cfg = tuple(float(c) for c in row[1:-1])
                value = float(row[-1])
            except ValueError:
                raise TabularFormatError(f"{path}: row {lineno} has a non-numeric field") from None
            if cfg in seen:
                raise TabularFormatError(f"{path}: row {lineno} duplicates the configuration of row {seen[cfg]}")
            seen[cfg] = lineno
            ids.append(row[0].strip())
            rows.append(cfg)
            values.append(value)
    if not rows:
        raise TabularFormatError(f"{path}: no data rows")
    return TabularBenchmark(name or str(path), params, ids, np.array(rows), np.array(values))

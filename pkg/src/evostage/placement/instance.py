"""Micro placement instances: movable rectangular cells, nets and a bin grid."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np


@dataclass
class MicroPlacementInstance:
    widths: np.ndarray
    heights: np.ndarray
    nets: list[list[int]]
    layout: tuple[float, float]
    bins: int
    target_density: float
    target_overflow: float
    seed: int
    name: str = "instance"

    def __post_init__(self):
        self.widths = np.asarray(self.widths, dtype=float)
        self.heights = np.asarray(self.heights, dtype=float)
        n = len(self.widths)
        if len(self.heights) != n:
            raise ValueError("widths and heights differ in length")
        for i, net in enumerate(self.nets):
            if len(net) < 2:
                raise ValueError(f"net {i} has fewer than 2 cells")
            if min(net) < 0 or max(net) >= n:
                raise ValueError(f"net {i} references a missing cell")
        if not 0 < self.target_density <= 1:
            raise ValueError("target density must be in (0, 1]")
        if self.total_area > self.target_density * self.layout[0] * self.layout[1]:
            raise ValueError("movable area exceeds target density times layout area")
        # flat pin arrays grouped by net, for reduceat-style per-net reductions
        self.pin_cell = np.array([c for net in self.nets for c in net], dtype=np.intp)
        sizes = np.array([len(net) for net in self.nets], dtype=np.intp)
        self.net_start = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.intp)
        self.pin_net = np.repeat(np.arange(len(self.nets)), sizes)

    @property
    def num_cells(self) -> int:
        return len(self.widths)

    @property
    def total_area(self) -> float:
        return float(np.sum(self.widths * self.heights))

    @property
    def bin_size(self) -> tuple[float, float]:
        return self.layout[0] / self.bins, self.layout[1] / self.bins

    @property
    def max_net_size(self) -> int:
        return max(len(net) for net in self.nets)

    def initial_positions(self) -> np.ndarray:
        """Cells clustered around the layout centre, as an analytical placer starts."""
        rng = np.random.default_rng(self.seed)
        w, h = self.layout
        spread = 0.04 * min(w, h)
        pos = np.column_stack([w / 2 + spread * rng.standard_normal(self.num_cells),
                               h / 2 + spread * rng.standard_normal(self.num_cells)])
        return self.clip(pos)

    def clip(self, pos: np.ndarray) -> np.ndarray:
        lo = np.column_stack([self.widths / 2, self.heights / 2])
        hi = np.column_stack([self.layout[0] - self.widths / 2, self.layout[1] - self.heights / 2])
        return np.clip(pos, lo, hi)

    def statistics(self) -> dict[str, float]:
        w, h = self.layout
        return {
            "num_cells": float(self.num_cells),
            "num_nets": float(len(self.nets)),
            "utilization": self.total_area / (w * h),
            "target_density": self.target_density,
            "target_overflow": self.target_overflow,
            "bins": float(self.bins),
        }

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "layout": {"width": self.layout[0], "height": self.layout[1]},
            "bins": self.bins,
            "target_density": self.target_density,
            "target_overflow": self.target_overflow,
            "seed": self.seed,
            "cells": [{"id": i, "w": float(w), "h": float(h)}
                      for i, (w, h) in enumerate(zip(self.widths, self.heights))],
            "nets": [list(map(int, net)) for net in self.nets],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MicroPlacementInstance":
        cells = sorted(d["cells"], key=lambda c: c["id"])
        if [c["id"] for c in cells] != list(range(len(cells))):
            raise ValueError("cell ids must be 0..n-1")
        return cls(
            widths=np.array([c["w"] for c in cells], dtype=float),
            heights=np.array([c["h"] for c in cells], dtype=float),
            nets=[list(net) for net in d["nets"]],
            layout=(float(d["layout"]["width"]), float(d["layout"]["height"])),
            bins=int(d["bins"]),
            target_density=float(d["target_density"]),
            target_overflow=float(d["target_overflow"]),
            seed=int(d["seed"]),
            name=d.get("name", "instance"),
        )


def generate_instance(
    num_cells: int = 100,
    num_nets: int = 60,
    bins: int = 8,
    layout: float = 64.0,
    target_density: float = 0.9,
    target_overflow: float = 0.10,
    seed: int = 2025,
    name: str = "micro100",
) -> MicroPlacementInstance:
    rng = np.random.default_rng(seed)
    widths = rng.integers(2, 9, num_cells) / 2.0
    heights = rng.integers(2, 9, num_cells) / 2.0
    nets = []
    for _ in range(num_nets):
        size = int(rng.integers(2, 6))
        nets.append(sorted(int(c) for c in rng.choice(num_cells, size=size, replace=False)))
    return MicroPlacementInstance(widths, heights, nets, (layout, layout), bins,
                                  target_density, target_overflow, seed, name)


def load_instance(path) -> MicroPlacementInstance:
    with open(path, encoding="utf-8") as fh:
        return MicroPlacementInstance.from_dict(json.load(fh))


def save_instance(instance: MicroPlacementInstance, path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def reference_instance() -> MicroPlacementInstance:
    ref = resources.files("evostage.data").joinpath("micro100.json")
    return MicroPlacementInstance.from_dict(json.loads(ref.read_text(encoding="utf-8")))

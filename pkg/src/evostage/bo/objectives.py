"""Benchmark objectives evaluated on the unit cube."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


def ackley(x, a=20.0, b=0.2, c=2 * math.pi):
    x = np.asarray(x, dtype=float)
    d = x.size
    return float(-a * math.exp(-b * math.sqrt(np.sum(x * x) / d))
                 - math.exp(np.sum(np.cos(c * x)) / d) + a + math.e)


def rastrigin(x, A=10.0):
    x = np.asarray(x, dtype=float)
    return float(A * x.size + np.sum(x * x - A * np.cos(2 * math.pi * x)))


def griewank(x):
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.size + 1)
    return float(np.sum(x * x) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))) + 1.0)


def levy(x):
    x = np.asarray(x, dtype=float)
    w = 1 + (x - 1) / 4
    head = math.sin(math.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1) ** 2 * (1 + 10 * np.sin(math.pi * w[:-1] + 1) ** 2))
    tail = (w[-1] - 1) ** 2 * (1 + math.sin(2 * math.pi * w[-1]) ** 2)
    return float(head + mid + tail)


@dataclass(frozen=True)
class SyntheticObjective:
    name: str
    fn: Callable
    bounds: np.ndarray  # (d, 2)
    optimum_value: float
    optimum_location: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def to_domain(self, u) -> np.ndarray:
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        return lo + np.asarray(u, dtype=float) * (hi - lo)

    def __call__(self, x) -> float:
        return eval_synthetic(self, x)

    def value_at(self, u) -> float:
        return self(self.to_domain(u))


def _square(lim, d=2):
    return np.array([[-lim, lim]] * d)


SYNTHETIC = {
    "Ackley2D": SyntheticObjective("Ackley2D", ackley, _square(32.768), 0.0, (0.0, 0.0)),
    "Rastrigin2D": SyntheticObjective("Rastrigin2D", rastrigin, _square(5.12), 0.0, (0.0, 0.0)),
    "Griewank2D": SyntheticObjective("Griewank2D", griewank, _square(600.0), 0.0, (0.0, 0.0)),
    "Levy2D": SyntheticObjective("Levy2D", levy, _square(10.0), 0.0, (1.0, 1.0)),
}


def get_objective(name: str) -> SyntheticObjective:
    for key, obj in SYNTHETIC.items():
        if key.lower() == name.lower():
            return obj
    raise KeyError(f"unknown synthetic objective {name!r}; choose from {sorted(SYNTHETIC)}")


def eval_synthetic(objective: SyntheticObjective, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (objective.dim,):
        raise ValueError(f"{objective.name} expects a point of dimension {objective.dim}")
    lo, hi = objective.bounds[:, 0], objective.bounds[:, 1]
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError(f"point {x.tolist()} outside the bounds of {objective.name}")
    return objective.fn(x)

"""Top-M population with rank-based parent selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import AlgorithmIndividual, Legality, MultiStageHeuristic


class SelectionError(RuntimeError):
    pass


@dataclass
class Population:
    capacity: int
    entries: list[AlgorithmIndividual] = field(default_factory=list)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("population capacity must be positive")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def best(self) -> AlgorithmIndividual | None:
        return self.entries[0] if self.entries else None


def rank_entries(population: Population) -> list[tuple[int, AlgorithmIndividual]]:
    # entries are kept sorted (score desc, insertion asc), so rank is position
    return [(i + 1, ind) for i, ind in enumerate(population.entries)]


def selection_probabilities(n_entries: int, capacity: int) -> np.ndarray:
    """Normalized 1/(r + M) weights for ranks 1..n_entries."""
    ranks = np.arange(1, n_entries + 1, dtype=float)
    w = 1.0 / (ranks + capacity)
    return w / w.sum()


def select_parents(population: Population, k: int, rng: np.random.Generator) -> list[AlgorithmIndividual]:
    """Draw k parents independently, with replacement, with p proportional to 1/(rank + M).

    The +M term uses the configured capacity even while the pool is still filling.
    """
    if not population.entries:
        raise SelectionError("no selectable individuals")
    if k < 1:
        raise ValueError("k must be >= 1")
    p = selection_probabilities(len(population.entries), population.capacity)
    idx = rng.choice(len(p), size=k, replace=True, p=p)
    return [population.entries[i] for i in idx]


def update_population(population: Population, offspring: list[AlgorithmIndividual]) -> Population:
    """Keep the top-M of incumbents plus offspring.

    Incumbents come first in the merged list and ``sorted`` is stable, so equal
    scores keep incumbents ahead of offspring and offspring in arrival order.
    """
    for ind in offspring:
        if ind.legality is not Legality.PASS or ind.score is None:
            raise ValueError(f"offspring {ind.id} is not a passing individual")
    merged = sorted(population.entries + list(offspring), key=lambda ind: -ind.score)
    return Population(population.capacity, merged[: population.capacity])


def assemble_algorithm(components: list[MultiStageHeuristic], individual_id: str = "") -> AlgorithmIndividual:
    if not components:
        raise ValueError("an algorithm needs at least one component")
    ks = {c.num_stages for c in components}
    if len(ks) > 1:
        raise ValueError(f"stage-count mismatch: {sorted(ks)}")
    ids = [c.component_id for c in components]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate component_id in {ids}")
    return AlgorithmIndividual(id=individual_id, components=list(components))

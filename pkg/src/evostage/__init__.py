"""Evolution of multi-stage heuristics with coordinator/coder agents."""

from .types import (
    AlgorithmIndividual,
    ExecutionInfo,
    Legality,
    Lineage,
    MultiStageHeuristic,
    OperatorKind,
    StageFragment,
    StageRecord,
)
from .population import Population, assemble_algorithm, rank_entries, select_parents, update_population

__version__ = "0.1.0"

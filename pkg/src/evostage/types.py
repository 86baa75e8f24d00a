"""Core data records shared by the population, harness and engine."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any


class Legality(str, enum.Enum):
    PASS = "Pass"
    ILLEGAL_CODE = "IllegalCode"
    RUNTIME_FAILURE = "RuntimeFailure"
    TIMEOUT = "Timeout"
    NON_FINITE = "NonFinite"
    TARGET_MISSED = "TargetMissed"
    UNEVALUATED = "Unevaluated"


class OperatorKind(str, enum.Enum):
    STAGEWISE_DESIGN = "StagewiseDesign"
    GLOBAL_EXPLORE = "GlobalExplore"
    GLOBAL_ENHANCE = "GlobalEnhance"


@dataclass
class StageFragment:
    stage_index: int
    source: str
    goal_text: str = ""

    def to_dict(self) -> dict:
        return {"stage_index": self.stage_index, "source": self.source, "goal_text": self.goal_text}

    @classmethod
    def from_dict(cls, d: dict) -> "StageFragment":
        return cls(int(d["stage_index"]), d["source"], d.get("goal_text", ""))


@dataclass
class MultiStageHeuristic:
    """One algorithm component split into K ordered stage fragments."""

    component_id: str
    stages: list[StageFragment]
    description: str | None = None

    def __post_init__(self):
        indices = [s.stage_index for s in self.stages]
        if indices != list(range(len(indices))):
            raise ValueError(f"stage indices must be 0..K-1 in order, got {indices}")
        if not indices:
            raise ValueError("a heuristic needs at least one stage")
        for s in self.stages:
            if not s.source.strip():
                raise ValueError(f"stage {s.stage_index} of {self.component_id!r} has empty source")

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    def to_dict(self) -> dict:
        return {
            "component_id": self.component_id,
            "description": self.description,
            "stages": [s.to_dict() for s in self.stages],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MultiStageHeuristic":
        return cls(d["component_id"], [StageFragment.from_dict(s) for s in d["stages"]], d.get("description"))


@dataclass
class StageRecord:
    """Metrics of one executed stage plus a prose summary for the coordinator."""

    metrics: dict[str, float]
    summary: str = ""

    def __post_init__(self):
        for k, v in self.metrics.items():
            if not math.isfinite(v):
                raise ValueError(f"stage metric {k!r} is not finite: {v}")

    def to_dict(self) -> dict:
        return {"metrics": dict(self.metrics), "summary": self.summary}

    @classmethod
    def from_dict(cls, d: dict) -> "StageRecord":
        return cls({k: float(v) for k, v in d["metrics"].items()}, d.get("summary", ""))


@dataclass
class ExecutionInfo:
    initial_record: StageRecord
    stage_records: list[StageRecord] = field(default_factory=list)
    final_metrics: dict[str, float] = field(default_factory=dict)
    task_description: str = ""

    def to_dict(self) -> dict:
        return {
            "task_description": self.task_description,
            "initial_record": self.initial_record.to_dict(),
            "stage_records": [r.to_dict() for r in self.stage_records],
            "final_metrics": dict(self.final_metrics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExecutionInfo":
        return cls(
            initial_record=StageRecord.from_dict(d["initial_record"]),
            stage_records=[StageRecord.from_dict(r) for r in d["stage_records"]],
            final_metrics={k: float(v) for k, v in d["final_metrics"].items()},
            task_description=d.get("task_description", ""),
        )


@dataclass
class Lineage:
    operator: OperatorKind | None = None
    parent_ids: list[str] = field(default_factory=list)
    generation: int = 0

    def to_dict(self) -> dict:
        return {
            "operator": self.operator.value if self.operator else None,
            "parent_ids": list(self.parent_ids),
            "generation": self.generation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Lineage":
        op = d.get("operator")
        return cls(OperatorKind(op) if op else None, list(d["parent_ids"]), int(d["generation"]))


@dataclass
class AlgorithmIndividual:
    id: str
    components: list[MultiStageHeuristic]
    score: float | None = None
    legality: Legality = Legality.UNEVALUATED
    detail: str = ""
    info: ExecutionInfo | None = None
    lineage: Lineage = field(default_factory=Lineage)

    @property
    def num_stages(self) -> int:
        # an individual whose first stage already failed carries no components
        return self.components[0].num_stages if self.components else 0

    def component(self, component_id: str) -> MultiStageHeuristic:
        for c in self.components:
            if c.component_id == component_id:
                return c
        raise KeyError(component_id)

    def stage_sources(self, stage_index: int) -> dict[str, str]:
        """The partial algorithm for one stage: component id -> fragment source."""
        return {c.component_id: c.stages[stage_index].source for c in self.components}

    def set_result(self, legality: Legality, score: float | None, detail: str = "") -> None:
        if legality is Legality.PASS:
            if score is None or not math.isfinite(score):
                raise ValueError("a passing individual needs a finite score")
        else:
            score = None
        self.legality = legality
        self.score = score
        self.detail = detail

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "components": [c.to_dict() for c in self.components],
            "score": self.score,
            "legality": self.legality.value,
            "detail": self.detail,
            "info": self.info.to_dict() if self.info else None,
            "lineage": self.lineage.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlgorithmIndividual":
        return cls(
            id=d["id"],
            components=[MultiStageHeuristic.from_dict(c) for c in d["components"]],
            score=d["score"],
            legality=Legality(d["legality"]),
            detail=d.get("detail", ""),
            info=ExecutionInfo.from_dict(d["info"]) if d.get("info") else None,
            lineage=Lineage.from_dict(d["lineage"]),
        )

"""Stage-by-stage execution of multi-stage algorithms.

A domain implements :class:`StagedTask`; the harness drives it either with
live coordinator/coder calls between stages (Stagewise-Design) or straight
through for a finished algorithm produced by a global operator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Protocol

from .sandbox.handle import SandboxConfigError, default_runtime_command
from .sandbox.legality import CandidateFailure, DomainRules, LegalityVerdict
from .types import (
    AlgorithmIndividual,
    ExecutionInfo,
    Legality,
    MultiStageHeuristic,
    StageFragment,
    StageRecord,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StagePlan:
    boundaries: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.boundaries)

    def offsets(self) -> list[tuple[int, int]]:
        """Half-open [start, end) ranges of each stage."""
        out, start = [], 0
        for b in self.boundaries:
            out.append((start, start + b))
            start += b
        return out


def stage_boundaries(total_budget: int, num_stages: int) -> StagePlan:
    """Even split; the remainder goes one each to the last stages."""
    if num_stages < 1:
        raise ValueError("need at least one stage")
    if total_budget < num_stages:
        raise ValueError(f"budget {total_budget} cannot cover {num_stages} stages")
    base, rem = divmod(total_budget, num_stages)
    return StagePlan(tuple(base + (1 if i >= num_stages - rem else 0) for i in range(num_stages)))


@dataclass(frozen=True)
class ComponentSpec:
    component_id: str
    function_name: str
    signature: str
    description: str

    def prompt_text(self) -> str:
        return f"Component `{self.component_id}`: implement\n    {self.signature}\n{self.description}"


@dataclass
class SandboxSettings:
    runtime_command: list[str] = field(default_factory=default_runtime_command)
    call_timeout_ms: int = 2000
    startup_timeout_ms: int = 10000


class StagedTask(Protocol):
    """A pausable evaluation domain.

    Stage-by-stage design needs the task to stop after each stage and report
    intermediate metrics; a domain that cannot checkpoint its state between
    stages cannot implement this protocol. ``run_stage`` must raise CandidateFailure when a candidate misbehaves and
    return only finite metrics otherwise.
    """

    name: str
    components: list[ComponentSpec]
    rules: DomainRules

    def task_description(self) -> str: ...

    def begin(self, num_stages: int) -> tuple[Any, StageRecord]: ...

    def run_stage(self, state: Any, sources: dict[str, str], stage_index: int) -> StageRecord: ...

    def finalize(self, state: Any) -> tuple[dict[str, float], float | None, LegalityVerdict]: ...


def _failure_from(exc: Exception) -> LegalityVerdict:
    if isinstance(exc, CandidateFailure):
        return exc.verdict
    if isinstance(exc, FloatingPointError):
        return LegalityVerdict(Legality.NON_FINITE, str(exc))
    return LegalityVerdict(Legality.RUNTIME_FAILURE, f"{type(exc).__name__}: {exc}")


def _finish(individual: AlgorithmIndividual, task: StagedTask, state, info: ExecutionInfo) -> AlgorithmIndividual:
    final, score, verdict = task.finalize(state)
    info.final_metrics = final
    individual.info = info
    individual.set_result(verdict.tag, score, verdict.detail)
    return individual


def evaluate_full(individual: AlgorithmIndividual, task: StagedTask) -> AlgorithmIndividual:
    """Run every stage of a complete algorithm with no agent in the loop."""
    k = individual.num_stages
    state, initial = task.begin(k)
    info = ExecutionInfo(initial_record=initial, task_description=task.task_description())
    for i in range(k):
        try:
            record = task.run_stage(state, individual.stage_sources(i), i)
        except SandboxConfigError:
            raise
        except Exception as exc:
            verdict = _failure_from(exc)
            individual.info = info
            individual.set_result(verdict.tag, None, f"stage {i}: {verdict.detail}")
            return individual
        info.stage_records.append(record)
    return _finish(individual, task, state, info)


def run_stagewise_design(task: StagedTask, agents, num_stages: int, generation: int = 0,
                         individual_id: str = "") -> AlgorithmIndividual:
    """Design and execute an algorithm one stage at a time.

    Before stage i the coordinator reflects on I_0..I_{i-1} and emits a goal;
    each coder then writes its fragment for stage i, which is executed at once.
    Agent failures make the individual IllegalCode with the records so far.
    """
    from .agents.roles import AgentFailure

    state, initial = task.begin(num_stages)
    info = ExecutionInfo(initial_record=initial, task_description=task.task_description())
    fragments: dict[str, list[StageFragment]] = {c.component_id: [] for c in task.components}
    descriptions: dict[str, str | None] = {c.component_id: None for c in task.components}

    def partial_individual() -> AlgorithmIndividual:
        comps = [MultiStageHeuristic(cid, frags, descriptions[cid]) for cid, frags in fragments.items() if frags]
        return AlgorithmIndividual(id=individual_id, components=comps, info=info)

    for i in range(num_stages):
        try:
            goal = agents.coordinator_reflect(info, i, generation)
            artifacts = {
                spec.component_id: agents.coder_generate(goal, spec, fragments[spec.component_id], generation)
                for spec in task.components
            }
        except AgentFailure as exc:
            ind = partial_individual()
            ind.set_result(Legality.ILLEGAL_CODE, None, f"stage {i}: {exc}")
            return ind
        for cid, artifact in artifacts.items():
            fragments[cid].append(StageFragment(i, artifact.source, goal.goal_text))
            if artifact.thought:
                descriptions[cid] = artifact.thought
        try:
            record = task.run_stage(state, {cid: a.source for cid, a in artifacts.items()}, i)
        except SandboxConfigError:
            raise
        except Exception as exc:
            verdict = _failure_from(exc)
            ind = partial_individual()
            ind.set_result(verdict.tag, None, f"stage {i}: {verdict.detail}")
            return ind
        info.stage_records.append(record)
    ind = partial_individual()
    return _finish(ind, task, state, info)

"""Coordinator and coder agents.

Agents only build prompts, call the provider and parse replies; they never
touch population or domain state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..types import AlgorithmIndividual, ExecutionInfo, StageFragment, StageRecord
from .extract import ExtractionError, extract_code, join_stages, split_stages
from .providers import LLMRequest, Provider
from .templates import (
    CODE_ONLY,
    COORDINATOR,
    GLOBAL_ENHANCE,
    GLOBAL_EXPLORE,
    GLOBAL_INIT,
    RETRY_NOTE,
    STAGEWISE,
    WITH_THOUGHT,
    PromptTemplate,
    render_prompt,
)

COORDINATOR_ROLE = "coordinator"


class AgentFailure(RuntimeError):
    """The agent answered, but never with something usable."""


@dataclass(frozen=True)
class AgentConfig:
    role: str
    model_name: str = "gpt-4o"
    temperature: float = 0.2

    def __post_init__(self):
        if not 0 <= self.temperature <= 2:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")


def coder_role(component_id: str) -> str:
    return f"coder_{component_id}"


@dataclass
class StageGoal:
    stage_index: int
    goal_text: str
    reflection_text: str = ""


@dataclass
class CodeArtifact:
    source: str
    raw_response: str
    thought: str | None = None
    stages: list[str] | None = None  # set by the one-shot global operators


def _fmt_metrics(metrics: dict[str, float]) -> str:
    return ", ".join(f"{k}={v:.6g}" for k, v in metrics.items())


def format_history(info: ExecutionInfo, upto: int) -> str:
    lines = [f"I_0 (initial): {info.initial_record.summary}", f"    metrics: {_fmt_metrics(info.initial_record.metrics)}"]
    for i, rec in enumerate(info.stage_records[:upto]):
        lines.append(f"Stage {i}: {rec.summary}")
        lines.append(f"    metrics: {_fmt_metrics(rec.metrics)}")
    return "\n".join(lines)


def format_prior_stages(prior: list[StageFragment]) -> str:
    if not prior:
        return "(none: this is the first stage)"
    return "\n\n".join(f"### Stage {f.stage_index} (goal: {f.goal_text})\n```python\n{f.source.rstrip()}\n```"
                       for f in prior)


def format_reference(ind: AlgorithmIndividual, component_id: str, label: str) -> str:
    comp = ind.component(component_id)
    records: list[StageRecord] = ind.info.stage_records if ind.info else []
    parts = [f"### {label} (score {ind.score:.6g})" if ind.score is not None else f"### {label}"]
    for frag in comp.stages:
        rec = records[frag.stage_index] if frag.stage_index < len(records) else None
        outcome = f"{rec.summary} [{_fmt_metrics(rec.metrics)}]" if rec else "(not executed)"
        parts.append(f"Stage {frag.stage_index} | goal: {frag.goal_text or '-'} | outcome: {outcome}\n"
                     f"```python\n{frag.source.rstrip()}\n```")
    return "\n".join(parts)


def parse_thought(text: str) -> str | None:
    head = text.split("```", 1)[0]
    m = re.search(r"\{(.+?)\}", head, re.S)
    thought = m.group(1) if m else head
    thought = " ".join(thought.split())
    return thought or None


def parse_goal(text: str, stage_index: int) -> StageGoal:
    m = re.search(r"^\s*Goal\s*:\s*", text, re.M | re.I)
    if m:
        goal = text[m.end():].strip()
        reflection = re.sub(r"^\s*Reflection\s*:\s*", "", text[: m.start()], flags=re.I).strip()
    else:
        goal, reflection = text.strip(), ""
    if not goal:
        raise AgentFailure(f"coordinator returned no goal for stage {stage_index}")
    return StageGoal(stage_index, goal, reflection)


class Agents:
    """One coordinator plus one coder per component, sharing a provider."""

    def __init__(self, provider: Provider, task, coordinator: AgentConfig | None = None,
                 coder_model: str = "gpt-4o", coder_temperature: float = 0.2,
                 thoughts_of_code: bool = False, max_retries: int = 2):
        self.provider = provider
        self.task = task
        self.coordinator = coordinator or AgentConfig(COORDINATOR_ROLE, "gpt-4o", 0.7)
        self.coders = {c.component_id: AgentConfig(coder_role(c.component_id), coder_model, coder_temperature)
                       for c in task.components}
        self.thoughts_of_code = thoughts_of_code
        self.max_retries = max_retries

    def _call(self, cfg: AgentConfig, template: PromptTemplate, bindings: dict, stage_index: int,
              generation: int, parse, suffix: str = ""):
        prompt = render_prompt(template, bindings) + suffix
        last = None
        for attempt in range(self.max_retries + 1):
            text = self.provider.complete(LLMRequest(cfg.role, template.template_id, stage_index, generation,
                                                     attempt, cfg.model_name, cfg.temperature, prompt))
            try:
                return parse(text)
            except (ExtractionError, AgentFailure) as exc:
                last = exc
                if not prompt.endswith(RETRY_NOTE):
                    prompt += RETRY_NOTE
        raise AgentFailure(f"{cfg.role}/{template.template_id}: {last}")

    def _code_parser(self, num_stages: int | None = None):
        def parse(text: str) -> CodeArtifact:
            source = extract_code(text)
            stages = split_stages(source, num_stages) if num_stages else None
            thought = parse_thought(text) if self.thoughts_of_code else None
            return CodeArtifact(source, text, thought, stages)
        return parse

    @property
    def _format_suffix(self) -> str:
        return WITH_THOUGHT if self.thoughts_of_code else CODE_ONLY

    def _component_specs(self) -> str:
        return "\n".join(c.prompt_text() for c in self.task.components)

    def coordinator_reflect(self, info: ExecutionInfo, stage_index: int, generation: int = 0) -> StageGoal:
        bindings = {
            "task_description": self.task.task_description(),
            "component_spec": self._component_specs(),
            "history_info": format_history(info, stage_index),
            "stage_index": stage_index,
        }
        return self._call(self.coordinator, COORDINATOR, bindings, stage_index, generation,
                          lambda text: parse_goal(text, stage_index))

    def coder_generate(self, goal: StageGoal, spec, prior_stages: list[StageFragment],
                       generation: int = 0) -> CodeArtifact:
        bindings = {
            "task_description": self.task.task_description(),
            "component_spec": spec.prompt_text(),
            "history_info": format_prior_stages(prior_stages),
            "stage_index": goal.stage_index,
            "goal": goal.goal_text,
        }
        return self._call(self.coders[spec.component_id], STAGEWISE, bindings, goal.stage_index, generation,
                          self._code_parser(), self._format_suffix)

    def _one_shot(self, template: PromptTemplate, refs: list[AlgorithmIndividual], num_stages: int,
                  generation: int) -> list[CodeArtifact]:
        out = []
        for spec in self.task.components:
            if refs:
                labels = ["Reference design"] if len(refs) == 1 else [f"Reference design {i + 1}" for i in range(len(refs))]
                references = "\n\n".join(format_reference(r, spec.component_id, lab) for r, lab in zip(refs, labels))
                scores = "; ".join(f"{lab}: score {r.score:.6g}, final metrics {_fmt_metrics(r.info.final_metrics)}"
                                   if r.info and r.score is not None else f"{lab}: unscored"
                                   for r, lab in zip(refs, labels))
            else:
                references, scores = "(none)", ""
            bindings = {
                "task_description": self.task.task_description(),
                "component_spec": spec.prompt_text(),
                "references": references,
                "reference_info": f"The design has {num_stages} stages (markers 0..{num_stages - 1}). {scores}".strip(),
            }
            out.append(self._call(self.coders[spec.component_id], template, bindings, 0, generation,
                                  self._code_parser(num_stages), self._format_suffix))
        return out

    def global_explore(self, refs: list[AlgorithmIndividual], num_stages: int, generation: int = 0) -> list[CodeArtifact]:
        if not refs:
            raise ValueError("Global-Explore needs at least one reference")
        return self._one_shot(GLOBAL_EXPLORE, refs, num_stages, generation)

    def global_enhance(self, ref: AlgorithmIndividual, num_stages: int, generation: int = 0) -> list[CodeArtifact]:
        return self._one_shot(GLOBAL_ENHANCE, [ref], num_stages, generation)

    def global_init(self, num_stages: int, generation: int = 0) -> list[CodeArtifact]:
        return self._one_shot(GLOBAL_INIT, [], num_stages, generation)


__all__ = [
    "AgentConfig", "AgentFailure", "Agents", "CodeArtifact", "StageGoal", "coder_role", "join_stages",
    "format_history", "format_prior_stages", "format_reference", "parse_goal", "parse_thought",
]

"""Prompt templates for the coordinator, the coders and the global operators."""

from __future__ import annotations

import re
from dataclasses import dataclass

PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


class TemplateError(KeyError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str

    @property
    def placeholders(self) -> list[str]:
        return sorted(set(PLACEHOLDER.findall(self.body)))


def render_prompt(template: PromptTemplate, bindings: dict[str, object]) -> str:
    missing = [name for name in template.placeholders if name not in bindings]
    if missing:
        raise TemplateError(f"template {template.template_id!r} is missing bindings: {', '.join(missing)}")
    return PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), template.body)


COORDINATOR = PromptTemplate("coordinator", """\
You are the coordinator of a team of algorithm designers. The algorithm is designed stage by stage:
after each stage runs, you receive its execution information and guide the design of the next stage.

## Task
{task_description}

## Algorithm components (one coder per component)
{component_spec}

## Execution information so far
{history_info}

## Your job
We are about to design stage {stage_index}. First analyze how the previous stages behaved: what went
well, what went wrong, and which metrics moved in which direction. Then give a concrete goal for stage
{stage_index} that every coder should follow.

Answer in exactly this form:
Reflection: <your analysis>
Goal: <the goal for the next stage>
""")

STAGEWISE = PromptTemplate("stagewise", """\
You are the coder responsible for one algorithm component.

## Task
{task_description}

## Your component
{component_spec}

## Code you wrote for earlier stages
{history_info}

## Goal for stage {stage_index}
{goal}

Write the complete function for stage {stage_index}. It runs only during this stage; keep the exact
signature given above and use only the Python standard library, math and numpy.
""")

GLOBAL_EXPLORE = PromptTemplate("global_explore", """\
You are the coder responsible for one algorithm component. Below are multi-stage designs from earlier
rounds together with what happened in each stage.

## Task
{task_description}

## Your component
{component_spec}

## Reference designs
{references}

## Outcomes
{reference_info}

Create a new multi-stage design whose idea differs from all references. It may borrow from them or be
entirely new. Write every stage as a complete function with the exact signature above, each preceded
by a marker line `# --- stage i ---`, all inside one fenced code block.
""")

GLOBAL_ENHANCE = PromptTemplate("global_enhance", """\
You are the coder responsible for one algorithm component. Below is one multi-stage design together
with what happened in each stage.

## Task
{task_description}

## Your component
{component_spec}

## Design to improve
{references}

## Outcome
{reference_info}

Improve this design by making a few modifications, for example tuning its parameters or thresholds.
Write every stage as a complete function with the exact signature above, each preceded by a marker
line `# --- stage i ---`, all inside one fenced code block.
""")

GLOBAL_INIT = PromptTemplate("global_init", """\
You are the coder responsible for one algorithm component.

## Task
{task_description}

## Your component
{component_spec}

## Format
{reference_info}

Write every stage as a complete function with the exact signature above, each preceded by a marker
line `# --- stage i ---`, all inside one fenced code block.
""")

CODE_ONLY = "\nReturn only the code in one fenced ```python block.\n"
WITH_THOUGHT = ("\nFirst describe the idea of your design in one sentence inside braces {like this}, "
                "then give the code in one fenced ```python block.\n")
RETRY_NOTE = "\nYour previous answer could not be used. Return only code in one fenced block.\n"

TEMPLATES = {t.template_id: t for t in (COORDINATOR, STAGEWISE, GLOBAL_EXPLORE, GLOBAL_ENHANCE, GLOBAL_INIT)}

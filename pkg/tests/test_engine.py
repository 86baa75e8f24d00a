import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import InProcessTask, ScriptedProvider, make_individual, toy_answer, value_code
from evostage.agents import Agents, ProviderError
from evostage.config import config_from_dict
from evostage.engine import reproduce, run_evolution, schedule_operator
from evostage.population import Population
from evostage.types import Legality, OperatorKind


def toy_config(**over):
    base = {"population_size": 3, "generations": 3, "offspring_per_generation": 3, "stage_count": 2,
            "budget_cap": 9, "domain": "toy"}
    base.update(over)
    return config_from_dict(base, "gp")


def toy_run(answer=toy_answer, **over):
    cfg = toy_config(**over)
    task = InProcessTask()
    agents = Agents(ScriptedProvider(answer), task, max_retries=cfg.llm.max_retries)
    return run_evolution(cfg, task, agents), agents


def test_schedule_cycles_in_fixed_order():
    assert [schedule_operator(i) for i in range(6)] == [
        OperatorKind.STAGEWISE_DESIGN, OperatorKind.GLOBAL_EXPLORE, OperatorKind.GLOBAL_ENHANCE] * 2
    with pytest.raises(ValueError):
        schedule_operator(-1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60))
def test_schedule_counts_are_balanced(n):
    counts = {k: 0 for k in OperatorKind}
    for i in range(n):
        counts[schedule_operator(i)] += 1
    assert max(counts.values()) - min(counts.values()) <= 1


def test_run_respects_budget_and_separates_initialization():
    report, agents = toy_run(generations=10, budget_cap=7)
    assert len(report.init_records) == 3
    assert len(report.records) == 7
    assert [r.index for r in report.records] == list(range(7))
    # last generation is cut short by the budget
    assert [r.generation for r in report.records] == [1, 1, 1, 2, 2, 2, 3]
    assert not report.aborted


def test_generations_bound_the_run():
    report, _ = toy_run(generations=2, budget_cap=100)
    assert len(report.records) == 6


def test_population_improves_and_curve_is_monotone():
    report, _ = toy_run()
    curve = report.best_score_curve()
    assert all(b >= a for a, b in zip(curve, curve[1:]))
    assert len(report.population) == 3
    assert report.best_individual.score == curve[-1]


def test_parallel_matches_sequential():
    a, _ = toy_run()
    b, _ = toy_run(parallel=True)
    assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]
    assert [e.id for e in a.population] == [e.id for e in b.population]


def test_selection_is_seeded():
    def parents(seed):
        report, _ = toy_run(seed=seed, generations=4, budget_cap=12)
        return [ind.lineage.parent_ids for ind in report.individuals.values()]

    assert parents(3) == parents(3)


def test_operators_get_the_right_parent_counts():
    report, _ = toy_run(generations=2, budget_cap=6, selection_count=2)
    for r in report.records:
        ind = report.individuals[r.individual_id]
        want = {OperatorKind.STAGEWISE_DESIGN: 0, OperatorKind.GLOBAL_EXPLORE: 2, OperatorKind.GLOBAL_ENHANCE: 1}
        assert len(ind.lineage.parent_ids) == want[r.operator]
        assert ind.lineage.operator is r.operator


def test_provider_error_aborts_with_partial_report():
    def answer(request):
        if request.generation == 2:
            raise ProviderError("endpoint gone")
        return toy_answer(request)

    report, _ = toy_run(answer=answer)
    assert report.aborted and "endpoint gone" in report.abort_reason
    assert len(report.records) == 3


def test_agent_failures_become_illegal_code():
    def answer(request):
        if request.template_id == "global_explore":
            return "no code here, sorry."
        return toy_answer(request)

    report, agents = toy_run(answer=answer)
    ge = [r for r in report.records if r.operator is OperatorKind.GLOBAL_EXPLORE]
    assert ge and all(r.legality is Legality.ILLEGAL_CODE for r in ge)
    # each failing call was retried max_retries times
    attempts = [req.attempt for req in agents.provider.log if req.template_id == "global_explore"]
    assert set(attempts) == {0, 1, 2}


def test_candidate_failures_are_verdicts():
    def answer(request):
        if request.template_id == "global_enhance":
            body = "".join(f"# --- stage {i} ---\ndef value():\n    return float('nan')\n" for i in range(2))
            return f"```python\n{body}```\n"
        return toy_answer(request)

    report, _ = toy_run(answer=answer)
    enh = [r for r in report.records if r.operator is OperatorKind.GLOBAL_ENHANCE]
    assert all(r.legality is Legality.NON_FINITE for r in enh)
    assert report.pass_rate == pytest.approx(6 / 9)


def test_empty_population_falls_back_to_global_init(caplog):
    cfg = toy_config()
    task = InProcessTask()
    agents = Agents(ScriptedProvider(toy_answer), task)
    with caplog.at_level(logging.WARNING):
        child = reproduce(OperatorKind.GLOBAL_EXPLORE, Population(3), task, agents,
                          np.random.default_rng(0), cfg, 1, "c")
    assert child.legality is Legality.PASS
    assert "empty population" in caplog.text
    assert agents.provider.log[-1].template_id == "global_init"


def test_initialization_without_stagewise_design_uses_global_init():
    report, agents = toy_run(flags={"multi_stage_initialization": False}, generations=0)
    init_templates = {r.template_id for r in agents.provider.log}
    assert init_templates == {"global_init"}
    assert all(r.legality is Legality.PASS for r in report.init_records)


def test_all_failing_initialization_still_runs():
    def answer(request):
        if request.generation == 0 and request.role != "coordinator":
            return value_code("oops")  # str return -> float() raises
        return toy_answer(request)

    report, _ = toy_run(answer=answer)
    assert report.init_pass_rate == 0.0
    assert len(report.records) == 9
    # global operators had nothing to select from at generation 1
    first_ge = report.individuals[report.records[1].individual_id]
    assert first_ge.lineage.parent_ids == []


def test_on_generation_callback_sees_every_update():
    cfg = toy_config()
    task = InProcessTask()
    seen = []
    run_evolution(cfg, task, Agents(ScriptedProvider(toy_answer), task),
                  on_generation=lambda g, pop, rep: seen.append((g, len(rep.records))))
    assert seen == [(0, 0), (1, 3), (2, 6), (3, 9)]


def test_operator_counts():
    report, _ = toy_run()
    assert report.operator_counts() == {"StagewiseDesign": 3, "GlobalExplore": 3, "GlobalEnhance": 3}


def test_best_individual_includes_initial_population():
    report, _ = toy_run(generations=0)
    assert report.records == []
    assert report.best_individual is not None
    assert report.best_individual.id.startswith("g0-")


def test_reproduce_assigns_lineage():
    cfg = toy_config()
    task = InProcessTask()
    agents = Agents(ScriptedProvider(toy_answer), task)
    pop = Population(3, [make_individual("p", score=1.0, components=("value",))])
    child = reproduce(OperatorKind.GLOBAL_ENHANCE, pop, task, agents, np.random.default_rng(0), cfg, 2, "kid")
    assert child.lineage.parent_ids == ["p"] and child.lineage.generation == 2
    assert child.components[0].stages[0].goal_text == "GlobalEnhance rewrite"

import numpy as np
import pytest

from evostage.agents.providers import Provider
from evostage.harness import ComponentSpec
from evostage.sandbox import live_handle_count
from evostage.sandbox.legality import CandidateFailure, DomainRules, LegalityVerdict
from evostage.types import AlgorithmIndividual, Legality, MultiStageHeuristic, StageFragment, StageRecord


@pytest.fixture(autouse=True)
def no_leaked_children():
    yield
    assert live_handle_count() == 0, "a test left a candidate process running"


def make_individual(ind_id="x", score=None, k=2, components=("a",), legality=None):
    comps = [MultiStageHeuristic(c, [StageFragment(i, f"v = {i}\n", f"goal {i}") for i in range(k)])
             for c in components]
    ind = AlgorithmIndividual(ind_id, comps)
    if score is not None:
        ind.set_result(Legality.PASS, score)
    elif legality is not None:
        ind.set_result(legality, None, "scripted")
    return ind


VALUE_SPEC = ComponentSpec("value", "value", "value() -> float", "Return a number.")


class InProcessTask:
    """A staged task that runs fragments in-process: each stage defines value().

    The score is the sum of the values returned by every stage; a fragment
    that raises gives RuntimeFailure, a NaN gives NonFinite.
    """

    name = "toy"

    def __init__(self):
        self.components = [VALUE_SPEC]
        self.rules = DomainRules("bo")
        self.stage_calls = 0

    def task_description(self):
        return "Sum the values of every stage."

    def begin(self, num_stages):
        return {"total": 0.0}, StageRecord({"total": 0.0}, "nothing yet")

    def run_stage(self, state, sources, stage_index):
        self.stage_calls += 1
        ns = {}
        try:
            exec(sources["value"], ns)
            v = float(ns["value"]())
        except SyntaxError as exc:
            raise CandidateFailure(Legality.ILLEGAL_CODE, str(exc)) from None
        if not np.isfinite(v):
            raise CandidateFailure(Legality.NON_FINITE, "value is not finite")
        state["total"] += v
        return StageRecord({"total": state["total"]}, f"total now {state['total']}")

    def finalize(self, state):
        return {"total": state["total"]}, state["total"], LegalityVerdict(Legality.PASS)


def value_code(v) -> str:
    return f"```python\ndef value():\n    return float({str(v)!r})\n```\n"


class ScriptedProvider(Provider):
    """Answers every request from a function of the request; no files needed."""

    def __init__(self, answer):
        super().__init__()
        self.answer = answer

    def _complete(self, request):
        return self.answer(request)


def toy_answer(request):
    if request.role == "coordinator":
        return f"Reflection: fine.\nGoal: add {request.stage_index + 1}\n"
    if request.template_id == "stagewise":
        return value_code(float(request.stage_index + 1 + request.generation))
    # one-shot operators: K marked stages; K is read back from the prompt
    import re

    k = int(re.search(r"The design has (\d+) stages", request.prompt).group(1))
    body = "".join(f"# --- stage {i} ---\ndef value():\n    return {float(request.generation + i)!r}\n" for i in range(k))
    return f"```python\n{body}```\n"


@pytest.fixture
def toy_task():
    return InProcessTask()


# one line per acceptance criterion, filled in by test_acceptance and echoed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

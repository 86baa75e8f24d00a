from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from conftest import make_individual
from evostage.population import (
    Population,
    SelectionError,
    assemble_algorithm,
    rank_entries,
    select_parents,
    selection_probabilities,
    update_population,
)
from evostage.types import (
    AlgorithmIndividual,
    ExecutionInfo,
    Legality,
    Lineage,
    MultiStageHeuristic,
    OperatorKind,
    StageFragment,
    StageRecord,
)


def exact_probs(n, m):
    w = [Fraction(1, r + m) for r in range(1, n + 1)]
    s = sum(w)
    return [float(x / s) for x in w]


def test_selection_probabilities_match_exact_fractions():
    for n, m in [(5, 5), (3, 3), (1, 5), (2, 5), (7, 4)]:
        np.testing.assert_allclose(selection_probabilities(n, m), exact_probs(n, m), rtol=0, atol=1e-15)


def test_published_five_entry_weights():
    # normalized 1/(r+5), r = 1..5, as quoted to four decimals; the first quoted
    # value is 0.2582 while the exact one is 0.25814, hence 1e-4 rather than 5e-5
    np.testing.assert_allclose(selection_probabilities(5, 5), [0.2582, 0.2213, 0.1936, 0.1721, 0.1549], atol=1e-4)
    np.testing.assert_allclose(selection_probabilities(5, 5)[0], 0.25814, atol=5e-6)


def test_selection_uses_capacity_not_current_size():
    # two entries in an M=5 pool: weights 1/6 and 1/7
    np.testing.assert_allclose(selection_probabilities(2, 5), [7 / 13, 6 / 13])


def test_select_parents_frequencies():
    pop = Population(5, [make_individual(str(i), score=-i) for i in range(5)])
    rng = np.random.default_rng(1)
    picks = select_parents(pop, 20000, rng)
    counts = np.bincount([int(p.id) for p in picks], minlength=5)
    assert chisquare(counts, 20000 * selection_probabilities(5, 5)).pvalue > 0.001


def test_select_parents_with_replacement_and_errors():
    pop = Population(3, [make_individual("only", score=1.0)])
    assert [p.id for p in select_parents(pop, 2, np.random.default_rng(0))] == ["only", "only"]
    with pytest.raises(SelectionError, match="no selectable"):
        select_parents(Population(3), 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        select_parents(pop, 0, np.random.default_rng(0))


def test_update_population_keeps_top_m_and_prefers_incumbents_on_ties():
    inc = [make_individual("i1", score=5.0), make_individual("i2", score=3.0)]
    pop = Population(3, inc)
    off = [make_individual("o1", score=3.0), make_individual("o2", score=4.0), make_individual("o3", score=1.0)]
    new = update_population(pop, off)
    assert [e.id for e in new.entries] == ["i1", "o2", "i2"]
    assert [r for r, _ in rank_entries(new)] == [1, 2, 3]
    assert len(pop.entries) == 2  # the input population is untouched


def test_update_population_rejects_failed_offspring():
    with pytest.raises(ValueError, match="not a passing"):
        update_population(Population(2), [make_individual("bad", legality=Legality.TIMEOUT)])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.lists(st.floats(-1e6, 1e6), max_size=6), st.lists(st.floats(-1e6, 1e6), max_size=8))
def test_update_population_properties(m, inc_scores, off_scores):
    inc = sorted((make_individual(f"i{j}", score=s) for j, s in enumerate(inc_scores)), key=lambda x: -x.score)[:m]
    pop = Population(m, inc)
    off = [make_individual(f"o{j}", score=s) for j, s in enumerate(off_scores)]
    new = update_population(pop, off)
    scores = [e.score for e in new.entries]
    assert len(new) == min(m, len(inc) + len(off))
    assert scores == sorted(scores, reverse=True)
    everything = sorted([e.score for e in inc] + off_scores, reverse=True)
    assert scores == everything[: len(scores)]
    # best never gets worse
    if inc:
        assert new.best.score >= pop.best.score


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.integers(1, 10))
def test_selection_probabilities_properties(n, m):
    p = selection_probabilities(n, m)
    assert p.sum() == pytest.approx(1.0)
    assert np.all(np.diff(p) < 0)
    # ratio between best and worst is bounded by (n + m) / (1 + m)
    assert p[0] / p[-1] == pytest.approx((n + m) / (1 + m))


def test_assemble_algorithm_checks():
    a = MultiStageHeuristic("a", [StageFragment(0, "x=1\n", ""), StageFragment(1, "x=2\n", "")])
    b = MultiStageHeuristic("b", [StageFragment(0, "x=1\n", "")])
    with pytest.raises(ValueError, match="stage-count mismatch"):
        assemble_algorithm([a, b])
    with pytest.raises(ValueError, match="duplicate component_id"):
        assemble_algorithm([a, a])
    ind = assemble_algorithm([a], "id1")
    assert ind.legality is Legality.UNEVALUATED and ind.num_stages == 2


def test_multistage_heuristic_validation():
    with pytest.raises(ValueError):
        MultiStageHeuristic("a", [StageFragment(1, "x=1\n", "")])
    with pytest.raises(ValueError):
        MultiStageHeuristic("a", [StageFragment(0, "   ", "")])


def test_set_result_invariant():
    ind = make_individual()
    ind.set_result(Legality.TIMEOUT, 3.0, "slow")
    assert ind.score is None
    with pytest.raises(ValueError):
        ind.set_result(Legality.PASS, float("nan"))
    with pytest.raises(ValueError):
        ind.set_result(Legality.PASS, None)


def test_stage_record_rejects_nonfinite():
    with pytest.raises(ValueError):
        StageRecord({"a": float("inf")}, "")


def test_individual_round_trip():
    ind = make_individual("r", score=-2.5, k=3, components=("a", "b"))
    ind.info = ExecutionInfo(StageRecord({"m": 1.0}, "start"), [StageRecord({"m": 2.0}, "s0")], {"f": 3.0}, "task")
    ind.lineage = Lineage(OperatorKind.GLOBAL_EXPLORE, ["p1", "p2"], 4)
    back = AlgorithmIndividual.from_dict(ind.to_dict())
    assert back == ind
    assert back.stage_sources(1) == {"a": "v = 1\n", "b": "v = 1\n"}

import itertools
import json
import logging
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evostage.fixtures import shipped_candidate
from evostage.harness import evaluate_full, stage_boundaries
from evostage.placement import (
    AdamState,
    MicroPlacementInstance,
    PlacementTask,
    ScheduleConfig,
    SubproblemSchedule,
    adam_step,
    calibrated_schedule,
    density_overflow,
    generate_instance,
    hpwl,
    load_instance,
    reference_instance,
    run_subproblem_sequence,
    save_instance,
    smooth_wl,
)
from evostage.placement.numerics import bin_usage, density_footprint
from evostage.sandbox import spawn_candidate
from evostage.types import AlgorithmIndividual, Legality, MultiStageHeuristic, StageFragment

GOLDEN = json.loads((Path(__file__).parent / "golden" / "placement_constant_lr.json").read_text())


def tiny_instance(rng, n=8, nets=6, bins=4, layout=16.0, density=1.0):
    w = rng.integers(2, 7, n) / 2.0
    h = rng.integers(2, 7, n) / 2.0
    netlist = [sorted(rng.choice(n, int(rng.integers(2, min(n, 4) + 1)), replace=False).tolist()) for _ in range(nets)]
    return MicroPlacementInstance(w, h, netlist, (layout, layout), bins, density, 0.1, 0)


def random_positions(inst, rng):
    return inst.clip(rng.uniform(0, inst.layout[0], (inst.num_cells, 2)))


def brute_hpwl(inst, pos):
    total = 0.0
    for net in inst.nets:
        xs = [pos[c][0] for c in net]
        ys = [pos[c][1] for c in net]
        total += (max(xs) - min(xs)) + (max(ys) - min(ys))
    return total


# ---------------------------------------------------------------- wirelength

def test_single_net_hpwl():
    inst = MicroPlacementInstance([1.0, 1.0], [1.0, 1.0], [[0, 1]], (10.0, 10.0), 2, 1.0, 0.1, 0)
    assert hpwl(inst, np.array([[0.0, 0.0], [3.0, 4.0]])) == 7.0


def test_hpwl_matches_brute_force_on_100_instances():
    rng = np.random.default_rng(7)
    for _ in range(100):
        inst = tiny_instance(rng, n=int(rng.integers(2, 15)), nets=int(rng.integers(1, 10)))
        # eighths of a unit: every partial sum is exact, so order cannot matter
        pos = rng.integers(0, 129, (inst.num_cells, 2)) / 8.0
        assert hpwl(inst, pos) == brute_hpwl(inst, pos)
        pos = rng.uniform(0, 16, (inst.num_cells, 2))
        assert hpwl(inst, pos) == pytest.approx(brute_hpwl(inst, pos), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
def test_hpwl_is_translation_invariant(seed, dx, dy):
    rng = np.random.default_rng(seed)
    inst = tiny_instance(rng)
    pos = rng.uniform(0, 16, (inst.num_cells, 2))
    assert hpwl(inst, pos + [dx, dy]) == pytest.approx(hpwl(inst, pos), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 4.0))
def test_smooth_wl_bounds_hpwl(seed, gamma):
    # each log-sum-exp max overestimates by at most gamma*log(pins)
    rng = np.random.default_rng(seed)
    inst = tiny_instance(rng)
    pos = rng.uniform(0, 16, (inst.num_cells, 2))
    value, _ = smooth_wl(inst, pos, gamma)
    slack = sum(4 * gamma * np.log(len(net)) for net in inst.nets)
    h = hpwl(inst, pos)
    assert h - 1e-9 <= value <= h + slack + 1e-9


def central_difference(f, x, h):
    g = np.zeros_like(x)
    for idx in itertools.product(*map(range, x.shape)):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


def test_smooth_wl_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(20):
        inst = tiny_instance(rng)
        pos = random_positions(inst, rng)
        gamma = float(rng.uniform(0.5, 4.0))
        _, g = smooth_wl(inst, pos, gamma)
        fd = central_difference(lambda p: smooth_wl(inst, p, gamma)[0], pos, 1e-5)
        assert rel_err(g, fd) < 1e-4


def away_from_kinks(inst, pos, margin=0.05):
    """True when no footprint edge is near a bin edge and no bin sits near zero excess."""
    fw, fh, _ = density_footprint(inst)
    bw, bh = inst.bin_size
    for centre, size, b in ((pos[:, 0], fw, bw), (pos[:, 1], fh, bh)):
        for edge in (centre - size / 2, centre + size / 2):
            frac = np.abs(edge / b - np.round(edge / b))
            if np.any(frac * b < margin):
                return False
    excess = bin_usage(inst, pos) - inst.target_density * bw * bh
    return bool(np.all(np.abs(excess) > margin))


def test_density_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 20:
        inst = tiny_instance(rng, n=12, bins=4, layout=12.0, density=0.6)
        pos = rng.uniform(3, 9, (inst.num_cells, 2))  # crowded centre, so many bins overflow
        if not away_from_kinks(inst, pos):
            continue
        _, _, g = density_overflow(inst, pos)
        fd = central_difference(lambda p: density_overflow(inst, p)[1], pos, 1e-6)
        assert np.linalg.norm(fd) > 0
        assert rel_err(g, fd) < 1e-4
        checked += 1


def brute_bin_usage(inst, pos):
    fw, fh, scale = density_footprint(inst)
    bw, bh = inst.bin_size
    usage = np.zeros((inst.bins, inst.bins))
    for c in range(inst.num_cells):
        x0, x1 = pos[c, 0] - fw[c] / 2, pos[c, 0] + fw[c] / 2
        y0, y1 = pos[c, 1] - fh[c] / 2, pos[c, 1] + fh[c] / 2
        for i in range(inst.bins):
            for j in range(inst.bins):
                ox = max(0.0, min(x1, (i + 1) * bw) - max(x0, i * bw))
                oy = max(0.0, min(y1, (j + 1) * bh) - max(y0, j * bh))
                usage[i, j] += ox * oy * scale[c]
    return usage


def test_bin_usage_and_overflow_match_rectangle_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        inst = tiny_instance(rng, n=10, density=0.5)
        pos = random_positions(inst, rng)
        usage = brute_bin_usage(inst, pos)
        np.testing.assert_allclose(bin_usage(inst, pos), usage, atol=1e-12)
        bw, bh = inst.bin_size
        excess = np.maximum(usage - inst.target_density * bw * bh, 0)
        overflow, penalty, _ = density_overflow(inst, pos)
        assert overflow == pytest.approx(excess.sum() / inst.total_area, abs=1e-12)
        assert penalty == pytest.approx(np.sum(excess**2), abs=1e-9)


def test_footprint_preserves_area():
    inst = reference_instance()
    fw, fh, scale = density_footprint(inst)
    np.testing.assert_allclose(fw * fh * scale, inst.widths * inst.heights)
    assert np.all(fw >= np.sqrt(2) * inst.bin_size[0] - 1e-12)
    # interior cells: total usage equals total area
    pos = np.full((inst.num_cells, 2), 32.0)
    assert bin_usage(inst, pos).sum() == pytest.approx(inst.total_area)


def test_spread_cells_have_no_overflow():
    inst = MicroPlacementInstance([1.0] * 4, [1.0] * 4, [[0, 1]], (8.0, 8.0), 2, 0.9, 0.1, 0)
    pos = np.array([[2.0, 2.0], [6.0, 2.0], [2.0, 6.0], [6.0, 6.0]])
    overflow, penalty, grad = density_overflow(inst, pos)
    assert overflow == 0.0 and penalty == 0.0 and not grad.any()


# ---------------------------------------------------------------------- adam

def reference_adam(grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Textbook Adam written with scalars, one parameter at a time."""
    n = len(grads[0])
    m, v = [0.0] * n, [0.0] * n
    deltas = []
    for t, g in enumerate(grads, start=1):
        step = []
        for i in range(n):
            m[i] = b1 * m[i] + (1 - b1) * g[i]
            v[i] = b2 * v[i] + (1 - b2) * g[i] ** 2
            mh = m[i] / (1 - b1**t)
            vh = v[i] / (1 - b2**t)
            step.append(-lr * mh / (vh**0.5 + eps))
        deltas.append(step)
    return deltas


def test_adam_matches_reference_over_100_steps():
    rng = np.random.default_rng(0)
    for lr in (1e-3, 0.1, 2.0):
        grads = rng.normal(size=(100, 6)) * rng.uniform(0.01, 100, 6)
        state = AdamState.zeros(6)
        got = []
        for g in grads:
            state, d = adam_step(state, g, lr)
            got.append(d)
        np.testing.assert_allclose(got, reference_adam(grads.tolist(), lr), rtol=0, atol=1e-10)
        assert state.t == 100


def test_adam_first_step_has_magnitude_lr():
    for lr in (1e-4, 0.01, 0.5, 3.0):
        _, d = adam_step(AdamState.zeros(3), np.ones(3), lr)
        np.testing.assert_allclose(np.abs(d), lr, atol=1e-6)
        _, d = adam_step(AdamState.zeros(1), -np.ones(1), lr)
        assert d[0] == pytest.approx(lr, abs=1e-6)


def test_adam_rejects_bad_input():
    with pytest.raises(ValueError):
        adam_step(AdamState.zeros(2), np.ones(2), 0.0)
    with pytest.raises(FloatingPointError):
        adam_step(AdamState.zeros(2), np.array([1.0, np.nan]), 0.1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=5), st.floats(1e-4, 1.0))
def test_adam_step_is_bounded_by_lr(g, lr):
    # |delta| <= lr * (1-b1)/sqrt(1-b2) on the first step, i.e. roughly lr
    _, d = adam_step(AdamState.zeros(len(g)), np.array(g), lr)
    assert np.all(np.abs(d) <= lr * (1 + 1e-9))


# ------------------------------------------------------------------ instance

def test_reference_instance_shape():
    inst = reference_instance()
    assert inst.num_cells == 100 and len(inst.nets) == 60 and inst.bins == 8
    assert inst.target_overflow == 0.10
    assert inst.statistics()["utilization"] < inst.target_density
    # the shipped file is what the generator produces
    assert inst.to_dict() == generate_instance().to_dict()


def test_instance_round_trip(tmp_path):
    inst = generate_instance(num_cells=20, num_nets=10, seed=4)
    save_instance(inst, tmp_path / "i.json")
    back = load_instance(tmp_path / "i.json")
    assert back.to_dict() == inst.to_dict()


def test_instance_validation():
    with pytest.raises(ValueError, match="fewer than 2"):
        MicroPlacementInstance([1.0, 1.0], [1.0, 1.0], [[0]], (4.0, 4.0), 2, 1.0, 0.1, 0)
    with pytest.raises(ValueError, match="missing cell"):
        MicroPlacementInstance([1.0, 1.0], [1.0, 1.0], [[0, 5]], (4.0, 4.0), 2, 1.0, 0.1, 0)
    with pytest.raises(ValueError, match="exceeds"):
        MicroPlacementInstance([4.0], [4.0], [], (4.0, 4.0), 2, 0.5, 0.1, 0)


# ------------------------------------------------------------------ schedule

def test_calibrated_schedule_is_geometric():
    sched = calibrated_schedule(reference_instance(), ScheduleConfig())
    lam = np.array(sched.lambdas)
    assert len(lam) == 40
    np.testing.assert_allclose(lam[1:] / lam[:-1], 1.1)
    with pytest.raises(ValueError):
        SubproblemSchedule((1.0, 1.0))
    with pytest.raises(ValueError):
        SubproblemSchedule((0.0, 1.0))


def placement_individual(lr_name, steps_name, k=4):
    lr = shipped_candidate(lr_name).read_text()
    steps = shipped_candidate(steps_name).read_text()
    return AlgorithmIndividual("p", [
        MultiStageHeuristic("learning_rate", [StageFragment(i, lr, "") for i in range(k)]),
        MultiStageHeuristic("optimization_steps", [StageFragment(i, steps, "") for i in range(k)]),
    ])


def test_constant_lr_reaches_target_and_matches_golden():
    inst = reference_instance()
    cfg = ScheduleConfig()
    sched = calibrated_schedule(inst, cfg)
    src = {n: shipped_candidate(n).read_text() for n in ("constant_lr.py", "fixed_steps.py")}
    with spawn_candidate(src["constant_lr.py"], "learning_rate") as lr, \
            spawn_candidate(src["fixed_steps.py"], "optimization_steps") as steps:
        records, final, score, verdict = run_subproblem_sequence(inst, lr, steps, sched, stage_boundaries(40, 4), cfg)
    assert verdict.tag is Legality.PASS
    assert final["overflow"] <= 0.10
    assert final["hpwl"] == GOLDEN["final_hpwl"]
    assert final["steps"] == GOLDEN["adam_steps"]
    assert score == -final["hpwl"]
    assert len(records) == 4


def test_task_evaluation_matches_direct_sequence():
    ind = evaluate_full(placement_individual("constant_lr.py", "fixed_steps.py"), PlacementTask(reference_instance()))
    assert ind.legality is Legality.PASS
    assert ind.score == -GOLDEN["final_hpwl"]
    # stages after the target was reached do no work
    assert [r.metrics["steps"] for r in ind.info.stage_records][1:] == [0.0, 0.0, 0.0]


def test_timid_learning_rate_misses_target():
    ind = evaluate_full(placement_individual("tiny_lr.py", "fixed_steps.py"), PlacementTask(reference_instance()))
    assert ind.legality is Legality.TARGET_MISSED and ind.score is None
    assert ind.info.final_metrics["overflow"] > 0.10


def test_step_counts_are_clamped(caplog):
    inst = reference_instance()
    task = PlacementTask(inst, ScheduleConfig(num_subproblems=4, step_cap=5))
    ind = placement_individual("constant_lr.py", "fixed_steps.py", k=2)
    with caplog.at_level(logging.WARNING):
        ind = evaluate_full(ind, task)
    assert "clamped to 5" in caplog.text
    assert ind.info.final_metrics["steps"] == 20.0  # 4 subproblems x 5 steps
    assert ind.legality is Legality.TARGET_MISSED


def test_nonpositive_learning_rate_is_runtime_failure():
    ind = placement_individual("constant_lr.py", "fixed_steps.py", k=1)
    ind.components[0].stages[0].source = ind.components[0].stages[0].source.replace("0.1", "-0.1")
    ind = evaluate_full(ind, PlacementTask(reference_instance(), ScheduleConfig(num_subproblems=2)))
    assert ind.legality is Legality.RUNTIME_FAILURE and "non-positive" in ind.detail

"""Penalty-method placement driven by evolved learning-rate and step schedules."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..harness import ComponentSpec, SandboxSettings, StagePlan, stage_boundaries
from ..sandbox.handle import CandidateHandle, spawn_candidate
from ..sandbox.legality import CandidateFailure, DomainRules, ExecutionOutcome, LegalityVerdict, classify_legality
from ..types import Legality, StageRecord
from .adam import AdamState, adam_step
from .instance import MicroPlacementInstance
from .numerics import density_overflow, hpwl, smooth_wl

log = logging.getLogger(__name__)

LR_COMPONENT = ComponentSpec(
    "learning_rate",
    "adjust_learning_rate",
    "adjust_learning_rate(step_num: int, log_objective: float, log_objective_prev: float, overflow: float, "
    "log_lambda: float, learning_rate_prev: float, log_gradient_norm: float) -> float",
    "Return the Adam learning rate (layout units, > 0) for the next gradient step.",
)
STEPS_COMPONENT = ComponentSpec(
    "optimization_steps",
    "optimization_steps",
    "optimization_steps(subproblem_index: int, overflow: float, log_lambda: float) -> int",
    "Return how many Adam steps to spend on the next Lagrangian-relaxed subproblem.",
)


@dataclass
class ScheduleConfig:
    num_subproblems: int = 40
    step_cap: int = 100
    lambda_growth: float = 1.1
    gamma_bins: float = 4.0
    gamma_decay: float = 0.98
    init_learning_rate: float = 0.5
    objective_cap: float = 1e9


@dataclass(frozen=True)
class SubproblemSchedule:
    lambdas: tuple[float, ...]

    def __post_init__(self):
        if any(l <= 0 for l in self.lambdas):
            raise ValueError("multipliers must be positive")
        if any(b <= a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ValueError("multipliers must be strictly increasing")

    @property
    def count(self) -> int:
        return len(self.lambdas)


def calibrated_schedule(instance: MicroPlacementInstance, cfg: ScheduleConfig) -> SubproblemSchedule:
    """Geometric multipliers; the first balances wirelength and penalty gradient norms at the start."""
    pos = instance.initial_positions()
    _, g_wl = smooth_wl(instance, pos, cfg.gamma_bins * instance.bin_size[0])
    _, _, g_pen = density_overflow(instance, pos)
    pen_norm = float(np.linalg.norm(g_pen))
    lam0 = float(np.linalg.norm(g_wl)) / pen_norm if pen_norm > 0 else 1e-3
    return SubproblemSchedule(tuple(lam0 * cfg.lambda_growth**s for s in range(cfg.num_subproblems)))


def schedule_legality(final_metrics: dict, target_overflow: float, objective_cap: float = 1e9) -> LegalityVerdict:
    rules = DomainRules("schedule", target_overflow, objective_cap)
    return classify_legality(ExecutionOutcome(None, final_metrics), rules)


def _log(x: float) -> float:
    return math.log(max(x, 1e-300))


class PlacementRun:
    """Mutable state of one subproblem sequence; stages advance it in place."""

    def __init__(self, instance: MicroPlacementInstance, schedule: SubproblemSchedule, cfg: ScheduleConfig):
        self.instance = instance
        self.schedule = schedule
        self.cfg = cfg
        self.pos = instance.initial_positions()
        self.adam = AdamState.zeros(self.pos.shape)
        self.subproblem = 0
        self.step_num = 0
        self.lr_prev = cfg.init_learning_rate
        self.log_objective_prev: float | None = None
        self.last_log_grad_norm = 0.0
        self.overflow = density_overflow(instance, self.pos)[0]
        self.reached = self.overflow <= instance.target_overflow

    def gamma(self, s: int) -> float:
        return self.cfg.gamma_bins * self.instance.bin_size[0] * self.cfg.gamma_decay**s

    def metrics(self) -> dict[str, float]:
        s = min(self.subproblem, self.schedule.count - 1)
        swl, _ = smooth_wl(self.instance, self.pos, self.gamma(s))
        return {
            "hpwl": hpwl(self.instance, self.pos),
            "smooth_wl": swl,
            "overflow": self.overflow,
            "lambda": self.schedule.lambdas[s],
        }

    def _objective(self, s: int):
        lam = self.schedule.lambdas[s]
        wl, g_wl = smooth_wl(self.instance, self.pos, self.gamma(s))
        overflow, pen, g_pen = density_overflow(self.instance, self.pos)
        grad = g_wl + lam * g_pen
        return wl + lam * pen, grad, overflow

    def run_subproblems(self, lr_handle: CandidateHandle, steps_handle: CandidateHandle, stop: int) -> tuple[int, list[float]]:
        """Advance through subproblems up to ``stop``; returns (steps used, log grad norms)."""
        used, log_norms = 0, []
        target = self.instance.target_overflow
        while self.subproblem < stop and not self.reached:
            s = self.subproblem
            log_lambda = math.log(self.schedule.lambdas[s])
            reply = steps_handle.call({"op": "steps", "subproblem_index": s,
                                       "overflow": self.overflow, "log_lambda": log_lambda})
            steps = _reply_number(steps_handle, reply, "steps")
            clamped = int(min(max(round(steps), 1), self.cfg.step_cap))
            if clamped != steps:
                log.warning("step count %s clamped to %d", steps, clamped)
            for _ in range(clamped):
                value, grad, overflow = self._objective(s)
                self.overflow = overflow
                if overflow <= target:
                    self.reached = True
                    break
                if not (math.isfinite(value) and np.all(np.isfinite(grad))):
                    raise CandidateFailure(Legality.NON_FINITE, f"non-finite objective at step {self.step_num}")
                log_obj = _log(value)
                log_norm = _log(float(np.linalg.norm(grad)))
                reply = lr_handle.call({
                    "op": "learning_rate",
                    "step_num": self.step_num,
                    "log_objective": log_obj,
                    "log_objective_prev": log_obj if self.log_objective_prev is None else self.log_objective_prev,
                    "overflow": overflow,
                    "log_lambda": log_lambda,
                    "learning_rate_prev": self.lr_prev,
                    "log_gradient_norm": log_norm,
                })
                lr = _reply_number(lr_handle, reply, "learning_rate")
                if not lr > 0:
                    raise CandidateFailure(Legality.RUNTIME_FAILURE, f"non-positive learning rate {lr}")
                self.adam, delta = adam_step(self.adam, grad, lr)
                self.pos = self.instance.clip(self.pos + delta)
                if not np.all(np.isfinite(self.pos)):
                    raise CandidateFailure(Legality.NON_FINITE, f"positions diverged at step {self.step_num}")
                self.lr_prev = lr
                self.log_objective_prev = log_obj
                self.step_num += 1
                used += 1
                log_norms.append(log_norm)
            else:
                self.overflow = density_overflow(self.instance, self.pos)[0]
                self.reached = self.overflow <= target
            if not self.reached:
                self.subproblem += 1
        if log_norms:
            self.last_log_grad_norm = float(np.mean(log_norms))
        return used, log_norms


def _reply_number(handle: CandidateHandle, reply: dict, key: str) -> float:
    value = reply.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        handle.close()
        raise CandidateFailure(Legality.RUNTIME_FAILURE, f"reply lacks numeric {key!r}: {reply!r}")
    return value


def stage_record(before: dict, after: dict, steps: int, mean_log_norm: float) -> StageRecord:
    metrics = {
        "hpwl": after["hpwl"],
        "smooth_wl": after["smooth_wl"],
        "overflow": after["overflow"],
        "delta_hpwl": after["hpwl"] - before["hpwl"],
        "delta_overflow": after["overflow"] - before["overflow"],
        "mean_log_gradient_norm": mean_log_norm,
        "steps": float(steps),
        "lambda": after["lambda"],
    }
    verb = "fell" if after["overflow"] < before["overflow"] else "rose"
    wverb = "fell" if after["hpwl"] < before["hpwl"] else "rose"
    summary = (f"{steps} Adam steps; overflow {verb} {before['overflow']:.3f} -> {after['overflow']:.3f}; "
               f"HPWL {wverb} {before['hpwl']:.1f} -> {after['hpwl']:.1f}; lambda now {after['lambda']:.3g}")
    return StageRecord(metrics, summary)


def run_subproblem_sequence(instance: MicroPlacementInstance, lr_handle: CandidateHandle,
                            steps_handle: CandidateHandle, schedule: SubproblemSchedule, plan: StagePlan,
                            cfg: ScheduleConfig | None = None):
    """Whole run with one pair of handles.

    Returns (stage records, final metrics, score, verdict); candidate failures
    become the verdict and truncate the records.
    """
    cfg = cfg or ScheduleConfig(num_subproblems=schedule.count)
    run = PlacementRun(instance, schedule, cfg)
    records = []
    try:
        for _, end in plan.offsets():
            before = run.metrics()
            used, norms = run.run_subproblems(lr_handle, steps_handle, end)
            records.append(stage_record(before, run.metrics(), used, run.last_log_grad_norm))
    except CandidateFailure as exc:
        return records, run.metrics(), None, exc.verdict
    final = run.metrics()
    final["steps"] = float(run.step_num)
    verdict = schedule_legality(final, instance.target_overflow, cfg.objective_cap)
    score = -final["hpwl"] if verdict.passed else None
    return records, final, score, verdict


@dataclass
class PlacementTask:
    """StagedTask over a micro placement instance with two evolved components."""

    instance: MicroPlacementInstance
    cfg: ScheduleConfig = field(default_factory=ScheduleConfig)
    sandbox: SandboxSettings = field(default_factory=SandboxSettings)
    name: str = "placement"

    def __post_init__(self):
        self.components = [LR_COMPONENT, STEPS_COMPONENT]
        self.rules = DomainRules("schedule", self.instance.target_overflow, self.cfg.objective_cap)
        self.schedule = calibrated_schedule(self.instance, self.cfg)

    def task_description(self) -> str:
        inst, cfg = self.instance, self.cfg
        return (
            "Global placement of a small netlist by gradient descent (Adam) under the penalty method. "
            f"The instance has {inst.num_cells} movable cells, {len(inst.nets)} nets and a "
            f"{inst.bins}x{inst.bins} bin grid on a {inst.layout[0]:g}x{inst.layout[1]:g} layout. "
            f"The objective is smoothed wirelength plus lambda times a bin-density penalty; {cfg.num_subproblems} "
            f"subproblems are solved in order with lambda growing by {cfg.lambda_growth}x each time. "
            f"The run stops once overflow <= {inst.target_overflow}; the final HPWL is the score "
            "(lower is better). Two components are designed: the learning-rate schedule and the "
            f"per-subproblem optimization step count (capped at {cfg.step_cap})."
        )

    def begin(self, num_stages: int):
        run = PlacementRun(self.instance, self.schedule, self.cfg)
        run.plan = stage_boundaries(self.cfg.num_subproblems, num_stages)
        m = run.metrics()
        metrics = {**self.instance.statistics(), "hpwl": m["hpwl"], "overflow": m["overflow"],
                   "lambda": m["lambda"], "init_learning_rate": self.cfg.init_learning_rate,
                   "subproblems_per_stage": float(run.plan.boundaries[0])}
        summary = (f"Start: HPWL {m['hpwl']:.1f}, overflow {m['overflow']:.3f}, target overflow "
                   f"{self.instance.target_overflow}. Each stage covers {run.plan.boundaries} subproblems.")
        return run, StageRecord(metrics, summary)

    def run_stage(self, run: PlacementRun, sources: dict[str, str], stage_index: int) -> StageRecord:
        before = run.metrics()
        end = run.plan.offsets()[stage_index][1]
        sb = self.sandbox
        lr = steps = None
        try:
            lr = spawn_candidate(sources["learning_rate"], "learning_rate", sb.runtime_command,
                                 sb.call_timeout_ms, sb.startup_timeout_ms)
            steps = spawn_candidate(sources["optimization_steps"], "optimization_steps", sb.runtime_command,
                                    sb.call_timeout_ms, sb.startup_timeout_ms)
            used, _ = run.run_subproblems(lr, steps, end)
        finally:
            for h in (lr, steps):
                if h is not None:
                    h.close()
        return stage_record(before, run.metrics(), used, run.last_log_grad_norm)

    def finalize(self, run: PlacementRun):
        final = run.metrics()
        final["steps"] = float(run.step_num)
        verdict = schedule_legality(final, self.instance.target_overflow, self.cfg.objective_cap)
        return final, (-final["hpwl"] if verdict.passed else None), verdict

"""Bayesian optimization loop split into stages, plus the acquisition-design task."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from ..harness import ComponentSpec, SandboxSettings, StagePlan, stage_boundaries
from ..sandbox.handle import CandidateHandle, spawn_candidate
from ..sandbox.legality import CandidateFailure, DomainRules, LegalityVerdict
from ..types import Legality, StageRecord
from .acquisition import builtin_acquisition
from .gp import gp_fit, gp_posterior
from .tabular import TabularBenchmark

ACQ_COMPONENT = ComponentSpec(
    "acquisition",
    "utility",
    "utility(stage_index: int, iteration: int, best_f: float, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray",
    "Return one utility per candidate point (larger is better; the objective is minimized). "
    "mu and sigma are the GP posterior mean and standard deviation on the standardized target scale; "
    "best_f is the incumbent minimum on that scale.",
)

DEFAULT_INIT = 3
DEFAULT_POOL = 2048
DEFAULT_SAMPLES = 15


def _utilities(acquisition, mu, sigma, best_f, stage_index, iteration) -> np.ndarray:
    if isinstance(acquisition, CandidateHandle):
        reply = acquisition.call({
            "op": "utility",
            "stage_index": stage_index,
            "iteration": iteration,
            "best_f": float(best_f),
            "points": [{"mu": float(m), "sigma": float(s)} for m, s in zip(mu, sigma)],
        })
        u = reply.get("utility")
        if not isinstance(u, list) or len(u) != len(mu):
            acquisition.close()
            raise CandidateFailure(Legality.RUNTIME_FAILURE,
                                   f"utility reply has {len(u) if isinstance(u, list) else 'no'} values for {len(mu)} points")
        return np.asarray(u, dtype=float)
    u = np.asarray(acquisition(mu, sigma, best_f, stage_index=stage_index, iteration=iteration), dtype=float)
    if u.shape != np.shape(mu):
        raise CandidateFailure(Legality.RUNTIME_FAILURE, "utility length differs from the pool")
    if not np.all(np.isfinite(u)):
        raise CandidateFailure(Legality.NON_FINITE, "non-finite utility")
    return u


def propose_next(model, acquisition, pool: np.ndarray, stage_index: int = 0, iteration: int = 0) -> int:
    """Index of the pool point with the highest utility; ties go to the lowest index."""
    if len(pool) == 0:
        raise ValueError("empty candidate pool")
    mu, sigma = gp_posterior(model, pool, standardized=True)
    best_f = float(model.y_std.min()) if model.n else 0.0
    u = _utilities(acquisition, mu, sigma, best_f, stage_index, iteration)
    return int(np.argmax(u))


class BORun:
    """Observations and pool of one optimization run, advanced stage by stage."""

    def __init__(self, objective, total_samples: int = DEFAULT_SAMPLES, seed: int = 0,
                 init_count: int = DEFAULT_INIT, pool_size: int = DEFAULT_POOL):
        if total_samples < init_count:
            raise ValueError("total_samples must cover the initial design")
        self.objective = objective
        self.total_samples = total_samples
        self.init_count = init_count
        rng = np.random.default_rng(seed)
        d = objective.dim
        if isinstance(objective, TabularBenchmark):
            self.pool = objective.normalized
        else:
            self.pool = rng.random((pool_size, d))
        init = qmc.Halton(d, scramble=True, seed=rng).random(init_count) if init_count else np.zeros((0, d))
        if isinstance(objective, TabularBenchmark):
            init = self.pool[[objective.row_of(u) for u in init]]
        self._pending_init = list(init)
        self.X: list[np.ndarray] = []
        self.y: list[float] = []
        self.best_trace: list[float] = []

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def best(self) -> float:
        return min(self.y) if self.y else float("inf")

    def _observe(self, u) -> None:
        self.X.append(np.asarray(u, dtype=float))
        self.y.append(float(self.objective.value_at(u)))
        self.best_trace.append(min(self.best_trace[-1], self.y[-1]) if self.best_trace else self.y[-1])

    def model(self):
        X = np.array(self.X) if self.X else np.zeros((0, self.objective.dim))
        return gp_fit(X, np.array(self.y), dim=self.objective.dim)

    def advance(self, acquisition, until: int, stage_index: int) -> int:
        """Sample until ``until`` observations exist; returns how many were taken."""
        taken = 0
        while self.n < min(until, self.total_samples):
            if self._pending_init:
                self._observe(self._pending_init.pop(0))
            else:
                idx = propose_next(self.model(), acquisition, self.pool, stage_index, self.n)
                self._observe(self.pool[idx])
            taken += 1
        return taken

    def mean_sigma(self) -> float:
        _, sigma = gp_posterior(self.model(), self.pool, standardized=True)
        return float(sigma.mean())

    def gap(self) -> float:
        return self.best - self.objective.optimum_value


def bo_stage_record(run: BORun, best_before: float, taken: int) -> StageRecord:
    improvement = 0.0 if not np.isfinite(best_before) else max(best_before - run.best, 0.0)
    metrics = {
        "best_f": run.best,
        "improvement": improvement,
        "points_sampled": float(taken),
        "mean_sigma": run.mean_sigma(),
        "optimal_gap": run.gap(),
    }
    summary = (f"{taken} samples; best value {run.best:.4g} (improved by {improvement:.4g}); "
               f"mean posterior std over the pool {metrics['mean_sigma']:.3f}")
    return StageRecord(metrics, summary)


@dataclass
class BORunResult:
    X: np.ndarray
    y: np.ndarray
    best_trace: list[float]
    optimal_gap: float
    stage_records: list[StageRecord]
    verdict: LegalityVerdict


def bo_run(objective, acquisition, total_samples: int = DEFAULT_SAMPLES, plan: StagePlan | None = None,
           seed: int = 0, init_count: int = DEFAULT_INIT, pool_size: int = DEFAULT_POOL) -> BORunResult:
    """Full run with one acquisition (builtin name, callable or candidate handle)."""
    if isinstance(acquisition, str):
        acquisition = builtin_acquisition(acquisition)
    plan = plan or stage_boundaries(total_samples, 1)
    if plan.total != total_samples:
        raise ValueError("stage plan does not sum to total_samples")
    run = BORun(objective, total_samples, seed, init_count, pool_size)
    records, verdict = [], LegalityVerdict(Legality.PASS)
    try:
        for i, (_, end) in enumerate(plan.offsets()):
            before = run.best
            taken = run.advance(acquisition, end, i)
            records.append(bo_stage_record(run, before, taken))
    except CandidateFailure as exc:
        verdict = exc.verdict
    return BORunResult(np.array(run.X), np.array(run.y), run.best_trace, run.gap(), records, verdict)


def random_search_gap(objective, total_samples: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    return min(objective.value_at(u) for u in rng.random((total_samples, objective.dim))) - objective.optimum_value


@dataclass
class BOTask:
    """StagedTask that scores an evolved acquisition function by -optimal_gap."""

    objective: object
    total_samples: int = DEFAULT_SAMPLES
    seed: int = 0
    init_count: int = DEFAULT_INIT
    pool_size: int = DEFAULT_POOL
    sandbox: SandboxSettings = field(default_factory=SandboxSettings)
    name: str = "bo"

    def __post_init__(self):
        self.components = [ACQ_COMPONENT]
        self.rules = DomainRules("bo")

    def task_description(self) -> str:
        name = getattr(self.objective, "name", "objective")
        return (
            f"Design the acquisition function of Bayesian optimization minimizing the black-box function {name} "
            f"({self.objective.dim} dimensions). A Gaussian process with a squared-exponential kernel is fitted to "
            f"the observations; the acquisition scores a pool of candidate points and the highest-scoring point "
            f"is evaluated next. The budget is {self.total_samples} samples, the first {self.init_count} drawn "
            "from a quasi-random design. The score is the optimal gap (best found minus the known optimum; "
            "smaller is better)."
        )

    def begin(self, num_stages: int):
        run = BORun(self.objective, self.total_samples, self.seed, self.init_count, self.pool_size)
        run.plan = stage_boundaries(self.total_samples, num_stages)
        metrics = {
            "dimension": float(self.objective.dim),
            "total_samples": float(self.total_samples),
            "initial_design": float(self.init_count),
            "pool_size": float(len(run.pool)),
            "samples_per_stage": float(run.plan.boundaries[0]),
        }
        summary = f"No samples yet; stages take {list(run.plan.boundaries)} samples."
        return run, StageRecord(metrics, summary)

    def run_stage(self, run: BORun, sources: dict[str, str], stage_index: int) -> StageRecord:
        end = run.plan.offsets()[stage_index][1]
        sb = self.sandbox
        before = run.best
        with spawn_candidate(sources["acquisition"], "acquisition", sb.runtime_command,
                             sb.call_timeout_ms, sb.startup_timeout_ms) as handle:
            taken = run.advance(handle, end, stage_index)
        return bo_stage_record(run, before, taken)

    def finalize(self, run: BORun):
        gap = run.gap()
        final = {"optimal_gap": gap, "best_value": run.best, "samples": float(run.n)}
        return final, -gap, LegalityVerdict(Legality.PASS)

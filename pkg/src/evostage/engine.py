"""The generational loop: operator schedule, reproduction, budget and survival."""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agents.providers import ProviderError
from .agents.roles import AgentFailure, Agents, CodeArtifact
from .config import RunConfig
from .harness import evaluate_full, run_stagewise_design
from .population import Population, select_parents, update_population
from .sandbox.legality import pass_rate
from .types import AlgorithmIndividual, Legality, Lineage, MultiStageHeuristic, OperatorKind, StageFragment

log = logging.getLogger(__name__)

_CYCLE = (OperatorKind.STAGEWISE_DESIGN, OperatorKind.GLOBAL_EXPLORE, OperatorKind.GLOBAL_ENHANCE)


def schedule_operator(reproduction_index: int) -> OperatorKind:
    if reproduction_index < 0:
        raise ValueError("reproduction index must be >= 0")
    return _CYCLE[reproduction_index % 3]


@dataclass
class EvaluationRecord:
    index: int
    generation: int
    operator: OperatorKind
    legality: Legality
    score: float | None
    individual_id: str
    wall_time: float = 0.0

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "index": self.index,
            "generation": self.generation,
            "operator": self.operator.value,
            "legality": self.legality.value,
            "score": self.score,
            "individual_id": self.individual_id,
        }
        if timing:
            d["wall_time"] = self.wall_time
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationRecord":
        return cls(d["index"], d["generation"], OperatorKind(d["operator"]), Legality(d["legality"]),
                   d["score"], d["individual_id"], d.get("wall_time", 0.0))


@dataclass
class RunReport:
    config: dict
    init_records: list[EvaluationRecord] = field(default_factory=list)
    records: list[EvaluationRecord] = field(default_factory=list)
    individuals: dict[str, AlgorithmIndividual] = field(default_factory=dict)
    population: Population | None = None
    aborted: bool = False
    abort_reason: str = ""

    @property
    def pass_rate(self) -> float:
        return pass_rate([r.legality for r in self.records]).rate

    @property
    def init_pass_rate(self) -> float:
        return pass_rate([r.legality for r in self.init_records]).rate

    @property
    def best_individual(self) -> AlgorithmIndividual | None:
        best = None
        for r in self.init_records + self.records:
            if r.score is not None and (best is None or r.score > best.score):
                best = self.individuals[r.individual_id]
        return best

    def best_score_curve(self) -> list[float | None]:
        """Best score seen after each budgeted evaluation, seeded by the initial population."""
        best = max((r.score for r in self.init_records if r.score is not None), default=None)
        curve = []
        for r in self.records:
            if r.score is not None and (best is None or r.score > best):
                best = r.score
            curve.append(best)
        return curve

    def operator_counts(self) -> dict[str, int]:
        counts = {k.value: 0 for k in OperatorKind}
        for r in self.records:
            counts[r.operator.value] += 1
        return counts


def _build_offspring(artifacts: list[CodeArtifact], task, kind: OperatorKind, ind_id: str) -> AlgorithmIndividual:
    comps = []
    for spec, art in zip(task.components, artifacts):
        frags = [StageFragment(i, src, f"{kind.value} rewrite") for i, src in enumerate(art.stages)]
        comps.append(MultiStageHeuristic(spec.component_id, frags, art.thought))
    return AlgorithmIndividual(id=ind_id, components=comps)


def reproduce(kind: OperatorKind, population: Population, task, agents: Agents, rng: np.random.Generator,
              config: RunConfig, generation: int, ind_id: str) -> AlgorithmIndividual:
    """Produce and evaluate one offspring; provider errors propagate, everything else is a verdict."""
    k = config.stage_count
    parents: list[AlgorithmIndividual] = []
    if kind is OperatorKind.STAGEWISE_DESIGN:
        child = run_stagewise_design(task, agents, k, generation, ind_id)
    else:
        try:
            if not population.entries:
                log.warning("%s with an empty population; designing from scratch", kind.value)
                artifacts = agents.global_init(k, generation)
            elif kind is OperatorKind.GLOBAL_EXPLORE:
                parents = select_parents(population, config.selection_count, rng)
                artifacts = agents.global_explore(parents, k, generation)
            else:
                parents = select_parents(population, 1, rng)
                artifacts = agents.global_enhance(parents[0], k, generation)
        except AgentFailure as exc:
            child = AlgorithmIndividual(id=ind_id, components=[])
            child.set_result(Legality.ILLEGAL_CODE, None, str(exc))
        else:
            child = evaluate_full(_build_offspring(artifacts, task, kind, ind_id), task)
    child.lineage = Lineage(kind, [p.id for p in parents], generation)
    return child


def _initial_individual(task, agents: Agents, config: RunConfig, ind_id: str) -> AlgorithmIndividual:
    if config.flags.multi_stage_initialization:
        child = run_stagewise_design(task, agents, config.stage_count, 0, ind_id)
        child.lineage = Lineage(OperatorKind.STAGEWISE_DESIGN, [], 0)
        return child
    try:
        artifacts = agents.global_init(config.stage_count, 0)
    except AgentFailure as exc:
        child = AlgorithmIndividual(id=ind_id, components=[])
        child.set_result(Legality.ILLEGAL_CODE, None, str(exc))
    else:
        child = evaluate_full(_build_offspring(artifacts, task, OperatorKind.GLOBAL_EXPLORE, ind_id), task)
    child.lineage = Lineage(None, [], 0)
    return child


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def run_evolution(config: RunConfig, task, agents: Agents, on_generation=None) -> RunReport:
    """Initialize, then evolve for the configured generations within budget_cap.

    Initial-population evaluations are reported separately and are not charged
    to budget_cap. Offspring of one generation all see the same population
    snapshot, so parallel mode gives the same result as sequential mode.
    ``on_generation(generation, population, report)`` is called after each update.
    """
    report = RunReport(config=config.to_dict())
    population = Population(config.population_size)
    report.population = population
    lock = threading.Lock()

    try:
        for j in range(config.population_size):
            ind_id = f"g0-i{j}"
            child, dt = _timed(_initial_individual, task, agents, config, ind_id)
            report.individuals[ind_id] = child
            report.init_records.append(EvaluationRecord(j, 0, child.lineage.operator or OperatorKind.GLOBAL_EXPLORE,
                                                        child.legality, child.score, ind_id, dt))
        population = update_population(population, [c for c in report.individuals.values() if c.legality is Legality.PASS])
        report.population = population
        if on_generation:
            on_generation(0, population, report)

        repro = 0
        for gen in range(1, config.generations + 1):
            n = min(config.offspring_per_generation, config.budget_cap - len(report.records))
            if n <= 0:
                break
            snapshot = population
            jobs = []
            for _ in range(n):
                kind = schedule_operator(repro)
                rng = np.random.default_rng([config.seed, repro])
                jobs.append((repro, kind, rng, f"g{gen}-r{repro}"))
                repro += 1

            def work(job):
                idx, kind, rng, ind_id = job
                child, dt = _timed(reproduce, kind, snapshot, task, agents, rng, config, gen, ind_id)
                return idx, kind, child, dt

            if config.parallel and n > 1:
                with ThreadPoolExecutor(max_workers=n) as pool:
                    results = list(pool.map(work, jobs))
            else:
                results = [work(job) for job in jobs]
            offspring = []
            with lock:
                for idx, kind, child, dt in sorted(results, key=lambda r: r[0]):
                    report.individuals[child.id] = child
                    report.records.append(EvaluationRecord(idx, gen, kind, child.legality, child.score, child.id, dt))
                    if child.legality is Legality.PASS:
                        offspring.append(child)
            population = update_population(population, offspring)
            report.population = population
            if on_generation:
                on_generation(gen, population, report)
    except ProviderError as exc:
        log.error("aborting run: %s", exc)
        report.aborted = True
        report.abort_reason = str(exc)
    return report

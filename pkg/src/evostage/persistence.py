"""JSON persistence for populations and finished runs."""

from __future__ import annotations

import json
from pathlib import Path

from .engine import EvaluationRecord, RunReport
from .population import Population
from .types import AlgorithmIndividual

SCHEMA_VERSION = 1


class PersistenceError(ValueError):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _read(path, kind: str) -> dict:
    path = Path(path)
    raw = path.read_bytes()
    try:
        data = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        offset = len(exc.doc[: exc.pos].encode("utf-8"))
        raise PersistenceError(f"{path}: malformed {kind} file at byte offset {offset}: {exc.msg}") from None
    if not isinstance(data, dict) or "schema_version" not in data:
        raise PersistenceError(f"{path}: not a {kind} file (no schema_version)")
    if data["schema_version"] != SCHEMA_VERSION:
        raise PersistenceError(f"{path}: schema version mismatch: file has {data['schema_version']}, "
                               f"this build reads {SCHEMA_VERSION}")
    if data.get("kind") != kind:
        raise PersistenceError(f"{path}: expected a {kind} file, found {data.get('kind')!r}")
    return data


def population_to_dict(population: Population, generation: int = 0, config: dict | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "population",
        "generation": generation,
        "config": config or {},
        "capacity": population.capacity,
        "entries": [ind.to_dict() for ind in population.entries],
    }


def save_population(population: Population, path, generation: int = 0, config: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps(population_to_dict(population, generation, config)), encoding="utf-8")
    return path


def load_population(path) -> Population:
    data = _read(path, "population")
    return Population(data["capacity"], [AlgorithmIndividual.from_dict(d) for d in data["entries"]])


def load_population_meta(path) -> tuple[Population, int, dict]:
    data = _read(path, "population")
    pop = Population(data["capacity"], [AlgorithmIndividual.from_dict(d) for d in data["entries"]])
    return pop, data["generation"], data["config"]


def run_to_dict(run: RunReport) -> dict:
    """Deterministic view of a run: wall-clock timings are left out."""
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "run",
        "config": run.config,
        "init_records": [r.to_dict() for r in run.init_records],
        "records": [r.to_dict() for r in run.records],
        "individuals": {k: v.to_dict() for k, v in run.individuals.items()},
        "population": population_to_dict(run.population) if run.population else None,
        "aborted": run.aborted,
        "abort_reason": run.abort_reason,
    }


def save_run(run: RunReport, path) -> Path:
    path = Path(path)
    path.write_text(dumps(run_to_dict(run)), encoding="utf-8")
    return path


def load_run(path) -> RunReport:
    data = _read(path, "run")
    pop = data["population"]
    return RunReport(
        config=data["config"],
        init_records=[EvaluationRecord.from_dict(r) for r in data["init_records"]],
        records=[EvaluationRecord.from_dict(r) for r in data["records"]],
        individuals={k: AlgorithmIndividual.from_dict(v) for k, v in data["individuals"].items()},
        population=Population(pop["capacity"], [AlgorithmIndividual.from_dict(d) for d in pop["entries"]])
        if pop else None,
        aborted=data["aborted"],
        abort_reason=data["abort_reason"],
    )

"""Command-line entry points.

Exit codes: 0 success, 2 configuration error, 3 provider failure, 4 domain failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .agents.providers import HTTPProvider, MockProvider, ProviderError
from .agents.roles import AgentConfig, Agents
from .config import ConfigError, RunConfig, config_from_dict, load_config
from .domains import build_task
from .engine import run_evolution
from .harness import evaluate_full
from .persistence import PersistenceError, dumps, load_population, load_run, save_population
from .report import ReportError, emit_report, summary
from .sandbox.handle import SandboxConfigError
from .types import AlgorithmIndividual

EXIT_OK, EXIT_CONFIG, EXIT_PROVIDER, EXIT_DOMAIN = 0, 2, 3, 4

log = logging.getLogger("evostage")


def _config(args) -> RunConfig:
    cfg = load_config(args.config, args.profile) if args.config else config_from_dict({}, args.profile)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _agents(provider, task, cfg: RunConfig) -> Agents:
    coord = AgentConfig("coordinator", cfg.llm.coordinator_model, cfg.llm.coordinator_temperature)
    return Agents(provider, task, coord, cfg.llm.coder_model, cfg.llm.coder_temperature,
                  cfg.flags.thoughts_of_code, cfg.llm.max_retries)


def _evolve(cfg: RunConfig, provider, out: Path | None) -> int:
    task = build_task(cfg)
    agents = _agents(provider, task, cfg)

    def checkpoint(gen, population, report):
        log.info("generation %d: %d evaluations, best %s", gen, len(report.records),
                 population.best.score if population.best else None)
        if out is not None:
            save_population(population, out / "population.json", gen, cfg.to_dict())

    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    report = run_evolution(cfg, task, agents, on_generation=checkpoint)
    log.info("run finished in %.1f s", time.perf_counter() - t0)
    if out is not None:
        emit_report(report, out)
    print(json.dumps(summary(report), sort_keys=True))
    return EXIT_PROVIDER if report.aborted else EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    provider = HTTPProvider()
    return _evolve(cfg, provider, Path(args.out) if args.out else None)


def cmd_replay(args) -> int:
    cfg = _config(args)
    from .fixtures import shipped_fixtures

    fixtures = Path(args.fixtures) if args.fixtures else shipped_fixtures(cfg.profile)
    return _evolve(cfg, MockProvider(fixtures), Path(args.out) if args.out else None)


def _load_individual(path: Path, ind_id: str | None) -> AlgorithmIndividual:
    data = json.loads(path.read_text(encoding="utf-8"))
    if data.get("kind") == "population":
        pop = load_population(path)
        if not pop.entries:
            raise ConfigError(f"{path} holds an empty population")
        if ind_id is None:
            return pop.entries[0]
        for ind in pop.entries:
            if ind.id == ind_id:
                return ind
        raise ConfigError(f"no individual {ind_id!r} in {path}")
    if data.get("kind") == "run":
        run = load_run(path)
        ind = run.individuals.get(ind_id) if ind_id else run.best_individual
        if ind is None:
            raise ConfigError(f"no individual {ind_id!r} in {path}")
        return ind
    return AlgorithmIndividual.from_dict(data)


def cmd_eval_one(args) -> int:
    cfg = _config(args)
    ind = _load_individual(Path(args.individual), args.id)
    task = build_task(cfg)
    ind = evaluate_full(ind, task)
    result = {
        "id": ind.id,
        "legality": ind.legality.value,
        "score": ind.score,
        "detail": ind.detail,
        "final_metrics": ind.info.final_metrics if ind.info else None,
    }
    print(json.dumps(result, sort_keys=True))
    if args.out:
        Path(args.out).write_text(dumps(ind.to_dict()), encoding="utf-8")
    return EXIT_OK


def cmd_report(args) -> int:
    run = load_run(args.run)
    out = Path(args.out) if args.out else Path(args.run).parent
    emit_report(run, out)
    print(json.dumps(summary(run), sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evostage", description="Evolve multi-stage heuristics with LLM agents.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="YAML config file; keys override the profile defaults")
        sp.add_argument("--profile", choices=["gp", "bo"], default=None)
        if seed:
            sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("run", help="evolve with the HTTP provider")
    common(sp)
    sp.add_argument("--out", help="directory for population checkpoints and report files")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("replay", help="evolve offline from scripted agent replies")
    common(sp)
    sp.add_argument("--fixtures", help="fixture directory (default: the shipped set for the profile)")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_replay)

    sp = sub.add_parser("eval-one", help="score one saved individual")
    common(sp)
    sp.add_argument("individual", help="individual, population or run JSON file")
    sp.add_argument("--id", help="individual id inside a population or run file")
    sp.add_argument("--out", help="write the evaluated individual here")
    sp.set_defaults(fn=cmd_eval_one)

    sp = sub.add_parser("report", help="regenerate report files from a saved run.json")
    sp.add_argument("run")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, PersistenceError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (SandboxConfigError, ReportError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except Exception as exc:  # anything raised by the domain code itself
        log.debug("domain failure", exc_info=True)
        print(f"domain error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())

"""Build the staged task named by a run configuration."""

from __future__ import annotations

from .bo.loop import BOTask
from .bo.objectives import SYNTHETIC, get_objective
from .bo.tabular import load_tabular
from .config import ConfigError, RunConfig
from .harness import SandboxSettings
from .placement.instance import load_instance, reference_instance
from .placement.task import PlacementTask, ScheduleConfig

PLACEMENT_OPTIONS = {"instance", "num_subproblems", "step_cap", "lambda_growth", "gamma_bins", "gamma_decay",
                     "init_learning_rate", "objective_cap"}
BO_OPTIONS = {"objective", "tabular", "total_samples", "seed", "init_count", "pool_size"}


def sandbox_settings(config: RunConfig) -> SandboxSettings:
    sb = SandboxSettings(call_timeout_ms=config.sandbox.call_timeout_ms,
                         startup_timeout_ms=config.sandbox.startup_timeout_ms)
    if config.sandbox.runtime_command:
        sb.runtime_command = list(config.sandbox.runtime_command)
    return sb


def build_task(config: RunConfig):
    opts = dict(config.domain_options)
    sb = sandbox_settings(config)
    if config.domain == "placement":
        unknown = sorted(set(opts) - PLACEMENT_OPTIONS)
        if unknown:
            raise ConfigError(f"unknown placement option(s): {', '.join(unknown)}")
        path = opts.pop("instance", None)
        instance = load_instance(path) if path else reference_instance()
        return PlacementTask(instance, ScheduleConfig(**opts), sb)
    if config.domain == "bo":
        unknown = sorted(set(opts) - BO_OPTIONS)
        if unknown:
            raise ConfigError(f"unknown bo option(s): {', '.join(unknown)}")
        if "tabular" in opts:
            objective = load_tabular(opts.pop("tabular"))
            opts.pop("objective", None)
        else:
            name = opts.pop("objective", "Ackley2D")
            try:
                objective = get_objective(name)
            except KeyError as exc:
                raise ConfigError(str(exc)) from None
        opts.setdefault("seed", config.seed)
        return BOTask(objective, sandbox=sb, **opts)
    raise ConfigError(f"unknown domain {config.domain!r}; choose 'placement' or 'bo' "
                      f"(bo objectives: {', '.join(sorted(SYNTHETIC))} or a tabular file)")

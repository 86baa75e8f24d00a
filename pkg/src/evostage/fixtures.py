"""Scripted agent replies for offline replay, plus single-candidate test files.

``python -m evostage.fixtures DIR`` regenerates the shipped sets. Each reply is
keyed the way MockProvider looks it up:
``<role>/<template_id>/g<generation>_s<stage>_a<attempt>.txt``.
"""

from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

from .agents.extract import join_stages
from .config import PROFILES, RunConfig, config_from_dict

# ---------------------------------------------------------------- placement

PLACEMENT_LR = [0.1, 0.08, 0.12, 0.06, 0.09, 0.11]


def _lr_constant(lr: float, note: str) -> str:
    return f'''def adjust_learning_rate(step_num, log_objective, log_objective_prev, overflow, log_lambda,
                         learning_rate_prev, log_gradient_norm):
    # {note}
    return {lr!r}
'''


def _lr_decay(lr: float, half_life: int) -> str:
    return f'''import math


def adjust_learning_rate(step_num, log_objective, log_objective_prev, overflow, log_lambda,
                         learning_rate_prev, log_gradient_norm):
    # exponential decay, halving every {half_life} steps, never below a tenth
    return max({lr!r} * math.pow(0.5, step_num / {half_life}), {lr / 10!r})
'''


def _lr_overflow(lr: float, gain: float) -> str:
    return f'''def adjust_learning_rate(step_num, log_objective, log_objective_prev, overflow, log_lambda,
                         learning_rate_prev, log_gradient_norm):
    # larger moves while cells still overlap a lot, smaller ones near the target
    rate = {lr!r} * (1.0 + {gain!r} * overflow)
    if log_objective > log_objective_prev:
        rate *= 0.7
    return rate
'''


def _steps_fixed(n: int) -> str:
    return f'''def optimization_steps(subproblem_index, overflow, log_lambda):
    return {n}
'''


def _steps_by_overflow(lo: int, hi: int) -> str:
    return f'''def optimization_steps(subproblem_index, overflow, log_lambda):
    # spend more steps while overflow is high
    return {lo} + int(({hi} - {lo}) * min(overflow, 1.0))
'''


_BROKEN_LR = '''def adjust_learning_rate(step_num, log_objective, log_objective_prev, overflow, log_lambda,
                         learning_rate_prev, log_gradient_norm)
    return 0.1
'''

# --------------------------------------------------------------------- bo

_EI_HELPER = '''import math

import numpy as np


def _ei(mu, sigma, best_f):
    sigma = np.maximum(sigma, 1e-12)
    z = (best_f - mu) / sigma
    cdf = 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return (best_f - mu) * cdf + sigma * pdf

'''


def _acq_sigma() -> str:
    return '''import numpy as np


def utility(stage_index, iteration, best_f, mu, sigma):
    # explore first: sample where the model knows least
    return np.asarray(sigma)
'''


def _acq_mix(w_ei: float, kappa: float) -> str:
    return _EI_HELPER + f'''
def utility(stage_index, iteration, best_f, mu, sigma):
    ucb = -mu + {kappa!r} * sigma
    return {w_ei!r} * _ei(mu, sigma, best_f) + {1 - w_ei!r} * ucb
'''


def _acq_ei() -> str:
    return _EI_HELPER + '''
def utility(stage_index, iteration, best_f, mu, sigma):
    return _ei(mu, sigma, best_f)
'''


def _acq_lcb(kappa: float) -> str:
    return f'''def utility(stage_index, iteration, best_f, mu, sigma):
    return -mu + {kappa!r} * sigma
'''


BO_KAPPA = [2.0, 1.5, 2.5, 1.0]

# ------------------------------------------------------------------ writing


def _fence(code: str, thought: str | None = None) -> str:
    head = f"{{{thought}}}\n\n" if thought else ""
    return f"{head}```python\n{code.rstrip()}\n```\n"


def _coordinator_reply(domain: str, gen: int, stage: int, num_stages: int) -> str:
    if domain == "placement":
        goals = [
            "Start with a moderate, steady learning rate and a fixed step budget so cells spread out evenly.",
            "Overflow is falling; keep the learning rate steady and keep the step budget to push density down.",
            "Close in on the overflow target; avoid large moves that would raise wirelength.",
            "Fine tune: small steps that keep overflow under the target while shortening wires.",
        ]
        reflection = ("No stage has run yet." if stage == 0 else
                      f"Stage {stage - 1} reduced overflow; wirelength grew as cells spread.")
    else:
        goals = [
            "Explore: pick points with the largest posterior uncertainty to learn the landscape.",
            "Balance: mix expected improvement with an optimistic bound so promising regions get sampled.",
            "Exploit: keep the same mix, the incumbent region is where the remaining budget pays off.",
        ]
        reflection = ("No stage has run yet." if stage == 0 else
                      f"Stage {stage - 1} lowered the incumbent; posterior uncertainty shrank.")
    goal = goals[min(stage, len(goals) - 1)]
    return f"Reflection: {reflection} (generation {gen})\nGoal: {goal}\n"


def _placement_stagewise(gen: int, stage: int) -> dict[str, str]:
    lr = PLACEMENT_LR[gen % len(PLACEMENT_LR)]
    return {
        "learning_rate": _lr_constant(lr, f"steady rate for stage {stage}"),
        "optimization_steps": _steps_fixed(20 + 5 * (gen % 3)),
    }


def _placement_global(kind: str, gen: int, num_stages: int) -> dict[str, str]:
    lr = PLACEMENT_LR[gen % len(PLACEMENT_LR)]
    if kind == "global_explore":
        lrs = [_lr_decay(lr * 1.5, 150 + 50 * s) for s in range(num_stages)]
        steps = [_steps_by_overflow(10, 40) for _ in range(num_stages)]
        if gen == 3:
            lrs[1] = _BROKEN_LR  # one scripted reply that does not compile
    elif kind == "global_enhance":
        lrs = [_lr_overflow(lr, 0.5 + 0.25 * s) for s in range(num_stages)]
        steps = [_steps_fixed(25) for _ in range(num_stages)]
    else:
        lrs = [_lr_constant(lr, "steady rate") for _ in range(num_stages)]
        steps = [_steps_fixed(20) for _ in range(num_stages)]
    return {"learning_rate": join_stages(lrs), "optimization_steps": join_stages(steps)}


def _bo_stagewise(gen: int, stage: int) -> dict[str, str]:
    kappa = BO_KAPPA[gen % len(BO_KAPPA)]
    return {"acquisition": _acq_sigma() if stage == 0 else _acq_mix(0.4, kappa)}


def _bo_global(kind: str, gen: int, num_stages: int) -> dict[str, str]:
    if kind == "global_explore":
        parts = [_acq_sigma()] + [_acq_ei() for _ in range(num_stages - 1)]
    elif kind == "global_enhance":
        parts = [_acq_sigma()] + [_acq_mix(0.5, BO_KAPPA[gen % len(BO_KAPPA)]) for _ in range(num_stages - 1)]
    else:
        parts = [_acq_lcb(2.0) for _ in range(num_stages)]
    return {"acquisition": join_stages(parts)}


_THOUGHTS = {
    "stagewise": "Follow the stage goal with a small, readable rule.",
    "global_explore": "Explore with uncertainty first, then switch to expected improvement.",
    "global_enhance": "Keep the reference design and shift the mixing weights slightly.",
    "global_init": "A plain optimistic bound in every stage.",
}


def fixture_replies(config: RunConfig) -> dict[str, str]:
    """Relative fixture path -> reply text for a whole run of ``config``."""
    k = config.stage_count
    domain = config.domain
    thoughts = config.flags.thoughts_of_code
    out: dict[str, str] = {}

    def code(kind: str, src: str) -> str:
        return _fence(src, _THOUGHTS[kind] if thoughts else None)

    for gen in range(config.generations + 1):
        for s in range(k):
            out[f"coordinator/coordinator/g{gen}_s{s}_a0.txt"] = _coordinator_reply(domain, gen, s, k)
            per_comp = _placement_stagewise(gen, s) if domain == "placement" else _bo_stagewise(gen, s)
            for cid, src in per_comp.items():
                out[f"coder_{cid}/stagewise/g{gen}_s{s}_a0.txt"] = code("stagewise", src)
        kinds = ["global_init"] if gen == 0 else ["global_explore", "global_enhance", "global_init"]
        for kind in kinds:
            per_comp = _placement_global(kind, gen, k) if domain == "placement" else _bo_global(kind, gen, k)
            for cid, src in per_comp.items():
                out[f"coder_{cid}/{kind}/g{gen}_s0_a0.txt"] = code(kind, src)
    if domain == "placement":
        # the first reply of one coder is prose only, so replay exercises the retry path
        key = "coder_learning_rate/stagewise/g2_s1_a0.txt"
        out["coder_learning_rate/stagewise/g2_s1_a1.txt"] = out[key]
        out[key] = "I would keep the rate steady here, around the previous value, to let overflow settle.\n"
    return out


def write_fixture_set(profile: str, out_dir) -> Path:
    out = Path(out_dir)
    for rel, text in sorted(fixture_replies(config_from_dict({}, profile)).items()):
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return out


# ------------------------------------------------------ single candidates

CANDIDATES = {
    "constant_lr.py": _lr_constant(0.1, "constant rate"),
    "fixed_steps.py": _steps_fixed(20),
    "syntax_error.py": _BROKEN_LR,
    "timeout_lr.py": '''import time


def adjust_learning_rate(step_num, log_objective, log_objective_prev, overflow, log_lambda,
                         learning_rate_prev, log_gradient_norm):
    time.sleep(60)
    return 0.1
''',
    "nan_lr.py": '''def adjust_learning_rate(step_num, log_objective, log_objective_prev, overflow, log_lambda,
                         learning_rate_prev, log_gradient_norm):
    return float("nan")
''',
    # steps this small never get overflow under the target within the schedule
    "tiny_lr.py": _lr_constant(1e-4, "far too timid to spread the cells"),
    "decay_lr.py": _lr_decay(0.15, 200),
    "overflow_lr.py": _lr_overflow(0.08, 0.5),
    "overflow_steps.py": _steps_by_overflow(10, 40),
    "sigma_acq.py": _acq_sigma(),
    "mix_acq.py": _acq_mix(0.4, 2.0),
}


def write_candidates(out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, src in sorted(CANDIDATES.items()):
        (out / name).write_text(src, encoding="utf-8")
    return out


def shipped_fixtures(profile: str) -> Path:
    return Path(str(resources.files("evostage") / "data" / "fixtures" / profile))


def shipped_candidate(name: str) -> Path:
    return Path(str(resources.files("evostage") / "data" / "candidates" / name))


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    root = Path(argv[0]) if argv else Path(str(resources.files("evostage") / "data"))
    for profile in sorted(PROFILES):
        write_fixture_set(profile, root / "fixtures" / profile)
    write_candidates(root / "candidates")
    print(f"wrote fixtures under {root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

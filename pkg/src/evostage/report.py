"""Report files for a finished (or aborted) run.

Every file is rewritten from scratch, so emitting the same run twice yields
byte-identical output. Wall-clock timings are deliberately left out.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bo.acquisition import UCB_KAPPA  # noqa: E402
from .engine import RunReport  # noqa: E402
from .persistence import dumps, save_run  # noqa: E402
from .types import AlgorithmIndividual, Legality  # noqa: E402

CONVERGENCE_COLUMNS = ["evaluation_index", "generation", "operator", "legality", "score", "best_so_far"]


class ReportError(OSError):
    pass


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def convergence_rows(run: RunReport) -> list[dict]:
    rows = []
    for rec, best in zip(run.records, run.best_score_curve()):
        rows.append({
            "evaluation_index": rec.index,
            "generation": rec.generation,
            "operator": rec.operator.value,
            "legality": rec.legality.value,
            "score": _fmt(rec.score),
            "best_so_far": _fmt(best),
        })
    return rows


def convergence_csv(run: RunReport) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, CONVERGENCE_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(convergence_rows(run))
    return buf.getvalue()


def summary(run: RunReport) -> dict:
    best = run.best_individual
    passed = sum(r.legality is Legality.PASS for r in run.records)
    verdicts: dict[str, int] = {}
    for r in run.records:
        verdicts[r.legality.value] = verdicts.get(r.legality.value, 0) + 1
    out = {
        "profile": run.config.get("profile"),
        "domain": run.config.get("domain"),
        "seed": run.config.get("seed"),
        "evaluations": len(run.records),
        "initial_evaluations": len(run.init_records),
        "passed": passed,
        "pass_rate": run.pass_rate,
        "initial_pass_rate": run.init_pass_rate,
        "verdict_counts": verdicts,
        "operator_counts": run.operator_counts(),
        "best_score": best.score if best else None,
        "best_individual": best.id if best else None,
        "best_final_metrics": best.info.final_metrics if best and best.info else None,
        "aborted": run.aborted,
        "abort_reason": run.abort_reason,
    }
    if run.config.get("domain") == "bo":
        out["ucb_kappa"] = UCB_KAPPA
    return out


def best_sources(ind: AlgorithmIndividual | None) -> str:
    if ind is None:
        return "# No passing individual\n"
    lines = [f"# Best individual {ind.id}", "", f"score: {ind.score!r}", ""]
    if ind.lineage.operator:
        parents = ", ".join(ind.lineage.parent_ids) or "-"
        lines += [f"operator: {ind.lineage.operator.value} (generation {ind.lineage.generation}, parents {parents})", ""]
    records = ind.info.stage_records if ind.info else []
    for comp in ind.components:
        lines += [f"## Component `{comp.component_id}`", ""]
        if comp.description:
            lines += [f"Design thought: {comp.description}", ""]
        for frag in comp.stages:
            lines.append(f"### Stage {frag.stage_index}")
            lines.append("")
            lines.append(f"Goal: {frag.goal_text or '-'}")
            if frag.stage_index < len(records):
                lines.append(f"Outcome: {records[frag.stage_index].summary}")
            lines += ["", "```python", frag.source.rstrip(), "```", ""]
    return "\n".join(lines)


def plot_convergence(run: RunReport, path) -> None:
    curve = run.best_score_curve()
    fig, ax = plt.subplots(figsize=(6, 4), dpi=100)
    xs = [r.index + 1 for r in run.records]
    ok = [(x, r.score) for x, r in zip(xs, run.records) if r.score is not None]
    bad = [x for x, r in zip(xs, run.records) if r.score is None]
    if ok:
        ax.scatter(*zip(*ok), s=14, color="tab:blue", alpha=0.6, label="passing offspring")
    pts = [(x, b) for x, b in zip(xs, curve) if b is not None]
    if pts:
        ax.step(*zip(*pts), where="post", color="tab:red", label="best so far")
    if bad:
        lo = min((b for _, b in pts), default=0.0)
        ax.scatter(bad, [lo] * len(bad), marker="x", color="gray", label="failed offspring")
    ax.set_xlabel("evaluation")
    ax.set_ylabel("score")
    ax.set_title(f"{run.config.get('profile', '')} profile, seed {run.config.get('seed')}")
    if ok or bad:
        ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    # no Software tag, so re-emitting produces identical bytes
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def emit_report(run: RunReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "convergence": out / "convergence.csv",
            "summary": out / "summary.json",
            "best": out / "best_individual.md",
            "figure": out / "convergence.png",
            "run": out / "run.json",
        }
        files["convergence"].write_text(convergence_csv(run), encoding="utf-8")
        files["summary"].write_text(dumps(summary(run)), encoding="utf-8")
        files["best"].write_text(best_sources(run.best_individual), encoding="utf-8")
        plot_convergence(run, files["figure"])
        save_run(run, files["run"])
    except OSError as exc:
        raise ReportError(f"cannot write report to {out}: {exc}") from exc
    return files

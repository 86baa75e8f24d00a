"""Legality verdicts and pass-rate accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from ..types import Legality


@dataclass(frozen=True)
class LegalityVerdict:
    tag: Legality
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.tag is Legality.PASS


class CandidateFailure(Exception):
    """Raised when a candidate misbehaves; carries the verdict it earned."""

    def __init__(self, tag: Legality, detail: str = ""):
        super().__init__(f"{tag.value}: {detail}")
        self.verdict = LegalityVerdict(tag, detail)


@dataclass(frozen=True)
class DomainRules:
    """``kind`` is "bo" (legal code passes) or "schedule" (targets must be met too)."""

    kind: str = "bo"
    target_overflow: float = 0.10
    objective_cap: float = 1e9


@dataclass
class ExecutionOutcome:
    failure: LegalityVerdict | None = None
    final_metrics: dict[str, float] = field(default_factory=dict)


def classify_legality(outcome: ExecutionOutcome, rules: DomainRules) -> LegalityVerdict:
    if outcome.failure is not None:
        return outcome.failure
    if rules.kind == "bo":
        return LegalityVerdict(Legality.PASS)
    overflow = outcome.final_metrics["overflow"]
    hpwl = outcome.final_metrics["hpwl"]
    if overflow > rules.target_overflow:
        return LegalityVerdict(
            Legality.TARGET_MISSED, f"overflow {overflow:.4g} > target {rules.target_overflow:.4g}"
        )
    if not hpwl < rules.objective_cap:
        return LegalityVerdict(Legality.TARGET_MISSED, f"hpwl {hpwl:.4g} >= cap {rules.objective_cap:.4g}")
    return LegalityVerdict(Legality.PASS)


class PassRate(NamedTuple):
    rate: float
    passed: int
    total: int
    empty: bool


def pass_rate(verdicts) -> PassRate:
    """Fraction of Pass verdicts; an empty batch is reported as 0 with ``empty`` set."""
    tags = [v.tag if isinstance(v, LegalityVerdict) else Legality(v) for v in verdicts]
    if not tags:
        return PassRate(0.0, 0, 0, True)
    passed = sum(t is Legality.PASS for t in tags)
    return PassRate(passed / len(tags), passed, len(tags), False)

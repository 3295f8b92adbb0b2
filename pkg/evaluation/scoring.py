# evaluation/scoring.py
"""
Outcome and severity of a finished run.

Severity is the sum of the weight-table entries of every collided actor's
true class. Binary mode fails on any collision; weighted mode fails only
when severity exceeds the scenario's failure threshold.
"""

from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field

from evaluation.metrics import RunMetrics
from evaluation.termination import TerminalReason
from scenario_model.errors import ConfigurationError
from scenario_model.types import ActorClass, EvaluationConstraints, EvaluationMode
from world_engine.state import CollisionEvent, EventKind, WorldEvent


class Outcome(str, Enum):
    SUCCESS = "success"
    COLLISION_FAILURE = "collision_failure"
    STALLED = "stalled"
    TIMEOUT = "timeout"
    POLICY_FAULT = "policy_fault"


OUTCOME_EXIT_CODES: Dict[Outcome, int] = {
    Outcome.SUCCESS: 0,
    Outcome.COLLISION_FAILURE: 1,
    Outcome.STALLED: 1,
    Outcome.TIMEOUT: 1,
    Outcome.POLICY_FAULT: 3,
}


class CollisionRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    tick: int
    actor_id: str
    actor_true_class: ActorClass
    relative_speed: float
    penetration: float

    @classmethod
    def of(cls, event: CollisionEvent) -> "CollisionRecord":
        return cls(**event.to_dict())


class RunResult(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    outcome: Outcome
    terminal_reason: TerminalReason
    severity_score: float = Field(ge=0.0)
    collisions: List[CollisionRecord] = Field(default_factory=list)
    metrics: RunMetrics

    @property
    def exit_code(self) -> int:
        return OUTCOME_EXIT_CODES[self.outcome]


def severity(actor_class: ActorClass, table: Mapping[ActorClass, float]) -> float:
    try:
        return float(table[actor_class])
    except KeyError:
        raise ConfigurationError(f"weight table has no entry for '{actor_class.value}'") from None


def collisions_of(events: Iterable[WorldEvent]) -> List[CollisionEvent]:
    return [e.collision for e in events if e.kind == EventKind.COLLISION]


def severity_score(collisions: Iterable[CollisionEvent], table: Mapping[ActorClass, float]) -> float:
    return sum(severity(c.actor_true_class, table) for c in collisions)


def decide_outcome(reason: TerminalReason, score: float, collision_count: int,
                   constraints: EvaluationConstraints) -> Outcome:
    if reason == TerminalReason.POLICY_FAULT:
        return Outcome.POLICY_FAULT
    if reason == TerminalReason.COLLISION:
        return Outcome.COLLISION_FAILURE
    if reason == TerminalReason.STALLED:
        return Outcome.STALLED
    if reason == TerminalReason.TIMEOUT:
        return Outcome.TIMEOUT
    if constraints.mode == EvaluationMode.BINARY:
        passed = collision_count == 0
    else:
        passed = score <= constraints.failure_threshold
    return Outcome.SUCCESS if passed else Outcome.COLLISION_FAILURE


def score_run(events: Iterable[WorldEvent], constraints: EvaluationConstraints, reason: TerminalReason,
              metrics: Optional[RunMetrics] = None) -> RunResult:
    collisions = collisions_of(events)
    score = severity_score(collisions, constraints.weight_table)
    return RunResult(
        outcome=decide_outcome(reason, score, len(collisions), constraints),
        terminal_reason=reason,
        severity_score=score,
        collisions=[CollisionRecord.of(c) for c in collisions],
        metrics=metrics or RunMetrics(route_completion=0.0, ticks_elapsed=0),
    )

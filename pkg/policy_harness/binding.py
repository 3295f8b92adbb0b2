# policy_harness/binding.py
"""
Policy selection (`builtin:<name>` or `exec:<command...>`) and the Policy
objects the run loop talks to.
"""

import logging
import shlex
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from perception.observation import Observation
from policy_harness.actions import EgoAction
from policy_harness.builtin_policies import BUILTIN_NAMES, builtin_act
from policy_harness.external_agent import (
    DEFAULT_HANDSHAKE_TIMEOUT,
    DEFAULT_MAX_SUBSTITUTIONS,
    DEFAULT_TICK_TIMEOUT_MS,
    ExternalAgent,
)
from scenario_model.errors import ConfigurationError, PolicyFault
from world_engine.state import EventKind

logger = logging.getLogger(__name__)

BUILTIN_PREFIX = "builtin:"
EXEC_PREFIX = "exec:"


class PolicyKind(str, Enum):
    BUILTIN = "builtin"
    EXTERNAL = "external"


class PolicyBinding(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: PolicyKind
    name: Optional[str] = None
    command: Optional[str] = None
    handshake_timeout_s: float = Field(DEFAULT_HANDSHAKE_TIMEOUT, gt=0)
    tick_timeout_ms: int = Field(DEFAULT_TICK_TIMEOUT_MS, gt=0)
    max_consecutive_substitutions: int = Field(DEFAULT_MAX_SUBSTITUTIONS, ge=1)

    @model_validator(mode="after")
    def _check_target(self):
        if self.kind == PolicyKind.BUILTIN:
            if self.name not in BUILTIN_NAMES:
                raise ValueError(f"builtin name must be one of {', '.join(BUILTIN_NAMES)}")
        elif not self.command or not shlex.split(self.command):
            raise ValueError("external policy needs a command")
        return self

    @property
    def descriptor(self) -> str:
        if self.kind == PolicyKind.BUILTIN:
            return BUILTIN_PREFIX + self.name
        return EXEC_PREFIX + self.command


def parse_policy(text: str, handshake_timeout_s: float = DEFAULT_HANDSHAKE_TIMEOUT,
                 tick_timeout_ms: int = DEFAULT_TICK_TIMEOUT_MS,
                 max_consecutive_substitutions: int = DEFAULT_MAX_SUBSTITUTIONS) -> PolicyBinding:
    """Parse a CLI policy selector into a binding"""
    text = (text or "").strip()
    try:
        if text.startswith(BUILTIN_PREFIX):
            return PolicyBinding(kind=PolicyKind.BUILTIN, name=text[len(BUILTIN_PREFIX):].strip())
        if text.startswith(EXEC_PREFIX):
            return PolicyBinding(
                kind=PolicyKind.EXTERNAL,
                command=text[len(EXEC_PREFIX):].strip(),
                handshake_timeout_s=handshake_timeout_s,
                tick_timeout_ms=tick_timeout_ms,
                max_consecutive_substitutions=max_consecutive_substitutions,
            )
    except ValueError as e:
        raise ConfigurationError(f"invalid policy '{text}': {e}") from None
    raise ConfigurationError(f"policy must be '{BUILTIN_PREFIX}<name>' or '{EXEC_PREFIX}<command>', got '{text}'")


@dataclass(frozen=True)
class PolicyDecision:
    action: EgoAction
    substitution: Optional[str] = None   # why a Stop replaced the agent's answer


class Policy(ABC):
    """Source of one EgoAction per tick"""

    def start(self, lidar_rays: int, engine_version: str) -> None:
        pass

    @abstractmethod
    def act(self, observation: Observation) -> PolicyDecision:
        ...

    def close(self, reason: str = "finished", tick: int = 0) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close("aborted" if exc_type else "finished")
        return False


class BuiltinPolicy(Policy):
    def __init__(self, name: str):
        self.name = name

    def act(self, observation: Observation) -> PolicyDecision:
        return PolicyDecision(builtin_act(self.name, observation))


class ExternalPolicy(Policy):
    def __init__(self, binding: PolicyBinding):
        self.agent = ExternalAgent(
            binding.command,
            handshake_timeout=binding.handshake_timeout_s,
            tick_timeout_ms=binding.tick_timeout_ms,
            max_substitutions=binding.max_consecutive_substitutions,
        )

    def start(self, lidar_rays: int, engine_version: str) -> None:
        self.agent.start(lidar_rays, engine_version)

    def act(self, observation: Observation) -> PolicyDecision:
        action, reason = self.agent.exchange(observation)
        return PolicyDecision(action, reason)

    def close(self, reason: str = "finished", tick: int = 0) -> None:
        self.agent.close(reason, tick)


class ReplayPolicy(Policy):
    """Feeds the actions of a recorded trace back, tick by tick"""

    def __init__(self, records: Sequence[Dict[str, Any]]):
        self.records = list(records)

    def act(self, observation: Observation) -> PolicyDecision:
        tick = observation.tick
        if tick >= len(self.records):
            raise PolicyFault(f"recorded trace has no action for tick {tick}")
        record = self.records[tick]
        if record.get("action") is None:
            terminal = record.get("terminal") or {}
            raise PolicyFault(terminal.get("detail") or f"recorded policy fault at tick {tick}")
        substitution = None
        for event in record.get("events", ()):
            if event.get("kind") == EventKind.PROTOCOL_SUBSTITUTION.value and event.get("tick") == tick:
                substitution = event.get("payload", {}).get("reason")
                break
        return PolicyDecision(EgoAction.from_wire(record["action"]), substitution)


def create_policy(binding: PolicyBinding) -> Policy:
    logger.debug("[+] Binding policy %s", binding.descriptor)
    if binding.kind == PolicyKind.BUILTIN:
        return BuiltinPolicy(binding.name)
    return ExternalPolicy(binding)

# scenario_model/errors.py
"""
Error hierarchy shared by every CornerSim package.
Each error knows the CLI exit code it maps to.
"""

from typing import List, Optional


class CornerSimError(Exception):
    """Base class for all CornerSim errors"""

    exit_code = 2


class ConfigurationError(CornerSimError):
    exit_code = 2


class ScenarioParseError(CornerSimError):
    """Syntax or schema problem in a scenario document, with a 1-based position"""

    exit_code = 2

    def __init__(self, message: str, line: int = 1, column: int = 1, code: str = "SYNTAX"):
        self.message = message
        self.line = line
        self.column = column
        self.code = code
        super().__init__(f"{line}:{column}: [{code}] {message}")


class SchemaVersionError(ScenarioParseError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(message, line, column, code="SCHEMA_VERSION")


class ScenarioValidationError(CornerSimError):
    """A structurally correct spec that breaks one or more invariants"""

    exit_code = 2

    def __init__(self, violations: List["Violation"], source: Optional[str] = None):  # noqa: F821
        self.violations = list(violations)
        self.source = source
        codes = ", ".join(v.code for v in self.violations)
        prefix = f"{source}: " if source else ""
        super().__init__(f"{prefix}invalid scenario ({codes})")

    @property
    def codes(self) -> List[str]:
        return [v.code for v in self.violations]


class OverrideError(CornerSimError):
    exit_code = 2


class CatalogError(CornerSimError):
    exit_code = 2


class WorldInitError(CornerSimError):
    exit_code = 2


class TraceConsistencyError(CornerSimError):
    """Raised when the trace writer sees a tick gap; indicates an engine bug"""

    exit_code = 1


class IntegrityError(CornerSimError):
    exit_code = 4


class EngineVersionError(CornerSimError):
    exit_code = 5


class ReplayDivergenceError(CornerSimError):
    exit_code = 4

    def __init__(self, tick: int, detail: str = ""):
        self.tick = tick
        super().__init__(f"replay diverged at tick {tick}{': ' + detail if detail else ''}")


class PolicyStartupError(CornerSimError):
    exit_code = 3


class PolicyFault(CornerSimError):
    """The policy can no longer produce actions; the run ends as policy_fault"""

    exit_code = 3

# scenario_dsl/serializer.py
"""
Canonical scenario text: sorted keys, block style, shortest round-trip floats,
expanded maps and a single trailing newline. Structurally equal specs always
produce byte-identical output.
"""

from typing import Any, Dict

import yaml

from scenario_dsl.parser import SCHEMA_VERSION
from scenario_model.errors import ScenarioValidationError
from scenario_model.types import ScenarioSpec
from scenario_model.validation import validate_scenario


class _CanonicalDumper(yaml.SafeDumper):
    """SafeDumper that never emits anchors/aliases for repeated values"""

    def ignore_aliases(self, data: Any) -> bool:
        return True


def scenario_document(spec: ScenarioSpec) -> Dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, "scenario": spec.model_dump(mode="json")}


def serialize_scenario(spec: ScenarioSpec) -> str:
    violations = validate_scenario(spec)
    if violations:
        raise ScenarioValidationError(violations, source=spec.id)
    text = yaml.dump(
        scenario_document(spec),
        Dumper=_CanonicalDumper,
        sort_keys=True,
        default_flow_style=False,
        allow_unicode=True,
        width=4096,
    )
    return text if text.endswith("\n") else text + "\n"

# scenario_dsl/parser.py
"""
Strict parser for .3cs scenario documents.

A document is YAML with exactly two top-level keys, `schema_version` and
`scenario`. Aliases, merge keys, duplicate keys and unknown keys are
rejected. Every failure is raised as a ScenarioParseError carrying a 1-based
line/column, or as a ScenarioValidationError when the document is well formed
but breaks a scenario invariant.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml
from pydantic import ValidationError

from scenario_dsl.maps import TemplateError, expand_template
from scenario_model.errors import (
    ScenarioParseError,
    ScenarioValidationError,
    SchemaVersionError,
)
from scenario_model.types import ScenarioSpec
from scenario_model.validation import validate_scenario

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TOP_LEVEL_KEYS = ("schema_version", "scenario")
MERGE_TAG = "tag:yaml.org,2002:merge"

Marks = Dict[Tuple[Any, ...], Tuple[int, int]]


def _position(mark) -> Tuple[int, int]:
    if mark is None:
        return 1, 1
    return mark.line + 1, mark.column + 1


def _scalar_key(node: yaml.Node) -> Any:
    if not isinstance(node, yaml.ScalarNode):
        line, col = _position(node.start_mark)
        raise ScenarioParseError("mapping keys must be plain scalars", line, col, code="KEY_TYPE")
    return node.value


def _walk(root: yaml.Node) -> Marks:
    """
    Check structural rules on the composed node graph and record where each
    value path starts, so later schema errors can point at the source text.
    """
    marks: Marks = {}
    seen = set()
    stack = [((), root)]
    while stack:
        path, node = stack.pop()
        if id(node) in seen:
            line, col = _position(node.start_mark)
            raise ScenarioParseError("aliases are not allowed", line, col, code="ALIAS")
        seen.add(id(node))
        marks[path] = _position(node.start_mark)

        if isinstance(node, yaml.MappingNode):
            keys = set()
            for key_node, value_node in node.value:
                if key_node.tag == MERGE_TAG:
                    line, col = _position(key_node.start_mark)
                    raise ScenarioParseError("merge keys are not allowed", line, col, code="ALIAS")
                key = _scalar_key(key_node)
                if key in keys:
                    line, col = _position(key_node.start_mark)
                    raise ScenarioParseError(f"duplicate key '{key}'", line, col, code="DUPLICATE_KEY")
                keys.add(key)
                marks[path + (key, "__key__")] = _position(key_node.start_mark)
                stack.append((path + (key,), value_node))
        elif isinstance(node, yaml.SequenceNode):
            for index, item in enumerate(node.value):
                stack.append((path + (index,), item))
    return marks


def _locate(marks: Marks, path: Tuple[Any, ...]) -> Tuple[int, int]:
    """Position of the deepest known prefix of path"""
    for end in range(len(path), -1, -1):
        prefix = path[:end]
        if prefix in marks:
            return marks[prefix]
    return 1, 1


def _compose(text: str) -> Tuple[Any, Marks]:
    loader = None
    try:
        loader = yaml.SafeLoader(text)
        node = loader.get_single_node()
        if node is None:
            raise ScenarioParseError("empty document", 1, 1)
        marks = _walk(node)
        data = loader.construct_document(node)
    except yaml.MarkedYAMLError as e:
        line, col = _position(e.problem_mark or e.context_mark)
        raise ScenarioParseError(str(e.problem or e.context or "invalid YAML"), line, col) from None
    except yaml.YAMLError as e:
        raise ScenarioParseError(f"invalid YAML: {e}", 1, 1) from None
    except RecursionError:
        raise ScenarioParseError("document nested too deeply", 1, 1, code="DEPTH") from None
    except (ValueError, TypeError, OverflowError) as e:
        # explicit tags and timestamp-shaped scalars can fail while constructing
        raise ScenarioParseError(f"invalid scalar value: {e}", 1, 1) from None
    finally:
        if loader is not None:
            loader.dispose()
    return data, marks


def _decode(text: Union[bytes, str]) -> str:
    if isinstance(text, str):
        return text
    try:
        return text.decode("utf-8")
    except UnicodeDecodeError as e:
        before = text[: e.start]
        line = before.count(b"\n") + 1
        column = e.start - (before.rfind(b"\n") + 1) + 1
        raise ScenarioParseError("input is not valid UTF-8", line, column, code="ENCODING") from None


def _schema_error(err: ValidationError, marks: Marks) -> ScenarioParseError:
    first = err.errors()[0]
    loc = ("scenario",) + tuple(first["loc"])
    line, col = _locate(marks, loc)
    code = "UNKNOWN_KEY" if first["type"] == "extra_forbidden" else "SCHEMA"
    where = ".".join(str(part) for part in first["loc"]) or "scenario"
    return ScenarioParseError(f"{where}: {first['msg']}", line, col, code=code)


def parse_document(text: Union[bytes, str]) -> Tuple[Dict[str, Any], Marks]:
    """Decode, compose and shape-check a document; returns the scenario body"""
    decoded = _decode(text)
    if not decoded.strip():
        raise ScenarioParseError("empty document", 1, 1)
    data, marks = _compose(decoded)

    if not isinstance(data, dict):
        line, col = _locate(marks, ())
        raise ScenarioParseError("document must be a mapping", line, col)
    for key in data:
        if key not in TOP_LEVEL_KEYS:
            line, col = _locate(marks, (key, "__key__"))
            raise ScenarioParseError(f"unknown top-level key '{key}'", line, col, code="UNKNOWN_KEY")
    for key in TOP_LEVEL_KEYS:
        if key not in data:
            raise ScenarioParseError(f"missing top-level key '{key}'", 1, 1, code="MISSING_KEY")

    version = data["schema_version"]
    if isinstance(version, bool) or version != SCHEMA_VERSION:
        line, col = _locate(marks, ("schema_version",))
        raise SchemaVersionError(
            f"unsupported schema_version {version!r} (this build reads {SCHEMA_VERSION})", line, col
        )

    body = data["scenario"]
    if not isinstance(body, dict):
        line, col = _locate(marks, ("scenario",))
        raise ScenarioParseError("scenario must be a mapping", line, col, code="SCHEMA")

    road_map = body.get("map")
    if isinstance(road_map, dict) and "template" in road_map:
        try:
            body = dict(body)
            body["map"] = expand_template(road_map).model_dump(mode="json")
        except TemplateError as e:
            line, col = _locate(marks, ("scenario", "map"))
            raise ScenarioParseError(str(e), line, col, code="TEMPLATE") from None
    return body, marks


def parse_scenario(text: Union[bytes, str], source: Optional[str] = None) -> ScenarioSpec:
    """
    Parse a .3cs document into a validated ScenarioSpec.

    Raises:
        ScenarioParseError: syntax, structure or schema problem (with position)
        SchemaVersionError: schema_version other than the supported one
        ScenarioValidationError: the scenario breaks one or more invariants
    """
    body, marks = parse_document(text)
    try:
        spec = ScenarioSpec.model_validate(body)
    except ValidationError as e:
        raise _schema_error(e, marks) from None

    violations = validate_scenario(spec)
    if violations:
        raise ScenarioValidationError(violations, source=source)
    return spec


def parse_scenario_file(path: Union[str, Path]) -> ScenarioSpec:
    path = Path(path)
    logger.debug(f"[+] Parsing scenario file {path}")
    return parse_scenario(path.read_bytes(), source=str(path))

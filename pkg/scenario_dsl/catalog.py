# scenario_dsl/catalog.py
"""
Scenario catalog: loads catalog/<category>/<id>.3cs files and answers queries.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

from scenario_dsl.parser import parse_scenario_file
from scenario_model.errors import CatalogError, CornerSimError
from scenario_model.types import CornerCaseCategory, ScenarioSpec

logger = logging.getLogger(__name__)

CATALOG_SIZE = 32
SCENARIO_SUFFIX = ".3cs"

CATEGORY_DIRS: Dict[CornerCaseCategory, str] = {
    CornerCaseCategory.STATE_ANOMALY: "state",
    CornerCaseCategory.BEHAVIOR_ANOMALY: "behavior",
    CornerCaseCategory.EVIDENCE_BASED_ANOMALY: "evidence",
}

# Scenarios the catalog must always ship, by category
NAMED_SCENARIO_IDS: Dict[CornerCaseCategory, Tuple[str, ...]] = {
    CornerCaseCategory.STATE_ANOMALY: (
        "carla-cola-video-ad",
        "party-billboard-traffic-light",
        "sneeze-stop-billboard",
        "bar-members-parking-sign",
        "soft-drink-turn-ad",
        "yield-to-fun-billboard",
        "go-for-sale-green-light-ad",
        "stop-for-dinner-billboard",
        "stop-sign-ad",
        "stop-tshirt-pedestrian",
    ),
    CornerCaseCategory.BEHAVIOR_ANOMALY: (
        "lane-blocking-crash",
        "emergency-roundabout-exit",
        "police-car-chase",
        "hesitant-crosswalk-pedestrian",
        "erratic-biker",
        "shopping-cart-downhill",
        "wrong-way-one-way",
        "ball-over-obstacle-highway",
    ),
    CornerCaseCategory.EVIDENCE_BASED_ANOMALY: (
        "ball-evidence-child",
        "luggage-fall",
        "parked-car-door-open",
        "worker-behind-van",
        "courier-barrel-fall",
        "ems-hospital-exit",
    ),
}


def all_named_ids() -> List[str]:
    return sorted(i for ids in NAMED_SCENARIO_IDS.values() for i in ids)


def parse_category(value: Union[str, CornerCaseCategory]) -> CornerCaseCategory:
    """Accept a category value ('StateAnomaly') or its directory alias ('state')"""
    if isinstance(value, CornerCaseCategory):
        return value
    lowered = value.strip().lower()
    for category, alias in CATEGORY_DIRS.items():
        if lowered in (alias, category.value.lower()):
            return category
    choices = ", ".join(list(CATEGORY_DIRS.values()) + [c.value for c in CATEGORY_DIRS])
    raise CatalogError(f"unknown category '{value}' (choose from: {choices})")


@dataclass(frozen=True)
class ScenarioSummary:
    id: str
    name: str
    category: CornerCaseCategory
    description: str
    variant: bool

    @classmethod
    def of(cls, spec: ScenarioSpec) -> "ScenarioSummary":
        first_line = spec.description.strip().splitlines()[0] if spec.description.strip() else ""
        return cls(spec.id, spec.name, spec.category, first_line, spec.variant)


class Catalog:
    """Immutable, id-ordered collection of scenarios"""

    def __init__(self, scenarios: List[ScenarioSpec], sources: Optional[Dict[str, Path]] = None):
        self._scenarios: Tuple[ScenarioSpec, ...] = tuple(sorted(scenarios, key=lambda s: s.id))
        self._by_id: Dict[str, ScenarioSpec] = {s.id: s for s in self._scenarios}
        self._sources: Dict[str, Path] = dict(sources or {})

    def __len__(self) -> int:
        return len(self._scenarios)

    def __iter__(self) -> Iterator[ScenarioSpec]:
        return iter(self._scenarios)

    def __contains__(self, scenario_id: str) -> bool:
        return scenario_id in self._by_id

    @property
    def ids(self) -> List[str]:
        return [s.id for s in self._scenarios]

    def get(self, scenario_id: str) -> ScenarioSpec:
        try:
            return self._by_id[scenario_id]
        except KeyError:
            raise CatalogError(f"unknown scenario '{scenario_id}'") from None

    def source(self, scenario_id: str) -> Optional[Path]:
        return self._sources.get(scenario_id)

    def by_category(self, category: Union[str, CornerCaseCategory]) -> List[ScenarioSpec]:
        wanted = parse_category(category)
        return [s for s in self._scenarios if s.category == wanted]

    def category_counts(self) -> Dict[CornerCaseCategory, int]:
        return {c: len(self.by_category(c)) for c in CornerCaseCategory}


def _check_strict(catalog: Catalog) -> None:
    if len(catalog) != CATALOG_SIZE:
        raise CatalogError(f"catalog holds {len(catalog)} scenarios, expected {CATALOG_SIZE}")
    empty = [c.value for c, n in catalog.category_counts().items() if n == 0]
    if empty:
        raise CatalogError(f"empty categories: {', '.join(empty)}")
    missing = [i for i in all_named_ids() if i not in catalog]
    if missing:
        raise CatalogError(f"missing named scenarios: {', '.join(missing)}")


def load_catalog(directory: Union[str, Path], strict: bool = True) -> Catalog:
    """
    Parse every .3cs file below directory.

    Each file must be named after its scenario id; in strict mode it must also
    sit in its category directory and the full catalog invariants are checked.
    """
    root = Path(directory)
    if not root.is_dir():
        raise CatalogError(f"catalog directory not found: {root}")

    scenarios: List[ScenarioSpec] = []
    sources: Dict[str, Path] = {}
    for path in sorted(root.rglob(f"*{SCENARIO_SUFFIX}")):
        try:
            spec = parse_scenario_file(path)
        except CornerSimError as e:
            has_path = getattr(e, "source", None) == str(path)
            raise CatalogError(str(e) if has_path else f"{path}: {e}") from e
        if spec.id in sources:
            raise CatalogError(f"duplicate scenario id '{spec.id}' in {sources[spec.id]} and {path}")
        if path.stem != spec.id:
            raise CatalogError(f"{path}: file name does not match scenario id '{spec.id}'")
        if strict and path.parent.name != CATEGORY_DIRS[spec.category]:
            raise CatalogError(
                f"{path}: {spec.category.value} scenario outside catalog/{CATEGORY_DIRS[spec.category]}/"
            )
        scenarios.append(spec)
        sources[spec.id] = path

    catalog = Catalog(scenarios, sources)
    if strict:
        _check_strict(catalog)
    logger.info(f"[+] Loaded {len(catalog)} scenarios from {root}")
    return catalog


def query_catalog(
    catalog: Catalog,
    category: Optional[Union[str, CornerCaseCategory]] = None,
    id_prefix: Optional[str] = None,
    text: Optional[str] = None,
) -> List[ScenarioSummary]:
    wanted = parse_category(category) if category is not None else None
    needle = text.lower() if text else None
    out = []
    for spec in catalog:
        if wanted is not None and spec.category != wanted:
            continue
        if id_prefix and not spec.id.startswith(id_prefix):
            continue
        if needle and not any(needle in field.lower() for field in (spec.id, spec.name, spec.description)):
            continue
        out.append(ScenarioSummary.of(spec))
    return out

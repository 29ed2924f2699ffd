"""Threshold-based smell rules and their evaluation over a code model.

Six metric rules are supported, three with localized scope (confined to a
single method or class) and three with scattered scope (spanning the class
hierarchy or dependency structure). A rule fires when the measured metric is
STRICTLY greater than its threshold, so entities sitting exactly at a
threshold are clean.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import ConfigError


class Scope(Enum):
    LOCALIZED = "localized"
    SCATTERED = "scattered"


class RuleId(Enum):
    EXCESSIVE_METHOD_LENGTH = "ExcessiveMethodLength"
    EXCESSIVE_CLASS_LENGTH = "ExcessiveClassLength"
    EXCESSIVE_PARAMETER_LIST = "ExcessiveParameterList"
    DEPTH_OF_INHERITANCE = "DepthOfInheritance"
    COUPLING_BETWEEN_OBJECTS = "CouplingBetweenObjects"
    NUMBER_OF_CHILDREN = "NumberOfChildren"


class EntityKind(Enum):
    CLASS = "class"
    METHOD = "method"
    FUNCTION = "function"


# metric field measured by each rule, and the entity kinds it applies to
_RULE_METRIC: dict[RuleId, str] = {
    RuleId.EXCESSIVE_METHOD_LENGTH: "loc",
    RuleId.EXCESSIVE_CLASS_LENGTH: "loc",
    RuleId.EXCESSIVE_PARAMETER_LIST: "parameter_count",
    RuleId.DEPTH_OF_INHERITANCE: "depth_of_inheritance",
    RuleId.COUPLING_BETWEEN_OBJECTS: "coupling",
    RuleId.NUMBER_OF_CHILDREN: "children_count",
}

_RULE_KINDS: dict[RuleId, frozenset[EntityKind]] = {
    RuleId.EXCESSIVE_METHOD_LENGTH: frozenset({EntityKind.METHOD, EntityKind.FUNCTION}),
    RuleId.EXCESSIVE_CLASS_LENGTH: frozenset({EntityKind.CLASS}),
    RuleId.EXCESSIVE_PARAMETER_LIST: frozenset({EntityKind.METHOD, EntityKind.FUNCTION}),
    RuleId.DEPTH_OF_INHERITANCE: frozenset({EntityKind.CLASS}),
    RuleId.COUPLING_BETWEEN_OBJECTS: frozenset({EntityKind.CLASS}),
    RuleId.NUMBER_OF_CHILDREN: frozenset({EntityKind.CLASS}),
}

_RULE_SCOPE: dict[RuleId, Scope] = {
    RuleId.EXCESSIVE_METHOD_LENGTH: Scope.LOCALIZED,
    RuleId.EXCESSIVE_CLASS_LENGTH: Scope.LOCALIZED,
    RuleId.EXCESSIVE_PARAMETER_LIST: Scope.LOCALIZED,
    RuleId.DEPTH_OF_INHERITANCE: Scope.SCATTERED,
    RuleId.COUPLING_BETWEEN_OBJECTS: Scope.SCATTERED,
    RuleId.NUMBER_OF_CHILDREN: Scope.SCATTERED,
}

DEFAULT_THRESHOLDS: dict[RuleId, int] = {
    RuleId.EXCESSIVE_METHOD_LENGTH: 100,
    RuleId.EXCESSIVE_CLASS_LENGTH: 1000,
    RuleId.EXCESSIVE_PARAMETER_LIST: 10,
    RuleId.DEPTH_OF_INHERITANCE: 10,
    RuleId.COUPLING_BETWEEN_OBJECTS: 13,
    RuleId.NUMBER_OF_CHILDREN: 15,
}


def scope_of(rule_id: RuleId) -> Scope:
    """Scope of a rule: first three are localized, last three scattered."""
    return _RULE_SCOPE[rule_id]


@dataclass(frozen=True)
class SmellRule:
    id: RuleId
    threshold: float

    def __post_init__(self):
        if not self.threshold > 0:
            raise ConfigError(f"threshold for {self.id.value} must be positive, got {self.threshold}")

    @property
    def scope(self) -> Scope:
        return scope_of(self.id)

    @property
    def metric(self) -> str:
        return _RULE_METRIC[self.id]

    def applies_to(self, kind: EntityKind) -> bool:
        return kind in _RULE_KINDS[self.id]


def default_ruleset() -> list[SmellRule]:
    return [SmellRule(rid, thr) for rid, thr in DEFAULT_THRESHOLDS.items()]


def load_ruleset(path: str | Path) -> list[SmellRule]:
    """Read threshold overrides from a JSON file: {"RuleId": threshold, ...}.

    Rules not named keep their defaults. Unknown rule names are a
    configuration error.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"rules file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"rules file {path}: expected a JSON object of rule -> threshold")
    by_name = {rid.value: rid for rid in RuleId}
    thresholds = dict(DEFAULT_THRESHOLDS)
    for name, value in raw.items():
        rid = by_name.get(name)
        if rid is None:
            raise ConfigError(f"rules file {path}: unknown rule id {name!r}")
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
            raise ConfigError(f"rules file {path}: threshold for {name} must be a positive number")
        thresholds[rid] = value
    return [SmellRule(rid, thr) for rid, thr in thresholds.items()]


@dataclass(frozen=True)
class CodeEntity:
    """One class, method, or free function with its measured metrics.

    Metrics that were not measured default to 0.
    """

    kind: EntityKind
    name: str
    file: str
    parent: str | None = None
    loc: int = 0
    parameter_count: int = 0
    depth_of_inheritance: int = 0
    coupling: int = 0
    children_count: int = 0

    def __post_init__(self):
        for attr in ("loc", "parameter_count", "depth_of_inheritance", "coupling", "children_count"):
            if getattr(self, attr) < 0:
                raise ValueError(f"{attr} must be non-negative, got {getattr(self, attr)}")

    @property
    def entity_path(self) -> str:
        return f"{self.parent}/{self.name}" if self.parent else self.name


@dataclass(frozen=True)
class SmellOccurrence:
    """One rule violation at one location in one version."""

    rule: RuleId
    file: str
    entity_path: str
    version_id: str
    begin_line: int | None = None
    end_line: int | None = None

    def __post_init__(self):
        if self.begin_line is not None and self.end_line is not None and self.begin_line > self.end_line:
            raise ValueError(f"begin_line {self.begin_line} > end_line {self.end_line}")


_RULE_ORDER = {rid: i for i, rid in enumerate(RuleId)}


def evaluate_rules(
    entities: list[CodeEntity],
    rules: list[SmellRule] | None = None,
    version_id: str = "",
) -> list[SmellOccurrence]:
    """Flag every (entity, rule) pair whose metric strictly exceeds the threshold.

    Output is ordered by (file, entity_path, rule).
    """
    if rules is None:
        rules = default_ruleset()
    seen = set()
    for rule in rules:
        if rule.id in seen:
            raise ConfigError(f"duplicate rule id {rule.id.value} in ruleset")
        seen.add(rule.id)

    occurrences = []
    for entity in entities:
        for rule in rules:
            if not rule.applies_to(entity.kind):
                continue
            value = getattr(entity, rule.metric)
            if math.isinf(rule.threshold):
                continue
            if value > rule.threshold:
                occurrences.append(
                    SmellOccurrence(
                        rule=rule.id,
                        file=entity.file,
                        entity_path=entity.entity_path,
                        version_id=version_id,
                    )
                )
    occurrences.sort(key=lambda o: (o.file, o.entity_path, _RULE_ORDER[o.rule]))
    return occurrences


def load_code_model(path: str | Path) -> list[CodeEntity]:
    """Read a code-model JSON file: a list of entity objects, or {"entities": [...]}.

    Each entity object needs "kind", "name", "file"; metric fields and
    "parent" are optional.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"code model {path}: {exc}") from exc
    if isinstance(raw, dict):
        raw = raw.get("entities")
    if not isinstance(raw, list):
        raise ConfigError(f"code model {path}: expected a list of entities or an 'entities' key")
    entities = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ConfigError(f"code model {path}: entity #{i} is not an object")
        try:
            kind = EntityKind(item["kind"])
            entities.append(
                CodeEntity(
                    kind=kind,
                    name=item["name"],
                    file=item["file"],
                    parent=item.get("parent"),
                    loc=int(item.get("loc", 0)),
                    parameter_count=int(item.get("parameter_count", 0)),
                    depth_of_inheritance=int(item.get("depth_of_inheritance", 0)),
                    coupling=int(item.get("coupling", 0)),
                    children_count=int(item.get("children_count", 0)),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"code model {path}: entity #{i}: {exc}") from exc
    return entities

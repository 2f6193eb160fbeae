"""Canonical rule-set domain model and variable registry.

A rule set is an ordered list of rules evaluated first-match-wins; each rule
is a conjunction of (variable, operator, literal) conditions implying one
outcome level, with an optional trailing default rule. Variables live in a
registry that canonicalizes surface names ("Body Temperature", "temp") onto
one canonical identifier per variable.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Any, Iterable

from .canon import content_id, normalize_number
from .errors import UnknownVariable, ValidationFailed

Value = int | float | bool | str

NUMERIC = "numeric"
BOOLEAN = "boolean"
CATEGORICAL = "categorical"

_NAME_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


def canonicalize_name(raw: str) -> str:
    """Map a surface variable name onto canonical form.

    camelCase word boundaries become underscores, then everything is
    lowercased and runs of spaces/hyphens collapse to single underscores:
    "Body Temperature" -> body_temperature, "allowedAmount" -> allowed_amount.
    """
    s = _CAMEL_RE.sub("_", raw.strip())
    s = re.sub(r"[\s\-]+", "_", s.lower())
    s = re.sub(r"_+", "_", s)
    return s.strip("_")


class Operator(enum.Enum):
    GE = ">="
    GT = ">"
    LE = "<="
    LT = "<"
    EQ = "=="
    NE = "!="

    @classmethod
    def from_symbol(cls, symbol: str) -> "Operator":
        for op in cls:
            if op.value == symbol:
                return op
        raise ValueError(f"unknown operator symbol {symbol!r}")

    @property
    def symbol(self) -> str:
        return self.value

    @property
    def is_ordering(self) -> bool:
        return self in (Operator.GE, Operator.GT, Operator.LE, Operator.LT)

    def mirrored(self) -> "Operator":
        """Operator seen from the other side: 38 <= temp  ==  temp >= 38."""
        return _MIRROR[self]

    def negated(self) -> "Operator":
        """Complementary operator: not (x >= 1)  ==  x < 1."""
        return _NEGATE[self]


_MIRROR = {
    Operator.GE: Operator.LE,
    Operator.GT: Operator.LT,
    Operator.LE: Operator.GE,
    Operator.LT: Operator.GT,
    Operator.EQ: Operator.EQ,
    Operator.NE: Operator.NE,
}

_NEGATE = {
    Operator.GE: Operator.LT,
    Operator.GT: Operator.LE,
    Operator.LE: Operator.GT,
    Operator.LT: Operator.GE,
    Operator.EQ: Operator.NE,
    Operator.NE: Operator.EQ,
}


def is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass(frozen=True)
class VariableSpec:
    """One domain variable: canonical name, kind, and lookup aliases.

    `neutral` is the nominal value boundary-record generation pins the
    variable to when it is not the one under test.
    """

    canonical_name: str
    kind: str
    aliases: tuple[str, ...] = ()
    unit: str | None = None
    levels: tuple[str, ...] | None = None
    neutral: Value | None = None

    def __post_init__(self):
        if not _NAME_RE.match(self.canonical_name):
            raise ValueError(f"canonical name {self.canonical_name!r} must match [a-z][a-z0-9_]*")
        if self.kind not in (NUMERIC, BOOLEAN, CATEGORICAL):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if self.levels is None or len(set(self.levels)) < 2:
                raise ValueError(f"categorical variable {self.canonical_name} needs >=2 distinct levels")
        elif self.levels is not None:
            raise ValueError(f"{self.kind} variable {self.canonical_name} cannot declare levels")
        if self.neutral is None:
            defaults = {NUMERIC: 0, BOOLEAN: False}
            object.__setattr__(
                self, "neutral", defaults[self.kind] if self.kind in defaults else self.levels[0]
            )

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"name": self.canonical_name, "kind": self.kind}
        if self.aliases:
            doc["aliases"] = list(self.aliases)
        if self.unit is not None:
            doc["unit"] = self.unit
        if self.levels is not None:
            doc["levels"] = list(self.levels)
        doc["neutral"] = self.neutral
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "VariableSpec":
        return cls(
            canonical_name=doc["name"],
            kind=doc["kind"],
            aliases=tuple(doc.get("aliases", ())),
            unit=doc.get("unit"),
            levels=tuple(doc["levels"]) if "levels" in doc else None,
            neutral=doc.get("neutral"),
        )


class VariableRegistry:
    """Name -> VariableSpec lookup with alias canonicalization.

    Aliases are unique across the registry: no alias may point at two
    variables. The registry only ever grows (auto-registration during
    parsing); analysis code treats it as read-only.
    """

    def __init__(self, variables: Iterable[VariableSpec] = (), expansions: dict[str, list[str]] | None = None):
        self._specs: dict[str, VariableSpec] = {}
        self._aliases: dict[str, str] = {}
        self.expansions: dict[str, tuple[str, ...]] = {}
        for spec in variables:
            self.add(spec)
        for composite, members in (expansions or {}).items():
            self.add_expansion(composite, members)

    def add(self, spec: VariableSpec) -> None:
        if spec.canonical_name in self._specs:
            raise ValueError(f"variable {spec.canonical_name} already registered")
        if spec.canonical_name in self._aliases:
            raise ValueError(f"name {spec.canonical_name} already taken as an alias")
        for raw_alias in spec.aliases:
            alias = canonicalize_name(raw_alias)
            owner = self._aliases.get(alias) or (alias if alias in self._specs else None)
            if owner is not None and owner != spec.canonical_name:
                raise ValueError(f"alias {alias!r} already maps to {owner}")
        self._specs[spec.canonical_name] = spec
        for raw_alias in spec.aliases:
            alias = canonicalize_name(raw_alias)
            if alias != spec.canonical_name:
                self._aliases[alias] = spec.canonical_name

    def add_expansion(self, composite: str, members: Iterable[str]) -> None:
        composite = canonicalize_name(composite)
        members = tuple(canonicalize_name(m) for m in members)
        if composite not in self._specs:
            raise ValueError(f"expansion source {composite} is not a registered variable")
        for member in members:
            if member not in self._specs:
                raise ValueError(f"expansion target {member} is not a registered variable")
        self.expansions[composite] = members

    def resolve(self, raw_name: str) -> VariableSpec:
        """Find the spec whose canonical name or alias matches raw_name.

        Raises UnknownVariable when nothing matches; callers parsing
        generated code usually auto-register instead of failing.
        """
        name = canonicalize_name(raw_name)
        if name in self._specs:
            return self._specs[name]
        if name in self._aliases:
            return self._specs[self._aliases[name]]
        raise UnknownVariable(raw_name)

    def knows(self, raw_name: str) -> bool:
        try:
            self.resolve(raw_name)
            return True
        except UnknownVariable:
            return False

    def register_auto(self, raw_name: str, value: Value, extra_levels: Iterable[str] = ()) -> VariableSpec:
        """Register an out-of-registry variable seen in generated code.

        Kind is inferred from the literal it was compared against. A
        categorical inferred from a single level gets an "other" placeholder
        so the >=2-levels invariant holds.
        """
        name = canonicalize_name(raw_name)
        if isinstance(value, bool):
            spec = VariableSpec(name, BOOLEAN)
        elif is_number(value):
            spec = VariableSpec(name, NUMERIC)
        else:
            levels = [str(value)]
            for level in extra_levels:
                if level not in levels:
                    levels.append(level)
            if len(levels) < 2:
                levels.append("other")
            spec = VariableSpec(name, CATEGORICAL, levels=tuple(levels))
        self.add(spec)
        return spec

    def expand(self, names: Iterable[str]) -> set[str]:
        """Replace composite variables by their members (comorbidity -> the
        five comorbid conditions); non-composites pass through."""
        out: set[str] = set()
        for name in names:
            out.update(self.expansions.get(name, (name,)))
        return out

    def copy(self) -> "VariableRegistry":
        reg = VariableRegistry()
        reg._specs = dict(self._specs)
        reg._aliases = dict(self._aliases)
        reg.expansions = dict(self.expansions)
        return reg

    def __iter__(self):
        return iter(self._specs.values())

    def __len__(self) -> int:
        return len(self._specs)

    def to_json(self) -> dict:
        return {
            "variables": [spec.to_json() for spec in self._specs.values()],
            "expansions": {k: list(v) for k, v in self.expansions.items()},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "VariableRegistry":
        return cls(
            variables=[VariableSpec.from_json(v) for v in doc.get("variables", [])],
            expansions=doc.get("expansions", {}),
        )


@dataclass(frozen=True)
class Condition:
    """One comparison: variable <op> literal. The variable is referenced by
    canonical name; resolution happens against the workspace registry."""

    variable: str
    operator: Operator
    value: Value

    def __post_init__(self):
        object.__setattr__(self, "value", normalize_number(self.value))
        if self.operator.is_ordering and not is_number(self.value):
            raise ValueError(
                f"ordering comparison {self.variable} {self.operator.symbol} needs a numeric literal"
            )

    def to_json(self) -> dict:
        return {"variable": self.variable, "operator": self.operator.symbol, "value": self.value}

    @classmethod
    def from_json(cls, doc: dict) -> "Condition":
        return cls(doc["variable"], Operator.from_symbol(doc["operator"]), doc["value"])


@dataclass(frozen=True)
class Rule:
    index: int
    conditions: tuple[Condition, ...]
    outcome: str

    @property
    def is_default(self) -> bool:
        return not self.conditions

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "conditions": [c.to_json() for c in self.conditions],
            "outcome": self.outcome,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Rule":
        return cls(doc["index"], tuple(Condition.from_json(c) for c in doc["conditions"]), doc["outcome"])


@dataclass(frozen=True)
class OutcomeSpec:
    name: str
    levels: tuple[str, ...]
    default_level: str

    def __post_init__(self):
        if len(set(self.levels)) != len(self.levels) or len(self.levels) < 2:
            raise ValueError("outcome levels must be >=2 and distinct")
        if self.default_level not in self.levels:
            raise ValueError(f"default level {self.default_level!r} not among levels")

    def to_json(self) -> dict:
        return {"name": self.name, "levels": list(self.levels), "default": self.default_level}

    @classmethod
    def from_json(cls, doc: dict) -> "OutcomeSpec":
        return cls(doc["name"], tuple(doc["levels"]), doc["default"])


EXPERT = "expert"
GENERATED = "generated"
EDITED = "edited"


@dataclass(frozen=True)
class Provenance:
    kind: str
    run: dict | None = None          # generated: reference to the producing run
    parent: str | None = None        # edited: content id of the pre-edit rule set
    editor: str | None = None
    timestamp: str | None = None

    @classmethod
    def expert(cls) -> "Provenance":
        return cls(EXPERT)

    @classmethod
    def generated(cls, run: dict | None = None) -> "Provenance":
        return cls(GENERATED, run=run)

    @classmethod
    def edited(cls, parent: str, editor: str, timestamp: str) -> "Provenance":
        return cls(EDITED, parent=parent, editor=editor, timestamp=timestamp)

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"kind": self.kind}
        if self.kind == GENERATED and self.run is not None:
            doc["run"] = self.run
        if self.kind == EDITED:
            doc.update({"parent": self.parent, "editor": self.editor, "timestamp": self.timestamp})
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Provenance":
        return cls(
            kind=doc["kind"],
            run=doc.get("run"),
            parent=doc.get("parent"),
            editor=doc.get("editor"),
            timestamp=doc.get("timestamp"),
        )


@dataclass(frozen=True)
class RuleSet:
    name: str
    domain: str
    objective: str
    outcome: OutcomeSpec
    rules: tuple[Rule, ...]
    provenance: Provenance = field(default_factory=Provenance.expert)

    def content_id(self) -> str:
        """Content hash over the canonical wire form (id field excluded)."""
        return content_id(self.to_wire(include_id=False))

    def referenced_variables(self) -> list[str]:
        """Variables used by any condition, in first-appearance order."""
        seen: list[str] = []
        for rule in self.rules:
            for cond in rule.conditions:
                if cond.variable not in seen:
                    seen.append(cond.variable)
        return seen

    def condition_count(self) -> int:
        return sum(len(r.conditions) for r in self.rules)

    def to_wire(self, include_id: bool = True) -> dict:
        doc: dict[str, Any] = {
            "name": self.name,
            "domain": self.domain,
            "objective": self.objective,
            "outcome": self.outcome.to_json(),
            "rules": [r.to_json() for r in self.rules],
            "provenance": self.provenance.to_json(),
        }
        if include_id:
            doc = {"id": self.content_id(), **doc}
        return doc

    @classmethod
    def from_wire(cls, doc: dict) -> "RuleSet":
        return cls(
            name=doc["name"],
            domain=doc.get("domain", ""),
            objective=doc.get("objective", ""),
            outcome=OutcomeSpec.from_json(doc["outcome"]),
            rules=tuple(Rule.from_json(r) for r in doc["rules"]),
            provenance=Provenance.from_json(doc.get("provenance", {"kind": EXPERT})),
        )


@dataclass(frozen=True)
class Diagnostic:
    """One machine-readable validation finding; never an exception by itself."""

    code: str
    message: str
    rule_index: int | None = None
    condition_index: int | None = None
    severity: str = "error"

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"code": self.code, "message": self.message, "severity": self.severity}
        if self.rule_index is not None:
            doc["rule"] = self.rule_index
        if self.condition_index is not None:
            doc["condition"] = self.condition_index
        return doc


def resolve_variable(raw_name: str, registry: VariableRegistry) -> VariableSpec:
    """Module-level spelling of VariableRegistry.resolve."""
    return registry.resolve(raw_name)


def _value_kind_ok(spec: VariableSpec, value: Value) -> bool:
    if spec.kind == NUMERIC:
        return is_number(value)
    if spec.kind == BOOLEAN:
        return isinstance(value, bool)
    return isinstance(value, str)


def validate_ruleset(rs: RuleSet, registry: VariableRegistry) -> list[Diagnostic]:
    """Check every RuleSet invariant; empty list means the set is well formed.

    Returns diagnostics rather than raising so callers can surface all
    problems in one pass (the review UI renders them inline).
    """
    out: list[Diagnostic] = []
    for i, rule in enumerate(rs.rules):
        if rule.index != i:
            out.append(Diagnostic("NonContiguousIndices", f"rule at position {i} carries index {rule.index}", i))
        if rule.outcome not in rs.outcome.levels:
            out.append(Diagnostic("UnknownOutcomeLevel", f"outcome {rule.outcome!r} not in {list(rs.outcome.levels)}", i))
        if not rule.conditions and i != len(rs.rules) - 1:
            out.append(Diagnostic("MisplacedDefaultRule", "only the last rule may have no conditions", i))
        seen: set[tuple] = set()
        for j, cond in enumerate(rule.conditions):
            key = (cond.variable, cond.operator, cond.value if not is_number(cond.value) else float(cond.value))
            if key in seen:
                out.append(Diagnostic("DuplicateCondition", f"condition {j} repeats an earlier condition", i, j))
            seen.add(key)
            try:
                spec = registry.resolve(cond.variable)
            except UnknownVariable:
                out.append(Diagnostic("UnknownVariable", f"variable {cond.variable!r} not in registry", i, j))
                continue
            if cond.operator.is_ordering and spec.kind != NUMERIC:
                out.append(Diagnostic(
                    "OperatorKindMismatch",
                    f"{cond.operator.symbol} needs a numeric variable; {spec.canonical_name} is {spec.kind}",
                    i, j,
                ))
            elif not _value_kind_ok(spec, cond.value):
                out.append(Diagnostic(
                    "ValueKindMismatch",
                    f"literal {cond.value!r} does not match {spec.kind} variable {spec.canonical_name}",
                    i, j,
                ))
            elif spec.kind == CATEGORICAL and isinstance(cond.value, str) and cond.value not in (spec.levels or ()):
                out.append(Diagnostic(
                    "UnknownCategoricalLevel",
                    f"{cond.value!r} is not a level of {spec.canonical_name}",
                    i, j,
                ))
    return out


def canonicalize_ruleset(
    rs: RuleSet, registry: VariableRegistry, auto_register: bool = True
) -> tuple[RuleSet, list[Diagnostic]]:
    """Rewrite condition variable names onto canonical registry names.

    Aliases collapse onto their canonical variable; unknown names are
    auto-registered (kind inferred from the compared literal) and flagged
    with a warning diagnostic, so analysis can still report variables the
    expert registry lacks.
    """
    diagnostics: list[Diagnostic] = []
    rules: list[Rule] = []
    for rule in rs.rules:
        conds: list[Condition] = []
        for j, cond in enumerate(rule.conditions):
            try:
                spec = registry.resolve(cond.variable)
            except UnknownVariable:
                if not auto_register:
                    diagnostics.append(Diagnostic("UnknownVariable", f"variable {cond.variable!r} not in registry", rule.index, j))
                    conds.append(cond)
                    continue
                spec = registry.register_auto(cond.variable, cond.value)
                diagnostics.append(Diagnostic(
                    "AutoRegisteredVariable",
                    f"variable {spec.canonical_name!r} was not in the registry; registered as {spec.kind}",
                    rule.index, j, severity="warning",
                ))
            if spec.kind == CATEGORICAL and isinstance(cond.value, str) and cond.value not in (spec.levels or ()):
                # Tolerate new levels on auto-registered categoricals only.
                pass
            conds.append(Condition(spec.canonical_name, cond.operator, cond.value))
        rules.append(Rule(rule.index, tuple(conds), rule.outcome))
    canonical = RuleSet(rs.name, rs.domain, rs.objective, rs.outcome, tuple(rules), rs.provenance)
    return canonical, diagnostics


def require_valid(rs: RuleSet, registry: VariableRegistry) -> RuleSet:
    diags = validate_ruleset(rs, registry)
    if diags:
        raise ValidationFailed(diags)
    return rs


def default_registry() -> VariableRegistry:
    """The bundled remote-monitoring registry: the fifteen triage variables
    plus the five comorbid conditions the composite `comorbidity` covers."""
    n, b, c = NUMERIC, BOOLEAN, CATEGORICAL
    variables = [
        VariableSpec("body_temperature", n, ("temp", "temperature", "body_temp", "fever_temperature"), unit="celsius", neutral=36.8),
        VariableSpec("shortness_of_breath", b, ("sob", "dyspnea", "dyspnoea", "breathlessness", "difficulty_breathing")),
        VariableSpec("cough", b, ("coughing", "persistent_cough", "dry_cough")),
        VariableSpec("loss_of_taste_or_smell", b, ("anosmia", "loss_of_taste", "loss_of_smell", "loss_of_taste_and_smell")),
        VariableSpec("sore_throat", b, ("throat_pain", "throat_soreness")),
        VariableSpec("respiratory_rate", n, ("resp_rate", "breathing_rate", "rr", "respiration_rate"), unit="breaths/min", neutral=16),
        VariableSpec("fatigue", b, ("tiredness", "exhaustion", "lethargy")),
        VariableSpec("oxygen_saturation", n, ("spo2", "sp_o2", "oxygen_level", "o2_saturation", "oxygen_sat", "o2_sat"), unit="percent", neutral=97),
        VariableSpec("heart_rate", n, ("pulse", "pulse_rate", "hr"), unit="beats/min", neutral=75),
        VariableSpec("age", n, ("patient_age", "age_years"), unit="years", neutral=40),
        VariableSpec("comorbidity", b, ("comorbidities", "has_comorbidity", "has_comorbidities")),
        VariableSpec("gender", c, ("sex",), levels=("female", "male", "other")),
        VariableSpec("myalgia", b, ("muscle_pain", "muscle_aches", "body_aches")),
        VariableSpec("diarrhoea", b, ("diarrhea",)),
        VariableSpec("runny_nose", b, ("rhinorrhea", "rhinorrhoea")),
        VariableSpec("hypertension", b, ("high_blood_pressure",)),
        VariableSpec("lung_disease", b, ("chronic_lung_disease", "copd")),
        VariableSpec("cardiac_disease", b, ("heart_disease", "cardiovascular_disease")),
        VariableSpec("immunosuppressed", b, ("immunocompromised", "immunosuppression")),
        VariableSpec("diabetes", b, ("diabetic",)),
    ]
    return VariableRegistry(
        variables,
        expansions={
            "comorbidity": ["hypertension", "lung_disease", "cardiac_disease", "immunosuppressed", "diabetes"],
        },
    )


def default_outcome_spec() -> OutcomeSpec:
    return OutcomeSpec("status", ("GREEN", "AMBER", "RED"), "GREEN")

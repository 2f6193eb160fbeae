"""First-match-wins rule execution and boundary-value record derivation."""

from __future__ import annotations

from dataclasses import dataclass, field

from .canon import canonical_json, normalize_number
from .errors import MissingVariable, TypeMismatch
from .model import (
    BOOLEAN,
    CATEGORICAL,
    NUMERIC,
    Condition,
    Rule,
    RuleSet,
    VariableRegistry,
    is_number,
)

Record = dict[str, object]


def condition_holds(cond: Condition, value: object) -> bool:
    """Evaluate one condition against a record value.

    Ordering operators need numbers on both sides; equality needs matching
    literal types (bool is never conflated with 0/1).
    """
    op = cond.operator
    if op.is_ordering:
        if not is_number(value):
            raise TypeMismatch(cond.variable, f"{op.symbol} needs a number, record has {value!r}")
        if op.symbol == ">=":
            return value >= cond.value
        if op.symbol == ">":
            return value > cond.value
        if op.symbol == "<=":
            return value <= cond.value
        return value < cond.value
    same_kind = (
        (is_number(value) and is_number(cond.value))
        or (isinstance(value, bool) and isinstance(cond.value, bool))
        or (isinstance(value, str) and isinstance(cond.value, str))
    )
    if not same_kind:
        raise TypeMismatch(cond.variable, f"cannot compare record value {value!r} with {cond.value!r}")
    return (value == cond.value) if op.symbol == "==" else (value != cond.value)


@dataclass(frozen=True)
class RuleTrace:
    index: int
    condition_results: tuple[bool, ...]
    matched: bool

    def to_json(self) -> dict:
        return {"index": self.index, "conditions": list(self.condition_results), "matched": self.matched}


@dataclass(frozen=True)
class EvalTrace:
    outcome: str
    matched_rule_index: int | None  # None: no rule matched, the default level applies
    scanned: tuple[RuleTrace, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "matched_rule": self.matched_rule_index,
            "scanned": [t.to_json() for t in self.scanned],
        }


def evaluate(rs: RuleSet, record: Record) -> EvalTrace:
    """Scan rules in index order; the first fully satisfied conjunction wins,
    otherwise the outcome spec's default level applies.

    The record must cover every variable the rule set references, even ones
    only later rules use — partial records fail loudly rather than silently
    depending on rule order.
    """
    for rule in rs.rules:
        for cond in rule.conditions:
            if cond.variable not in record:
                raise MissingVariable(cond.variable)
    scanned: list[RuleTrace] = []
    for rule in rs.rules:
        results = tuple(condition_holds(c, record[c.variable]) for c in rule.conditions)
        matched = all(results)
        scanned.append(RuleTrace(rule.index, results, matched))
        if matched:
            return EvalTrace(rule.outcome, rule.index, tuple(scanned))
    return EvalTrace(rs.outcome.default_level, None, tuple(scanned))


def neutral_record(rs: RuleSet, registry: VariableRegistry) -> Record:
    """Every referenced variable pinned to its registry-declared neutral value."""
    return {name: registry.resolve(name).neutral for name in rs.referenced_variables()}


def boundary_records(rs: RuleSet, registry: VariableRegistry, epsilon: float = 0.1) -> list[Record]:
    """Derive records probing each condition's decision boundary.

    Numeric conditions with threshold t produce records at t-eps, t, t+eps;
    boolean and categorical conditions produce one record per level. All
    other referenced variables sit at their neutral defaults. Duplicates
    (overlapping thresholds) are removed, first occurrence wins.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    base = neutral_record(rs, registry)
    records: list[Record] = []
    seen: set[str] = set()

    def emit(variable: str, value: object):
        record = dict(base)
        record[variable] = normalize_number(value)
        key = canonical_json(record)
        if key not in seen:
            seen.add(key)
            records.append(record)

    probed_levels: set[str] = set()
    for rule in rs.rules:
        for cond in rule.conditions:
            spec = registry.resolve(cond.variable)
            if spec.kind == NUMERIC and is_number(cond.value):
                for value in (cond.value - epsilon, cond.value, cond.value + epsilon):
                    emit(cond.variable, value)
            elif spec.kind == BOOLEAN and cond.variable not in probed_levels:
                probed_levels.add(cond.variable)
                for value in (False, True):
                    emit(cond.variable, value)
            elif spec.kind == CATEGORICAL and cond.variable not in probed_levels:
                probed_levels.add(cond.variable)
                for level in spec.levels or ():
                    emit(cond.variable, level)
    return records

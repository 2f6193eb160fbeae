"""Rule-engineering workbench: generate candidate logic rule sets with a
language model, parse them into a canonical form, compare them against
expert rules, support human review, and emit a deployable evaluation API."""

from .model import (
    Condition,
    OutcomeSpec,
    Provenance,
    Rule,
    RuleSet,
    VariableRegistry,
    VariableSpec,
    default_outcome_spec,
    default_registry,
    resolve_variable,
    validate_ruleset,
)

__all__ = [
    "Condition",
    "OutcomeSpec",
    "Provenance",
    "Rule",
    "RuleSet",
    "VariableRegistry",
    "VariableSpec",
    "default_outcome_spec",
    "default_registry",
    "resolve_variable",
    "validate_ruleset",
]

__version__ = "0.1.0"

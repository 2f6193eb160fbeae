"""Exception hierarchy shared across the workbench."""

from __future__ import annotations


class RuleflexError(Exception):
    """Base class for all domain errors; the CLI maps these to exit code 1."""


class UnknownVariable(RuleflexError):
    def __init__(self, raw_name: str):
        super().__init__(f"unknown variable: {raw_name!r}")
        self.raw_name = raw_name


class ValidationFailed(RuleflexError):
    """Raised when a rule set (or an edit to one) violates model invariants.

    Carries the full diagnostic list so callers (CLI, review API) can surface
    every problem at once instead of failing one at a time.
    """

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        summary = "; ".join(d.code for d in self.diagnostics) or "invalid"
        super().__init__(f"validation failed: {summary}")


class DslSyntaxError(RuleflexError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class CodeSyntaxError(RuleflexError):
    """Generated code could not be parsed at all."""

    def __init__(self, message: str, span: tuple[int, int] | None = None):
        super().__init__(message)
        self.span = span


class UnsupportedConstruct(RuleflexError):
    """Generated code parsed, but uses a construct outside the conditional
    subset (loops, calls, disjunctions, arithmetic, ...); needs manual review."""

    def __init__(self, message: str, span: tuple[int, int] | None = None):
        super().__init__(message)
        self.span = span


class EmptyInput(RuleflexError):
    pass


class InsufficientRuns(RuleflexError):
    pass


class AlignmentTooLarge(RuleflexError):
    pass


class MissingVariable(RuleflexError):
    def __init__(self, name: str):
        super().__init__(f"record does not cover variable {name!r}")
        self.name = name


class TypeMismatch(RuleflexError):
    def __init__(self, name: str, detail: str = ""):
        super().__init__(f"type mismatch for variable {name!r}" + (f": {detail}" if detail else ""))
        self.name = name


class UnknownStrategy(RuleflexError):
    def __init__(self, kind: str):
        super().__init__(f"unknown prompt strategy: {kind!r}")
        self.kind = kind


class CredentialMissing(RuleflexError):
    pass


class ProviderError(RuleflexError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class FixtureMissing(RuleflexError):
    def __init__(self, key: str):
        super().__init__(f"no replay fixture recorded for prompt key {key}")
        self.key = key


class NotFound(RuleflexError):
    def __init__(self, ref: str):
        super().__init__(f"no workspace entry matches {ref!r}")
        self.ref = ref


class HashMismatch(RuleflexError):
    def __init__(self, entry_id: str):
        super().__init__(f"stored payload for {entry_id} does not recompute to its id (corrupt entry)")
        self.entry_id = entry_id


class UnreviewedRuleSet(RuleflexError):
    def __init__(self, ruleset_id: str):
        super().__init__(
            f"rule set {ruleset_id} has provenance 'generated'; it must be reviewed "
            "(accepted or edited) before API artifacts can be produced"
        )
        self.ruleset_id = ruleset_id

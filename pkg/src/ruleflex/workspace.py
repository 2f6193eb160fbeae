"""Content-addressed workspace persistence.

Layout under the workspace root:

    rulesets/  runs/  comparisons/  reviews/  fixtures/  config.json

Every entry is one JSON file named by the sha256 of its canonical payload
(the embedded `id` field excluded from the hash). Entries are immutable:
edits create new entries with parent links, so the audit trail of any rule
set walks back to an expert or generated origin.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .canon import canonical_json, content_id
from .errors import HashMismatch, NotFound, ValidationFailed
from .model import (
    Diagnostic,
    OutcomeSpec,
    Provenance,
    Rule,
    RuleSet,
    VariableRegistry,
    default_outcome_spec,
    default_registry,
    validate_ruleset,
)

KIND_DIRS = {
    "ruleset": "rulesets",
    "run": "runs",
    "comparison": "comparisons",
    "review": "reviews",
}


@dataclass(frozen=True)
class WorkspaceEntry:
    id: str
    kind: str
    payload: dict
    created_at: float


def _default_config() -> dict:
    return {
        "registry": default_registry().to_json(),
        "outcome": default_outcome_spec().to_json(),
        "scoring": {
            "weights": {
                "match": "1",
                "wrong_threshold": "1/2",
                "wrong_operator": "1/2",
                "extra_condition": "0",
                "missing_condition": "0",
            },
            "threshold_tolerance": "0",
        },
        "epsilon": 0.1,
        "provider": {
            "endpoint": "https://api.openai.com/v1/chat/completions",
            "model": "gpt-3.5-turbo",
            "temperature": 1,
            "max_response_tokens": 3000,
        },
    }


class Workspace:
    """Single-process writer over plain files; writes are atomic
    (temp file + rename) and serialized behind one lock, with review
    mutations additionally serialized per pre-edit rule set id."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._write_lock = threading.Lock()
        self._review_locks: dict[str, threading.Lock] = {}
        self._review_locks_guard = threading.Lock()
        for sub in (*KIND_DIRS.values(), "fixtures"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self.config_path = self.root / "config.json"
        if not self.config_path.exists():
            self._write_file(self.config_path, json.dumps(_default_config(), indent=2, sort_keys=True))
        self.config = json.loads(self.config_path.read_text(encoding="utf-8"))
        self.registry = VariableRegistry.from_json(self.config["registry"])
        self.outcome_spec = OutcomeSpec.from_json(self.config["outcome"])

    # -- low-level file handling ---------------------------------------

    def _write_file(self, path: Path, text: str) -> None:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)

    def save_registry(self) -> None:
        """Persist registry growth (auto-registered variables) to config."""
        self.config["registry"] = self.registry.to_json()
        with self._write_lock:
            self._write_file(self.config_path, json.dumps(self.config, indent=2, sort_keys=True))

    @property
    def fixtures_dir(self) -> Path:
        return self.root / "fixtures"

    # -- content-addressed store ---------------------------------------

    def _validate(self, kind: str, payload: dict) -> None:
        if kind == "ruleset":
            rs = RuleSet.from_wire(payload)
            diags = validate_ruleset(rs, self.registry)
            if diags:
                raise ValidationFailed(diags)
        elif kind == "run":
            for key in ("run_index", "strategy", "prompt", "config"):
                if key not in payload:
                    raise ValidationFailed([Diagnostic("MissingField", f"run payload lacks {key!r}")])
        elif kind == "review":
            for key in ("ruleset_id", "result_id", "actions", "reviewer"):
                if key not in payload:
                    raise ValidationFailed([Diagnostic("MissingField", f"review payload lacks {key!r}")])
        elif kind == "comparison":
            if "totals" not in payload:
                raise ValidationFailed([Diagnostic("MissingField", "comparison payload lacks 'totals'")])
        else:
            raise ValidationFailed([Diagnostic("UnknownKind", f"unknown entry kind {kind!r}")])

    def store(self, kind: str, payload: dict) -> str:
        """Persist a payload, returning its content id. Storing the same
        payload twice is a no-op returning the same id."""
        self._validate(kind, payload)
        body = {k: v for k, v in payload.items() if k != "id"}
        digest = content_id(body)
        path = self.root / KIND_DIRS[kind] / f"{digest}.json"
        with self._write_lock:
            if not path.exists():
                self._write_file(path, canonical_json({"id": digest, **body}))
        return digest

    def _path_for(self, entry_id: str) -> tuple[str, Path]:
        for kind, sub in KIND_DIRS.items():
            path = self.root / sub / f"{entry_id}.json"
            if path.exists():
                return kind, path
        # prefix lookup (>= 8 chars) for CLI convenience
        if len(entry_id) >= 8:
            hits: list[tuple[str, Path]] = []
            for kind, sub in KIND_DIRS.items():
                hits.extend((kind, p) for p in (self.root / sub).glob(f"{entry_id}*.json"))
            if len(hits) == 1:
                return hits[0]
        raise NotFound(entry_id)

    def load(self, entry_id: str) -> WorkspaceEntry:
        kind, path = self._path_for(entry_id)
        doc = json.loads(path.read_text(encoding="utf-8"))
        body = {k: v for k, v in doc.items() if k != "id"}
        digest = content_id(body)
        if digest != path.stem or doc.get("id") != path.stem:
            raise HashMismatch(path.stem)
        return WorkspaceEntry(digest, kind, doc, path.stat().st_mtime)

    def load_ruleset(self, entry_id: str) -> RuleSet:
        entry = self.load(entry_id)
        if entry.kind != "ruleset":
            raise NotFound(f"{entry_id} (expected a ruleset, found {entry.kind})")
        return RuleSet.from_wire(entry.payload)

    def list_ids(self, kind: str) -> list[str]:
        sub = self.root / KIND_DIRS[kind]
        paths = sorted(sub.glob("*.json"), key=lambda p: (p.stat().st_mtime, p.stem))
        return [p.stem for p in paths]

    def entries(self, kind: str) -> list[WorkspaceEntry]:
        return [self.load(i) for i in self.list_ids(kind)]

    # -- review application --------------------------------------------

    def _review_lock(self, ruleset_id: str) -> threading.Lock:
        with self._review_locks_guard:
            return self._review_locks.setdefault(ruleset_id, threading.Lock())

    def apply_review(self, decision: dict) -> str:
        """Apply a review decision and persist both the edited rule set and
        the decision document.

        decision: {ruleset_id, actions: [...], reviewer, timestamp?}
        actions: {action: accept|edit|delete|add, rule?, conditions?,
                  condition_edits?, outcome?, position?}

        Rules not named by any action are kept as-is; a zero-action decision
        therefore re-stores identical content (modulo provenance). Conflicting
        concurrent edits of one parent yield sibling children, never lost
        updates.
        """
        ruleset_id = decision["ruleset_id"]
        with self._review_lock(ruleset_id):
            parent = self.load_ruleset(ruleset_id)
            timestamp = decision.get("timestamp") or time.strftime("%Y-%m-%dT%H:%M:%S+00:00", time.gmtime())
            reviewer = decision.get("reviewer", "reviewer")
            edited = _apply_actions(parent, decision.get("actions", []))
            result = RuleSet(
                name=edited.name,
                domain=edited.domain,
                objective=edited.objective,
                outcome=edited.outcome,
                rules=edited.rules,
                provenance=Provenance.edited(parent=ruleset_id, editor=reviewer, timestamp=timestamp),
            )
            diags = validate_ruleset(result, self.registry)
            if diags:
                raise ValidationFailed(diags)
            new_id = self.store("ruleset", result.to_wire())
            self.store("review", {
                "ruleset_id": ruleset_id,
                "result_id": new_id,
                "actions": decision.get("actions", []),
                "reviewer": reviewer,
                "timestamp": timestamp,
            })
            return new_id

    def children_of(self, ruleset_id: str) -> list[str]:
        """Review results whose parent is the given rule set (fork surface)."""
        out = []
        for review_id in self.list_ids("review"):
            payload = self.load(review_id).payload
            if payload.get("ruleset_id") == ruleset_id:
                out.append(payload["result_id"])
        return out


def _edit_condition(rule: Rule, edit: dict) -> Rule:
    from .model import Condition, Operator

    conds = list(rule.conditions)
    idx = edit["condition"]
    if idx < 0 or idx >= len(conds):
        raise ValidationFailed([Diagnostic("BadConditionIndex", f"rule {rule.index} has no condition {idx}", rule.index)])
    old = conds[idx]
    conds[idx] = Condition(
        variable=edit.get("variable", old.variable),
        operator=Operator.from_symbol(edit["operator"]) if "operator" in edit else old.operator,
        value=edit.get("value", old.value),
    )
    return Rule(rule.index, tuple(conds), rule.outcome)


def _apply_actions(parent: RuleSet, actions: list[dict]) -> RuleSet:
    from .model import Condition, Operator

    rules: list[Rule | None] = list(parent.rules)
    additions: list[tuple[int, Rule]] = []
    for action in actions:
        op = action.get("action")
        if op == "accept":
            continue
        if op in ("edit", "delete"):
            idx = action.get("rule")
            if idx is None or idx < 0 or idx >= len(parent.rules):
                raise ValidationFailed([Diagnostic("BadRuleIndex", f"no rule at index {idx}")])
        if op == "delete":
            rules[action["rule"]] = None
        elif op == "edit":
            idx = action["rule"]
            rule = rules[idx]
            if rule is None:
                raise ValidationFailed([Diagnostic("BadRuleIndex", f"rule {idx} was deleted earlier in this review")])
            if "conditions" in action:
                conds = tuple(
                    Condition(c["variable"], Operator.from_symbol(c["operator"]), c["value"])
                    for c in action["conditions"]
                )
                rule = Rule(rule.index, conds, rule.outcome)
            for edit in action.get("condition_edits", []):
                rule = _edit_condition(rule, edit)
            if "outcome" in action:
                rule = Rule(rule.index, rule.conditions, action["outcome"])
            rules[idx] = rule
        elif op == "add":
            conds = tuple(
                Condition(c["variable"], Operator.from_symbol(c["operator"]), c["value"])
                for c in action.get("conditions", [])
            )
            additions.append((action.get("position"), Rule(0, conds, action["outcome"])))
        elif op != "accept":
            raise ValidationFailed([Diagnostic("UnknownAction", f"unknown review action {op!r}")])

    kept: list[Rule] = [r for r in rules if r is not None]
    for position, rule in additions:
        if position is None:  # default: insert ahead of a trailing default rule
            position = len(kept) - (1 if kept and kept[-1].is_default else 0)
        kept.insert(min(position, len(kept)), rule)
    reindexed = tuple(Rule(i, r.conditions, r.outcome) for i, r in enumerate(kept))
    return RuleSet(parent.name, parent.domain, parent.objective, parent.outcome, reindexed, parent.provenance)

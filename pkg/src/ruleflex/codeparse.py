"""Parse model-emitted conditional code into decision trees and flatten them.

The accepted dialect is the indentation-delimited conditional subset the
generation prompts ask for: literal bindings, if/elif/else chains whose
conditions are conjunctions of comparisons, and a single outcome variable
assigned in the leaves (either `status = 'RED'` or the exemplar's
`status == 'RED'` spelling). Anything else — loops, calls, `or`,
arithmetic, returns — raises UnsupportedConstruct so the response is routed
to manual review instead of being silently mis-read.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field

from .canon import normalize_number
from .errors import CodeSyntaxError, UnknownVariable, UnsupportedConstruct, ValidationFailed
from .model import (
    CATEGORICAL,
    Condition,
    Diagnostic,
    Operator,
    OutcomeSpec,
    Provenance,
    Rule,
    RuleSet,
    VariableRegistry,
    canonicalize_name,
)

_AST_OPS = {
    ast.GtE: Operator.GE,
    ast.Gt: Operator.GT,
    ast.LtE: Operator.LE,
    ast.Lt: Operator.LT,
    ast.Eq: Operator.EQ,
    ast.NotEq: Operator.NE,
}


@dataclass(frozen=True)
class Leaf:
    outcome: str


@dataclass(frozen=True)
class Branch:
    conditions: tuple[Condition, ...]
    then: "Branch | Leaf"
    orelse: "Branch | Leaf | None"


@dataclass(frozen=True)
class DecisionTree:
    root: Branch | Leaf
    outcome_variable: str
    name: str = ""
    initial_outcome: str | None = None  # literal bound to the outcome variable before the conditional

    def leaf_count(self) -> int:
        def walk(node) -> int:
            if isinstance(node, Leaf):
                return 1
            return walk(node.then) + (walk(node.orelse) if node.orelse is not None else 0)

        return walk(self.root)


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # warning | error
    code: str
    message: str
    span: tuple[int, int] | None = None
    unit: str | None = None  # function name or block label the finding belongs to

    def to_json(self) -> dict:
        doc = {"severity": self.severity, "code": self.code, "message": self.message}
        if self.span is not None:
            doc["span"] = list(self.span)
        if self.unit is not None:
            doc["unit"] = self.unit
        return doc


_FENCE_RE = re.compile(r"^\s*```")
_DEF_RE = re.compile(r"^def\s")


def extract_code_blocks(response_text: str) -> list[str]:
    """Pull code out of a free-text model response.

    Fenced blocks win; without fences, each region from a line starting with
    `def ` through the end of its indentation block counts as one block.
    """
    lines = response_text.split("\n")
    blocks: list[str] = []
    fence_open: int | None = None
    for i, line in enumerate(lines):
        if _FENCE_RE.match(line):
            if fence_open is None:
                fence_open = i + 1
            else:
                blocks.append("\n".join(lines[fence_open:i]))
                fence_open = None
    if fence_open is not None:  # unterminated fence runs to the end
        blocks.append("\n".join(lines[fence_open:]))
    if blocks:
        return [b for b in blocks if b.strip()]

    i = 0
    while i < len(lines):
        if _DEF_RE.match(lines[i]):
            j = i + 1
            end = j
            while j < len(lines):
                line = lines[j]
                if not line.strip():
                    j += 1
                    continue
                if line[0] in " \t":
                    j += 1
                    end = j
                else:
                    break
            blocks.append("\n".join(lines[i:end]))
            i = end
        else:
            i += 1
    return [b for b in blocks if b.strip()]


def split_function_units(block: str) -> list[tuple[str, str]]:
    """Split one code block into rule-set units, one per top-level function.

    Module-level literal bindings travel with every function below them (the
    exemplar style binds thresholds above the def). A block without any
    function definition is one unnamed unit.
    """
    lines = block.split("\n")
    units: list[tuple[str, str]] = []
    preamble: list[str] = []
    current_name: str | None = None
    current: list[str] = []

    def close():
        nonlocal current, current_name
        if current_name is not None:
            units.append((current_name, "\n".join(preamble + current)))
        current = []
        current_name = None

    for line in lines:
        m = re.match(r"def\s+([A-Za-z_][A-Za-z0-9_]*)", line)
        if m and not line[0] in " \t":
            close()
            current_name = m.group(1)
            current = [line]
        elif current_name is not None:
            if line.strip() and line[0] not in " \t":
                close()
                preamble.append(line)
            else:
                current.append(line)
        else:
            preamble.append(line)
    close()
    if not units:
        return [("", block)]
    return units


class _CodeReader(ast.NodeVisitor):
    def __init__(self, source: str, registry: VariableRegistry):
        self.source = source
        self.registry = registry
        self.bindings: dict[str, object] = {}
        self.outcome_variable: str | None = None
        self.initial_outcome: str | None = None
        self._line_offsets = [0]
        for line in source.split("\n"):
            self._line_offsets.append(self._line_offsets[-1] + len(line) + 1)
        # string levels seen per variable, so auto-registered categoricals
        # carry every level this unit mentions
        self._levels_seen: dict[str, list[str]] = {}

    def span(self, node: ast.AST) -> tuple[int, int]:
        start = self._line_offsets[node.lineno - 1] + node.col_offset
        end = self._line_offsets[node.end_lineno - 1] + node.end_col_offset
        return (start, end)

    def unsupported(self, node: ast.AST, what: str) -> UnsupportedConstruct:
        return UnsupportedConstruct(f"unsupported construct: {what}", self.span(node))

    # -- literals ------------------------------------------------------

    def literal(self, node: ast.AST) -> object:
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, str, bool)):
            return normalize_number(node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub) and isinstance(node.operand, ast.Constant):
            inner = node.operand.value
            if isinstance(inner, (int, float)) and not isinstance(inner, bool):
                return normalize_number(-inner)
        raise self.unsupported(node, "expected a literal value")

    def resolve_operand(self, node: ast.AST) -> object:
        """A comparison operand: a literal, or a name bound earlier."""
        if isinstance(node, ast.Name):
            if node.id in self.bindings:
                return self.bindings[node.id]
            raise UnsupportedConstruct(
                f"unsupported construct: name {node.id!r} is not bound to a literal", self.span(node)
            )
        return self.literal(node)

    # -- condition extraction ------------------------------------------

    def conjunction(self, node: ast.expr) -> list[Condition]:
        if isinstance(node, ast.BoolOp):
            if isinstance(node.op, ast.Or):
                raise self.unsupported(node, "disjunction ('or')")
            out: list[Condition] = []
            for item in node.values:
                out.extend(self.conjunction(item))
            return out
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.Not):
            inner = self.conjunction(node.operand)
            return [Condition(c.variable, c.operator.negated(), c.value) for c in inner]
        if isinstance(node, ast.Compare):
            return self.comparison(node)
        raise self.unsupported(node, "condition must be a comparison")

    def comparison(self, node: ast.Compare) -> list[Condition]:
        out: list[Condition] = []
        left = node.left
        for op_node, right in zip(node.ops, node.comparators):
            if type(op_node) not in _AST_OPS:
                raise self.unsupported(node, f"comparison operator {type(op_node).__name__}")
            operator = _AST_OPS[type(op_node)]
            if isinstance(left, ast.Name) and left.id not in self.bindings:
                variable, value = left.id, self.resolve_operand(right)
            elif isinstance(right, ast.Name) and right.id not in self.bindings:
                # literal-on-the-left comparisons normalize to variable-left
                variable, value = right.id, self.resolve_operand(left)
                operator = operator.mirrored()
            else:
                raise self.unsupported(node, "comparison does not reference a variable")
            if operator.is_ordering and isinstance(value, (bool, str)):
                raise self.unsupported(node, f"{operator.symbol} against a non-numeric literal")
            name = self._canonical(variable, value)
            out.append(Condition(name, operator, value))
            left = right
        return out

    def _canonical(self, raw: str, value: object) -> str:
        if isinstance(value, str):
            seen = self._levels_seen.setdefault(canonicalize_name(raw), [])
            if value not in seen:
                seen.append(value)
        try:
            return self.registry.resolve(raw).canonical_name
        except UnknownVariable:
            return canonicalize_name(raw)

    # -- statements ----------------------------------------------------

    def read_unit(self) -> DecisionTree:
        try:
            module = ast.parse(self.source)
        except SyntaxError as exc:
            raise CodeSyntaxError(f"not parseable as conditional code: {exc.msg}", None)
        body = list(module.body)
        name = ""
        flat: list[ast.stmt] = []
        for stmt in body:
            if isinstance(stmt, ast.FunctionDef):
                if name:
                    raise self.unsupported(stmt, "more than one function definition in a unit")
                name = stmt.name
                flat.extend(stmt.body)
            else:
                flat.append(stmt)
        root = self.read_block(flat, toplevel=True)
        if self.outcome_variable is None:
            raise UnsupportedConstruct("unsupported construct: no outcome assignment found", None)
        return DecisionTree(
            root=root,
            outcome_variable=self.outcome_variable,
            name=name,
            initial_outcome=self.initial_outcome,
        )

    def read_block(self, stmts: list[ast.stmt], toplevel: bool) -> Branch | Leaf:
        """One block = optional literal bindings, then either a single
        if/elif/else chain or a single leaf assignment."""
        stmts = [s for s in stmts if not isinstance(s, (ast.Pass,))]
        stmts = [s for s in stmts if not (isinstance(s, ast.Expr) and isinstance(s.value, ast.Constant) and isinstance(s.value.value, str))]  # docstrings
        i = 0
        conditional: ast.If | None = None
        leaf: Leaf | None = None
        while i < len(stmts):
            stmt = stmts[i]
            if isinstance(stmt, ast.If):
                if conditional is not None or leaf is not None:
                    raise self.unsupported(stmt, "more than one conditional chain in a block")
                conditional = stmt
            elif self._is_assignment(stmt):
                target, value = self._assignment(stmt)
                if conditional is not None:
                    raise self.unsupported(stmt, "statement after the conditional chain")
                if toplevel and isinstance(value, str) and (self.outcome_variable in (None, target)) and self._looks_like_outcome(stmts[i:], target):
                    # initial outcome binding, e.g. status = 'GREEN' before the chain
                    self.outcome_variable = target
                    self.initial_outcome = value
                    self.bindings[target] = value
                elif toplevel:
                    self.bindings[target] = value
                else:
                    if leaf is not None or conditional is not None:
                        raise self.unsupported(stmt, "leaf assigns more than once")
                    if self.outcome_variable is None:
                        self.outcome_variable = target
                    elif target != self.outcome_variable:
                        raise self.unsupported(stmt, f"leaves assign both {self.outcome_variable!r} and {target!r}")
                    if not isinstance(value, str):
                        raise self.unsupported(stmt, "outcome level must be a string literal")
                    leaf = Leaf(value)
            else:
                raise self.unsupported(stmt, type(stmt).__name__)
            i += 1
        if conditional is not None:
            return self.read_if(conditional)
        if leaf is not None:
            return leaf
        if toplevel and self.outcome_variable is not None and self.initial_outcome is not None:
            # bindings only: degenerate tree that always yields the bound level
            return Leaf(self.initial_outcome)
        raise UnsupportedConstruct("unsupported construct: block carries no conditional and no outcome", None)

    def _looks_like_outcome(self, rest: list[ast.stmt], target: str) -> bool:
        """A pre-chain string binding is the outcome variable if some leaf
        later assigns the same name (or nothing else ever claims leaves)."""
        for stmt in rest:
            if isinstance(stmt, ast.If):
                return target in self._assigned_names(stmt)
        return True

    def _assigned_names(self, node: ast.If) -> set[str]:
        names: set[str] = set()
        for stmt in ast.walk(node):
            if self._is_assignment(stmt):
                try:
                    names.add(self._assignment(stmt)[0])
                except UnsupportedConstruct:
                    continue
        return names

    def _is_assignment(self, stmt: ast.stmt) -> bool:
        if isinstance(stmt, ast.Assign):
            return True
        # the exemplar writes leaf assignments as `name == 'LEVEL'`
        return (
            isinstance(stmt, ast.Expr)
            and isinstance(stmt.value, ast.Compare)
            and len(stmt.value.ops) == 1
            and isinstance(stmt.value.ops[0], ast.Eq)
            and isinstance(stmt.value.left, ast.Name)
        )

    def _assignment(self, stmt: ast.stmt) -> tuple[str, object]:
        if isinstance(stmt, ast.Assign):
            if len(stmt.targets) != 1 or not isinstance(stmt.targets[0], ast.Name):
                raise self.unsupported(stmt, "assignment target must be one name")
            return stmt.targets[0].id, self.literal(stmt.value)
        assert isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Compare)
        return stmt.value.left.id, self.literal(stmt.value.comparators[0])

    def read_if(self, node: ast.If) -> Branch:
        conditions = tuple(self.conjunction(node.test))
        if not conditions:
            raise self.unsupported(node, "branch without conditions")
        then = self.read_block(node.body, toplevel=False)
        orelse: Branch | Leaf | None = None
        if node.orelse:
            orelse = self.read_block(node.orelse, toplevel=False)
        return Branch(conditions, then, orelse)


def parse_conditional_code(code: str, registry: VariableRegistry) -> DecisionTree:
    """Parse one function (or bare conditional body) into a DecisionTree.

    Names bound to literals earlier in the block are substituted into the
    comparisons, so `amount <= allowedAmount` with `allowedAmount = 50000`
    above becomes a condition against 50000.
    """
    reader = _CodeReader(code, registry)
    tree = reader.read_unit()
    # auto-register any variables the registry did not know, so downstream
    # validation and analysis can resolve them
    def register(node):
        if isinstance(node, Leaf):
            return
        for cond in node.conditions:
            if not registry.knows(cond.variable):
                registry.register_auto(
                    cond.variable, cond.value, extra_levels=reader._levels_seen.get(cond.variable, ())
                )
        register(node.then)
        if node.orelse is not None:
            register(node.orelse)

    register(tree.root)
    return tree


def interpret(tree: DecisionTree, record: dict, default_level: str) -> str:
    """Directly walk the tree on a record; absent else means the default."""
    from .evaluate import condition_holds  # local import: evaluate depends on model only

    node = tree.root
    while isinstance(node, Branch):
        if all(condition_holds(c, record[c.variable]) for c in node.conditions):
            node = node.then
        else:
            if node.orelse is None:
                return default_level
            node = node.orelse
    return node.outcome


def flatten(
    tree: DecisionTree,
    outcome_spec: OutcomeSpec,
    registry: VariableRegistry,
    name: str | None = None,
    domain: str = "",
    objective: str = "",
    provenance: Provenance | None = None,
) -> RuleSet:
    """Flatten a decision tree into a first-match-wins rule list.

    Pre-order traversal: each leaf becomes one rule whose conditions are the
    concatenated conjunctions of its TRUE-branch ancestors; else-branches
    contribute no conditions because rule order already encodes them. Every
    absent else materializes a leaf carrying the spec default, so the last
    rule is always the condition-free default rule.
    """
    leaves: list[tuple[tuple[Condition, ...], str]] = []

    def walk(node: Branch | Leaf | None, prefix: tuple[Condition, ...]):
        if node is None:  # absent else: materialize a default leaf
            leaves.append((prefix, outcome_spec.default_level))
            return
        if isinstance(node, Leaf):
            leaves.append((prefix, node.outcome))
            return
        walk(node.then, prefix + node.conditions)
        walk(node.orelse, prefix)

    walk(tree.root, ())

    bad = sorted({lvl for _, lvl in leaves if lvl not in outcome_spec.levels})
    if bad:
        raise ValidationFailed([
            Diagnostic("UnknownOutcomeLevel", f"leaf outcome {lvl!r} not in {list(outcome_spec.levels)}")
            for lvl in bad
        ])

    rules: list[Rule] = []
    for conditions, level in leaves:
        deduped: list[Condition] = []
        for cond in conditions:
            if cond not in deduped:
                deduped.append(cond)
        rules.append(Rule(len(rules), tuple(deduped), level))
    return RuleSet(
        name=name if name is not None else (tree.name or "rules"),
        domain=domain,
        objective=objective,
        outcome=outcome_spec,
        rules=tuple(rules),
        provenance=provenance if provenance is not None else Provenance.generated(),
    )


def infer_outcome_spec(tree: DecisionTree) -> OutcomeSpec:
    """Derive an OutcomeSpec from a tree when the caller supplies none.

    Levels appear in pre-order leaf order; the default is the all-else leaf
    when one exists, otherwise the initial binding, otherwise the first level.
    """
    levels: list[str] = []
    last_leaf: str | None = None

    def walk(node):
        nonlocal last_leaf
        if isinstance(node, Leaf):
            if node.outcome not in levels:
                levels.append(node.outcome)
            last_leaf = node.outcome
            return
        walk(node.then)
        if node.orelse is not None:
            walk(node.orelse)
        else:
            last_leaf = None

    walk(tree.root)
    default = last_leaf
    if default is None:
        default = tree.initial_outcome if tree.initial_outcome in levels else None
    if default is None and tree.initial_outcome is not None:
        levels.append(tree.initial_outcome)
        default = tree.initial_outcome
    if default is None:
        default = levels[0]
    if len(levels) < 2:
        levels.append(default + "_NOT" if default + "_NOT" not in levels else default + "_ALT")
    return OutcomeSpec(tree.outcome_variable or "outcome", tuple(levels), default)


@dataclass
class ParsedResponse:
    rulesets: list[RuleSet] = field(default_factory=list)
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)


def parse_response(
    text: str,
    registry: VariableRegistry,
    outcome_spec: OutcomeSpec | None = None,
    domain: str = "",
    objective: str = "",
    provenance: Provenance | None = None,
) -> ParsedResponse:
    """Full response pipeline: extract code blocks, split them into function
    units, parse each into a tree, and flatten. Failures become diagnostics;
    parsing always continues with the remaining units."""
    parsed = ParsedResponse()
    units: list[tuple[str, str]] = []
    for block in extract_code_blocks(text):
        units.extend(split_function_units(block))
    for idx, (unit_name, code) in enumerate(units):
        label = unit_name or f"block_{idx}"
        try:
            tree = parse_conditional_code(code, registry)
            spec = outcome_spec if outcome_spec is not None else infer_outcome_spec(tree)
            rs = flatten(
                tree,
                spec,
                registry,
                name=unit_name or f"rules_{idx}",
                domain=domain,
                objective=objective,
                provenance=provenance,
            )
        except (UnsupportedConstruct, CodeSyntaxError) as exc:
            parsed.diagnostics.append(ParseDiagnostic("error", type(exc).__name__, str(exc), getattr(exc, "span", None), label))
            continue
        except ValidationFailed as exc:
            for diag in exc.diagnostics:
                parsed.diagnostics.append(ParseDiagnostic("error", diag.code, diag.message, None, label))
            continue
        parsed.rulesets.append(rs)
    return parsed

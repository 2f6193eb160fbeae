"""Parser and serializer for the native rule authoring DSL.

One rule set per block:

    ruleset "acute respiratory risk" {
      domain: "remote patient monitoring"
      objective: "classify patient status"
      outcome status in [GREEN, AMBER, RED] default GREEN
      rule r0: IF oxygen_saturation < 92 AND respiratory_rate >= 24 THEN status = RED
      rule r1: DEFAULT status = GREEN
    }

Comments run from `#` to end of line; whitespace is insignificant outside
strings. Variable names are canonicalized (lowercased, separators collapsed)
at parse time; alias resolution against a registry happens later.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canon import normalize_number
from .errors import DslSyntaxError
from .model import Condition, Operator, OutcomeSpec, Provenance, Rule, RuleSet, canonicalize_name, is_number

_PUNCT = {"{", "}", "[", "]", ",", ":", "="}
_OPS = (">=", "<=", "==", "!=", ">", "<")


@dataclass(frozen=True)
class Token:
    type: str  # IDENT, STRING, NUMBER, OP, PUNCT, EOF
    value: object
    line: int
    column: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def error(msg: str):
        raise DslSyntaxError(msg, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == '"':
            i += 1
            col += 1
            buf = []
            while i < n and text[i] != '"':
                if text[i] == "\n":
                    error("unterminated string")
                if text[i] == "\\" and i + 1 < n:
                    escapes = {"n": "\n", "t": "\t", "r": "\r"}
                    buf.append(escapes.get(text[i + 1], text[i + 1]))
                    i += 2
                    col += 2
                    continue
                buf.append(text[i])
                i += 1
                col += 1
            if i >= n:
                error("unterminated string")
            i += 1
            col += 1
            tokens.append(Token("STRING", "".join(buf), start_line, start_col))
            continue
        two = text[i : i + 2]
        if two in _OPS:
            tokens.append(Token("OP", two, start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in (">", "<"):
            tokens.append(Token("OP", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        if ch in _PUNCT:
            tokens.append(Token("PUNCT", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":  # scientific notation
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            raw = text[i:j]
            try:
                value = int(raw)
            except ValueError:
                try:
                    value = float(raw)
                except ValueError:
                    error(f"malformed number {raw!r}")
            tokens.append(Token("NUMBER", normalize_number(value), start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        error(f"unexpected character {ch!r}")
    tokens.append(Token("EOF", None, line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type != "EOF":
            self.pos += 1
        return tok

    def error(self, msg: str) -> DslSyntaxError:
        tok = self.peek()
        return DslSyntaxError(msg, tok.line, tok.column)

    def expect(self, type_: str, value: object = None) -> Token:
        tok = self.peek()
        if tok.type != type_ or (value is not None and tok.value != value):
            want = value if value is not None else type_
            raise self.error(f"expected {want!r}, found {tok.value!r}")
        return self.advance()

    def keyword(self, word: str) -> Token:
        tok = self.peek()
        if tok.type != "IDENT" or tok.value != word:
            raise self.error(f"expected keyword {word!r}, found {tok.value!r}")
        return self.advance()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.type == "IDENT" and tok.value == word

    def parse_document(self) -> list[RuleSet]:
        rulesets = []
        while self.peek().type != "EOF":
            rulesets.append(self.parse_ruleset())
        if not rulesets:
            raise self.error("document contains no ruleset blocks")
        return rulesets

    def parse_ruleset(self) -> RuleSet:
        self.keyword("ruleset")
        name = self.expect("STRING").value
        self.expect("PUNCT", "{")
        self.keyword("domain")
        self.expect("PUNCT", ":")
        domain = self.expect("STRING").value
        self.keyword("objective")
        self.expect("PUNCT", ":")
        objective = self.expect("STRING").value
        outcome = self.parse_outcome()
        rules: list[Rule] = []
        while self.at_keyword("rule"):
            rules.append(self.parse_rule(len(rules), outcome))
        if not rules:
            raise self.error("ruleset block declares no rules")
        self.expect("PUNCT", "}")
        return RuleSet(
            name=name,
            domain=domain,
            objective=objective,
            outcome=outcome,
            rules=tuple(rules),
            provenance=Provenance.expert(),
        )

    def parse_outcome(self) -> OutcomeSpec:
        self.keyword("outcome")
        name = self.expect("IDENT").value
        self.keyword("in")
        self.expect("PUNCT", "[")
        levels = [self.expect("IDENT").value]
        while self.peek().value == ",":
            self.advance()
            levels.append(self.expect("IDENT").value)
        self.expect("PUNCT", "]")
        self.keyword("default")
        default = self.expect("IDENT").value
        try:
            return OutcomeSpec(name, tuple(levels), default)
        except ValueError as exc:
            raise self.error(str(exc))

    def parse_rule(self, index: int, outcome: OutcomeSpec) -> Rule:
        self.keyword("rule")
        self.expect("IDENT")  # rule label; kept only in source text
        self.expect("PUNCT", ":")
        conditions: list[Condition] = []
        if self.at_keyword("DEFAULT"):
            self.advance()
        else:
            self.keyword("IF")
            conditions.append(self.parse_condition())
            while self.at_keyword("AND"):
                self.advance()
                conditions.append(self.parse_condition())
            self.keyword("THEN")
        var = self.expect("IDENT").value
        if var != outcome.name:
            raise self.error(f"rule assigns {var!r} but the outcome variable is {outcome.name!r}")
        self.expect("PUNCT", "=")
        level = self.expect("IDENT").value
        return Rule(index, tuple(conditions), level)

    def parse_condition(self) -> Condition:
        name = canonicalize_name(self.expect("IDENT").value)
        op_tok = self.expect("OP")
        operator = Operator.from_symbol(op_tok.value)
        tok = self.peek()
        if tok.type == "NUMBER":
            value: object = self.advance().value
        elif tok.type == "IDENT" and tok.value in ("true", "false"):
            value = self.advance().value == "true"
        elif tok.type == "IDENT":
            value = self.advance().value
        else:
            raise self.error(f"expected a literal, found {tok.value!r}")
        if operator.is_ordering and not is_number(value):
            raise self.error(f"{operator.symbol} needs a numeric literal, found {value!r}")
        return Condition(name, operator, value)


def parse_dsl(text: str) -> list[RuleSet]:
    """Parse a DSL document into rule sets, one per block, in source order."""
    return _Parser(_tokenize(text)).parse_document()


def _render_literal(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest decimal that round-trips
    return str(value)


def _render_string(value: str) -> str:
    escaped = (
        value.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\t", "\\t")
        .replace("\r", "\\r")
    )
    return f'"{escaped}"'


def serialize_dsl(rulesets: list[RuleSet]) -> str:
    """Render rule sets back to DSL text; reparsing yields structurally
    identical rule sets (id and provenance excepted)."""
    blocks = []
    for rs in rulesets:
        lines = [f"ruleset {_render_string(rs.name)} {{"]
        lines.append(f"  domain: {_render_string(rs.domain)}")
        lines.append(f"  objective: {_render_string(rs.objective)}")
        levels = ", ".join(rs.outcome.levels)
        lines.append(f"  outcome {rs.outcome.name} in [{levels}] default {rs.outcome.default_level}")
        for rule in rs.rules:
            if rule.is_default:
                body = f"DEFAULT {rs.outcome.name} = {rule.outcome}"
            else:
                conds = " AND ".join(
                    f"{c.variable} {c.operator.symbol} {_render_literal(c.value)}" for c in rule.conditions
                )
                body = f"IF {conds} THEN {rs.outcome.name} = {rule.outcome}"
            lines.append(f"  rule r{rule.index}: {body}")
        lines.append("}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"

import random

import pytest

from ruleflex.codeparse import (
    Branch,
    Leaf,
    extract_code_blocks,
    flatten,
    infer_outcome_spec,
    interpret,
    parse_conditional_code,
    parse_response,
    split_function_units,
)
from ruleflex.errors import UnsupportedConstruct, ValidationFailed
from ruleflex.evaluate import evaluate
from ruleflex.gateway import FRAUD_EXAMPLE_BLOCK
from ruleflex.model import Condition, Operator, OutcomeSpec, default_registry

from conftest import random_record, random_tree, tree_variables


class TestExtractCodeBlocks:
    def test_two_fenced_blocks_in_order(self):
        text = "intro\n```python\nfirst = 1\n```\nmiddle\n```\nsecond = 2\n```\nbye"
        assert extract_code_blocks(text) == ["first = 1", "second = 2"]

    def test_plain_prose_yields_nothing(self):
        assert extract_code_blocks("No code here.\nJust words.") == []

    def test_unfenced_function_region(self):
        text = (
            "Here is the rule set:\n"
            "\n"
            "def fraud_detection_rule(a, b):\n"
            "    if (a >= 1) and (b >= 2):\n"
            "        out = 'YES'\n"
            "\n"
            "That covers the logic.\n"
        )
        blocks = extract_code_blocks(text)
        assert len(blocks) == 1
        # hand-marked span: def line through the last indented line
        assert blocks[0].startswith("def fraud_detection_rule")
        assert blocks[0].rstrip().endswith("out = 'YES'")
        assert "That covers" not in blocks[0]

    def test_two_unfenced_functions(self):
        fn = "def f{i}(x):\n    if x >= {i}:\n        s = 'A'\n"
        text = "A:\n" + fn.format(i=1) + "\nand\n\n" + fn.format(i=2)
        assert len(extract_code_blocks(text)) == 2

    def test_unterminated_fence_runs_to_end(self):
        text = "```python\nx = 1\ny = 2"
        assert extract_code_blocks(text) == ["x = 1\ny = 2"]


class TestSplitFunctionUnits:
    def test_functions_carry_preceding_bindings(self):
        block = "limit = 10\n\ndef f(x):\n    if x >= limit:\n        s = 'A'\n\ndef g(x):\n    if x < limit:\n        s = 'B'\n"
        units = split_function_units(block)
        assert [name for name, _ in units] == ["f", "g"]
        assert all("limit = 10" in code for _, code in units)

    def test_no_def_is_one_unit(self):
        assert split_function_units("if x >= 1:\n    s = 'A'") == [("", "if x >= 1:\n    s = 'A'")]


class TestParseConditionalCode:
    def test_fraud_exemplar(self, registry):
        tree = parse_conditional_code(FRAUD_EXAMPLE_BLOCK, registry)
        assert tree.outcome_variable == "fraudDetected"
        assert tree.leaf_count() == 3
        root = tree.root
        assert isinstance(root, Branch) and isinstance(root.orelse, Branch)
        # allowedTransactionAmount substituted by its bound literal
        assert root.conditions == (
            Condition("transaction_amount", Operator.LE, 50000),
            Condition("transaction_currency", Operator.NE, "USD"),
        )
        assert root.orelse.conditions == (
            Condition("transaction_amount", Operator.GT, 50000),
            Condition("transaction_type", Operator.NE, "Daily"),
        )
        assert root.then == Leaf("POSSIBLE")
        assert root.orelse.then == Leaf("YES")
        assert root.orelse.orelse == Leaf("NO")

    def test_no_else_branch_absent(self, registry):
        tree = parse_conditional_code("s = 'B'\nif x >= 1:\n    s = 'A'\n", registry)
        assert isinstance(tree.root, Branch) and tree.root.orelse is None

    def test_while_rejected(self, registry):
        with pytest.raises(UnsupportedConstruct):
            parse_conditional_code("while x > 1:\n    s = 'A'\n", registry)

    @pytest.mark.parametrize("code", [
        "if (x >= 1) or (y >= 2):\n    s = 'A'\n",       # disjunction
        "if f(x) >= 1:\n    s = 'A'\n",                   # call
        "if x + 1 >= 2:\n    s = 'A'\n",                  # arithmetic
        "def f(x):\n    if x >= 1:\n        s = 'A'\n    return s\n",  # return
        "for i in y:\n    s = 'A'\n",                     # loop
        "if x >= 1:\n    s = 'A'\nif x >= 2:\n    s = 'B'\n",  # two chains
        "if x >= y:\n    s = 'A'\n",                      # unbound name
    ])
    def test_out_of_subset_rejected(self, code, registry):
        with pytest.raises(UnsupportedConstruct):
            parse_conditional_code(code, registry)

    def test_rejection_carries_span(self, registry):
        code = "if (x >= 1) or (y >= 2):\n    s = 'A'\n"
        with pytest.raises(UnsupportedConstruct) as exc:
            parse_conditional_code(code, registry)
        start, end = exc.value.span
        assert code[start:end] == "(x >= 1) or (y >= 2)"

    def test_negation_normalized(self, registry):
        tree = parse_conditional_code("if not (x >= 1):\n    s = 'A'\n", registry)
        assert tree.root.conditions == (Condition("x", Operator.LT, 1),)

    def test_literal_left_mirrored(self, registry):
        tree = parse_conditional_code("if 38 <= temp:\n    s = 'A'\n", registry)
        assert tree.root.conditions == (Condition("body_temperature", Operator.GE, 38),)

    def test_chained_comparison_expands(self, registry):
        tree = parse_conditional_code("if 36 <= temp <= 38:\n    s = 'A'\n", registry)
        assert tree.root.conditions == (
            Condition("body_temperature", Operator.GE, 36),
            Condition("body_temperature", Operator.LE, 38),
        )

    def test_elif_desugars_to_nested_else(self, registry):
        code = (
            "s = 'C'\n"
            "if x >= 2:\n    s = 'A'\n"
            "elif x >= 1:\n    s = 'B'\n"
            "else:\n    s = 'C'\n"
        )
        tree = parse_conditional_code(code, registry)
        assert isinstance(tree.root.orelse, Branch)
        assert tree.root.orelse.conditions == (Condition("x", Operator.GE, 1),)

    def test_unknown_variables_auto_registered(self, registry):
        parse_conditional_code("if widget_index >= 3:\n    s = 'A'\n", registry)
        assert registry.knows("widget_index")
        assert registry.resolve("widget_index").kind == "numeric"

    def test_aliases_resolve_during_parse(self, registry):
        tree = parse_conditional_code("if spo2 < 92:\n    s = 'A'\n", registry)
        assert tree.root.conditions[0].variable == "oxygen_saturation"


class TestFlatten:
    def test_fraud_exemplar_three_rules(self, registry):
        tree = parse_conditional_code(FRAUD_EXAMPLE_BLOCK, registry)
        rs = flatten(tree, infer_outcome_spec(tree), registry)
        assert [r.outcome for r in rs.rules] == ["POSSIBLE", "YES", "NO"]
        assert rs.rules[0].conditions == (
            Condition("transaction_amount", Operator.LE, 50000),
            Condition("transaction_currency", Operator.NE, "USD"),
        )
        assert rs.rules[1].conditions == (
            Condition("transaction_amount", Operator.GT, 50000),
            Condition("transaction_type", Operator.NE, "Daily"),
        )
        assert rs.rules[2].conditions == ()

    def test_leaf_only_tree_single_default_rule(self, registry):
        from ruleflex.codeparse import DecisionTree

        tree = DecisionTree(root=Leaf("GREEN"), outcome_variable="status")
        spec = OutcomeSpec("status", ("GREEN", "RED"), "GREEN")
        rs = flatten(tree, spec, registry)
        assert len(rs.rules) == 1 and rs.rules[0].conditions == () and rs.rules[0].outcome == "GREEN"

    def test_rule_count_equals_leaf_count_with_absent_else(self, registry):
        tree = parse_conditional_code("s = 'B'\nif x >= 1:\n    s = 'A'\n", registry)
        spec = OutcomeSpec("s", ("A", "B"), "B")
        rs = flatten(tree, spec, registry)
        assert len(rs.rules) == tree.leaf_count() + 1  # absent else adds one default leaf

    def test_leaf_outside_levels_rejected(self, registry):
        tree = parse_conditional_code("if x >= 1:\n    s = 'PURPLE'\nelse:\n    s = 'GREEN'\n", registry)
        with pytest.raises(ValidationFailed):
            flatten(tree, OutcomeSpec("s", ("GREEN", "RED"), "GREEN"), registry)

    def test_flattening_equivalence_random_trees(self, registry):
        rng = random.Random(101)
        spec = OutcomeSpec("status", ("GREEN", "AMBER", "RED"), "GREEN")
        for _ in range(60):
            tree = random_tree(rng, registry)
            rs = flatten(tree, spec, registry)
            variables = tree_variables(tree)
            for _ in range(200):
                record = random_record(rng, registry, variables)
                assert evaluate(rs, record).outcome == interpret(tree, record, spec.default_level)

    def test_flattened_rulesets_validate_clean(self, registry):
        from ruleflex.model import validate_ruleset

        rng = random.Random(55)
        spec = OutcomeSpec("status", ("GREEN", "AMBER", "RED"), "GREEN")
        for _ in range(40):
            rs = flatten(random_tree(rng, registry), spec, registry)
            assert validate_ruleset(rs, registry) == []


class TestInferOutcomeSpec:
    def test_fraud_inference(self, registry):
        tree = parse_conditional_code(FRAUD_EXAMPLE_BLOCK, registry)
        spec = infer_outcome_spec(tree)
        assert spec.name == "fraudDetected"
        assert set(spec.levels) == {"POSSIBLE", "YES", "NO"}
        assert spec.default_level == "NO"

    def test_absent_else_uses_initial_binding(self, registry):
        tree = parse_conditional_code("s = 'B'\nif x >= 1:\n    s = 'A'\n", registry)
        assert infer_outcome_spec(tree).default_level == "B"


class TestParseResponse:
    def test_mixed_response(self, registry, outcome_spec):
        text = (
            "Sure, here are two rule sets.\n"
            "```python\n"
            "def one(body_temperature):\n"
            "    status = 'GREEN'\n"
            "    if body_temperature >= 38:\n"
            "        status = 'RED'\n"
            "    else:\n"
            "        status = 'GREEN'\n"
            "```\n"
            "```python\n"
            "def two(cough):\n"
            "    status = 'GREEN'\n"
            "    while cough:\n"
            "        status = 'AMBER'\n"
            "```\n"
        )
        parsed = parse_response(text, registry, outcome_spec)
        assert len(parsed.rulesets) == 1
        assert parsed.rulesets[0].name == "one"
        assert len(parsed.diagnostics) == 1
        assert parsed.diagnostics[0].code == "UnsupportedConstruct"
        assert parsed.diagnostics[0].unit == "two"

    def test_each_function_is_one_ruleset(self, registry, outcome_spec):
        body = (
            "def f{i}(body_temperature):\n"
            "    status = 'GREEN'\n"
            "    if body_temperature >= 3{i}:\n"
            "        status = 'RED'\n"
            "    else:\n"
            "        status = 'GREEN'\n"
        )
        text = "```python\n" + body.format(i=1) + "\n" + body.format(i=2) + "```\n"
        parsed = parse_response(text, registry, outcome_spec)
        assert [rs.name for rs in parsed.rulesets] == ["f1", "f2"]

    def test_outcome_level_mismatch_becomes_diagnostic(self, registry, outcome_spec):
        text = "```python\nif body_temperature >= 38:\n    status = 'PURPLE'\n```"
        parsed = parse_response(text, registry, outcome_spec)
        assert parsed.rulesets == []
        assert [d.code for d in parsed.diagnostics] == ["UnknownOutcomeLevel"]

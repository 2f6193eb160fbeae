import random
from fractions import Fraction

import pytest

from ruleflex.analyze import (
    EXTRA_CONDITION,
    MATCH,
    MISSING_CONDITION,
    WRONG_OPERATOR,
    WRONG_THRESHOLD,
    ComparisonReport,
    ScoringConfig,
    align_rules,
    alignment_score,
    classify_pair,
    compare,
    compare_corpus,
    compute_metrics,
    consistency,
    similarity_score,
    variable_overlap,
)
from ruleflex.errors import EmptyInput, InsufficientRuns
from ruleflex.model import (
    Condition,
    Operator,
    OutcomeSpec,
    Provenance,
    Rule,
    RuleSet,
)

from conftest import brute_force_alignment_best, brute_force_compare_totals, random_ruleset

SPEC = OutcomeSpec("status", ("GREEN", "AMBER", "RED"), "GREEN")

# variable vocabularies as observed for each source in the overlap analysis
PIMS_VARS = {
    "body_temperature", "shortness_of_breath", "cough", "loss_of_taste_or_smell",
    "sore_throat", "respiratory_rate", "fatigue", "oxygen_saturation", "heart_rate",
    "age", "comorbidity", "gender", "myalgia", "diarrhoea", "runny_nose",
}
GPT35_VARS = {"body_temperature", "cough", "respiratory_rate", "fatigue", "heart_rate"}
GPT4_VARS = {
    "body_temperature", "shortness_of_breath", "cough", "loss_of_taste_or_smell",
    "fatigue", "oxygen_saturation", "age", "comorbidity",
}


def rs_of(*rules, name="t"):
    return RuleSet(name, "d", "o", SPEC, tuple(rules), Provenance.expert())


def cond(var, op, value):
    return Condition(var, Operator.from_symbol(op), value)


class TestComputeMetrics:
    def test_single_rule_single_condition(self):
        rs = rs_of(Rule(0, (cond("body_temperature", ">=", 38),), "RED"))
        report = compute_metrics([rs])
        assert report.ruleset_count == 1
        assert report.mean_conditions_overall == 1
        assert report.variables_used == {"body_temperature"}

    def test_pooled_mean_across_rulesets(self):
        # pooled per-rule counts [5, 4, 5, 4, 5, 4] -> 27/6 = 4.5
        a = rs_of(Rule(0, tuple(cond(v, "==", True) for v in ("cough", "fatigue", "myalgia", "diarrhoea", "runny_nose")), "RED"),
                  Rule(1, tuple(cond(v, "==", True) for v in ("cough", "fatigue", "myalgia", "diarrhoea")), "AMBER"))
        b = rs_of(Rule(0, tuple(cond(v, "==", True) for v in ("cough", "fatigue", "sore_throat", "myalgia", "diarrhoea")), "RED"),
                  Rule(1, tuple(cond(v, "==", True) for v in ("cough", "fatigue", "sore_throat", "runny_nose")), "AMBER"))
        c = rs_of(Rule(0, tuple(cond(v, "==", True) for v in ("cough", "fatigue", "myalgia", "runny_nose", "sore_throat")), "RED"),
                  Rule(1, tuple(cond(v, "==", True) for v in ("cough", "myalgia", "diarrhoea", "runny_nose")), "AMBER"))
        report = compute_metrics([a, b, c])
        assert report.ruleset_count == 3
        assert report.mean_conditions_overall == Fraction(9, 2)

    def test_default_rules_counted_but_not_averaged(self):
        rs = rs_of(
            Rule(0, (cond("body_temperature", ">=", 38), cond("cough", "==", True)), "RED"),
            Rule(1, (), "GREEN"),
        )
        report = compute_metrics([rs])
        assert report.per_ruleset[0].rule_count == 2
        assert report.per_ruleset[0].condition_counts == [2]
        assert report.mean_conditions_overall == 2

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            compute_metrics([])


class TestVariableOverlap:
    def test_observed_vocabulary_vs_reference(self):
        report = variable_overlap(GPT35_VARS, PIMS_VARS)
        assert len(report.intersection) == 5
        assert len(report.union) == 15
        assert report.jaccard == Fraction(1, 3)
        assert {"myalgia", "diarrhoea", "runny_nose"} <= report.only_right
        assert report.only_left == set()

    def test_second_vocabulary(self):
        report = variable_overlap(GPT4_VARS, PIMS_VARS)
        assert len(report.intersection) == 8
        assert {"myalgia", "diarrhoea", "runny_nose"} <= report.only_right

    def test_identical_sets(self):
        report = variable_overlap(PIMS_VARS, PIMS_VARS)
        assert report.jaccard == 1
        assert report.only_left == set() == report.only_right

    def test_disjoint_sets(self):
        assert variable_overlap({"a"}, {"b"}).jaccard == 0

    def test_jaccard_bounds_and_equality_iff_one(self):
        rng = random.Random(5)
        pool = sorted(PIMS_VARS)
        for _ in range(100):
            a = set(rng.sample(pool, rng.randint(0, len(pool))))
            b = set(rng.sample(pool, rng.randint(0, len(pool))))
            j = variable_overlap(a, b).jaccard
            assert 0 <= j <= 1
            assert (j == 1) == (a == b)


class TestClassifyPair:
    def test_worked_two_ruleset_example(self):
        cand = Rule(0, (cond("body_temperature", ">=", 37.5), cond("shortness_of_breath", "==", False)), "RED")
        ref = Rule(0, (cond("body_temperature", ">=", 38),), "RED")
        kinds = [(c.kind, (c.candidate or c.reference).variable) for c in classify_pair(cand, ref)]
        assert kinds == [(WRONG_THRESHOLD, "body_temperature"), (EXTRA_CONDITION, "shortness_of_breath")]

    def test_identical_rules_all_match(self):
        rule = Rule(0, (cond("body_temperature", ">=", 38), cond("cough", "==", True), cond("age", ">=", 65)), "RED")
        assert [c.kind for c in classify_pair(rule, rule)] == [MATCH] * 3

    def test_wrong_operator(self):
        cand = Rule(0, (cond("oxygen_saturation", ">", 92),), "RED")
        ref = Rule(0, (cond("oxygen_saturation", ">=", 92),), "RED")
        assert [c.kind for c in classify_pair(cand, ref)] == [WRONG_OPERATOR]

    def test_missing_condition(self):
        cand = Rule(0, (cond("cough", "==", True),), "RED")
        ref = Rule(0, (cond("cough", "==", True), cond("fatigue", "==", True)), "RED")
        kinds = [c.kind for c in classify_pair(cand, ref)]
        assert kinds == [MATCH, MISSING_CONDITION]

    def test_repeated_variable_pairs_in_source_order(self):
        cand = Rule(0, (cond("age", ">=", 10), cond("age", "<=", 80)), "RED")
        ref = Rule(0, (cond("age", ">=", 12), cond("age", "<=", 80)), "RED")
        assert [c.kind for c in classify_pair(cand, ref)] == [WRONG_THRESHOLD, MATCH]

    def test_threshold_tolerance_configurable(self):
        cand = Rule(0, (cond("body_temperature", ">=", 38.05),), "RED")
        ref = Rule(0, (cond("body_temperature", ">=", 38),), "RED")
        assert [c.kind for c in classify_pair(cand, ref)] == [WRONG_THRESHOLD]
        lenient = ScoringConfig(threshold_tolerance=Fraction(1, 10))
        assert [c.kind for c in classify_pair(cand, ref, lenient)] == [MATCH]

    def test_numeric_equality_across_int_float(self):
        cand = Rule(0, (cond("age", ">=", 65.0),), "RED")
        ref = Rule(0, (cond("age", ">=", 65),), "RED")
        assert [c.kind for c in classify_pair(cand, ref)] == [MATCH]


class TestAlignRules:
    def test_identity_assignment(self, registry):
        rng = random.Random(9)
        for _ in range(20):
            rs = random_ruleset(rng, registry)
            k = len(rs.rules)
            assert align_rules(rs, rs) == [(i, i) for i in range(k)]

    def test_outcome_gate_blocks_all(self):
        cand = rs_of(Rule(0, (cond("cough", "==", True),), "RED"))
        ref = rs_of(Rule(0, (cond("cough", "==", True),), "GREEN"))
        assert align_rules(cand, ref) == []

    def test_three_by_three_matches_exhaustive(self):
        """Handcrafted scores where greedy-by-row is suboptimal."""
        cand = rs_of(
            Rule(0, (cond("body_temperature", ">=", 38), cond("cough", "==", True)), "RED"),
            Rule(1, (cond("body_temperature", ">=", 39), cond("fatigue", "==", True)), "RED"),
            Rule(2, (cond("heart_rate", ">", 120),), "RED"),
        )
        ref = rs_of(
            Rule(0, (cond("body_temperature", ">=", 39), cond("cough", "==", True)), "RED"),
            Rule(1, (cond("heart_rate", ">", 120), cond("fatigue", "==", True)), "RED"),
            Rule(2, (cond("body_temperature", ">=", 38),), "RED"),
        )
        pairs = align_rules(cand, ref)
        assert alignment_score(cand, ref, pairs) == brute_force_alignment_best(cand, ref)

    def test_random_pairs_match_exhaustive_optimum(self, registry):
        rng = random.Random(77)
        for _ in range(60):
            cand = random_ruleset(rng, registry, max_rules=4)
            ref = random_ruleset(rng, registry, max_rules=4)
            pairs = align_rules(cand, ref)
            assert alignment_score(cand, ref, pairs) == brute_force_alignment_best(cand, ref)

    def test_lexicographic_tie_break(self):
        # two identical candidate rules vs two identical reference rules:
        # every pairing is optimal; the identity assignment is lex-smallest
        rule = lambda i: Rule(i, (cond("cough", "==", True),), "RED")
        cand = rs_of(rule(0), rule(1))
        ref = rs_of(rule(0), rule(1))
        assert align_rules(cand, ref) == [(0, 0), (1, 1)]


class TestCompare:
    def test_worked_example_totals(self):
        cand = rs_of(Rule(0, (cond("body_temperature", ">=", 37.5), cond("shortness_of_breath", "==", False)), "RED"))
        ref = rs_of(Rule(0, (cond("body_temperature", ">=", 38),), "RED"))
        report = compare(cand, ref)
        assert report.totals == {MATCH: 0, WRONG_THRESHOLD: 1, WRONG_OPERATOR: 0,
                                 EXTRA_CONDITION: 1, MISSING_CONDITION: 0}
        assert report.four_column_totals() == {MATCH: 0, WRONG_THRESHOLD: 1, EXTRA_CONDITION: 1, WRONG_OPERATOR: 0}

    def test_self_comparison_pure_match(self, registry):
        rng = random.Random(13)
        for _ in range(40):
            rs = random_ruleset(rng, registry)
            report = compare(rs, rs)
            assert report.totals[MATCH] == rs.condition_count()
            assert all(report.totals[k] == 0 for k in (WRONG_THRESHOLD, WRONG_OPERATOR, EXTRA_CONDITION, MISSING_CONDITION))
            assert report.similarity == 1

    def test_extra_missing_duality(self, registry):
        rng = random.Random(17)
        for _ in range(60):
            a = random_ruleset(rng, registry, max_rules=4)
            b = random_ruleset(rng, registry, max_rules=4)
            ab = compare(a, b)
            ba = compare(b, a)
            assert ab.totals[EXTRA_CONDITION] == ba.totals[MISSING_CONDITION]
            assert ab.totals[MISSING_CONDITION] == ba.totals[EXTRA_CONDITION]
            assert ab.totals[MATCH] == ba.totals[MATCH]
            assert ab.totals[WRONG_THRESHOLD] == ba.totals[WRONG_THRESHOLD]
            assert ab.totals[WRONG_OPERATOR] == ba.totals[WRONG_OPERATOR]

    def test_unmatched_rules_become_extra_and_missing(self):
        cand = rs_of(
            Rule(0, (cond("cough", "==", True),), "RED"),
            Rule(1, (cond("fatigue", "==", True), cond("myalgia", "==", True)), "AMBER"),
        )
        ref = rs_of(Rule(0, (cond("cough", "==", True),), "RED"))
        report = compare(cand, ref)
        assert report.unmatched_candidate_rules == [1]
        assert report.totals[EXTRA_CONDITION] == 2

    def test_totals_invariant_against_condition_counts(self, registry):
        rng = random.Random(19)
        for _ in range(40):
            a = random_ruleset(rng, registry, max_rules=4)
            b = random_ruleset(rng, registry, max_rules=4)
            t = compare(a, b).totals
            assert t[MATCH] + t[WRONG_THRESHOLD] + t[WRONG_OPERATOR] + t[EXTRA_CONDITION] == a.condition_count()
            assert t[MATCH] + t[WRONG_THRESHOLD] + t[WRONG_OPERATOR] + t[MISSING_CONDITION] == b.condition_count()

    def test_random_totals_match_brute_force_oracle(self, registry):
        rng = random.Random(21)
        variables = ["body_temperature", "respiratory_rate", "cough"]
        for _ in range(40):
            a = random_ruleset(rng, registry, max_rules=4, variables=variables)
            b = random_ruleset(rng, registry, max_rules=4, variables=variables)
            assert compare(a, b).totals == brute_force_compare_totals(a, b)


class TestSimilarityScore:
    def _report(self, totals, ref):
        return ComparisonReport("c", "r", [], [], [], totals, Fraction(0))

    def test_all_match_is_one(self):
        ref = rs_of(Rule(0, (cond("cough", "==", True), cond("fatigue", "==", True)), "RED"))
        totals = {MATCH: 2, WRONG_THRESHOLD: 0, WRONG_OPERATOR: 0, EXTRA_CONDITION: 0, MISSING_CONDITION: 0}
        assert similarity_score(self._report(totals, ref), ref) == 1

    def test_empty_alignment_nonempty_reference_is_zero(self):
        ref = rs_of(Rule(0, (cond("cough", "==", True),), "RED"))
        totals = {MATCH: 0, WRONG_THRESHOLD: 0, WRONG_OPERATOR: 0, EXTRA_CONDITION: 0, MISSING_CONDITION: 1}
        assert similarity_score(self._report(totals, ref), ref) == 0

    def test_partial_credit_formula(self):
        ref = rs_of(Rule(0, (cond("cough", "==", True), cond("fatigue", "==", True),
                             cond("myalgia", "==", True), cond("age", ">=", 65)), "RED"))
        totals = {MATCH: 1, WRONG_THRESHOLD: 2, WRONG_OPERATOR: 0, EXTRA_CONDITION: 0, MISSING_CONDITION: 1}
        assert similarity_score(self._report(totals, ref), ref) == Fraction(1, 2)

    def test_zero_condition_reference_guard(self):
        ref = rs_of(Rule(0, (), "GREEN"))
        empty = {MATCH: 0, WRONG_THRESHOLD: 0, WRONG_OPERATOR: 0, EXTRA_CONDITION: 0, MISSING_CONDITION: 0}
        assert similarity_score(self._report(empty, ref), ref) == 1
        with_extra = dict(empty, **{EXTRA_CONDITION: 1})
        assert similarity_score(self._report(with_extra, ref), ref) == 0

    def test_monotone_in_upgrades(self, registry):
        rng = random.Random(29)
        for _ in range(50):
            ref_conds = rng.randint(1, 8)
            m = rng.randint(0, ref_conds - 1)
            wt = rng.randint(1, ref_conds - m)
            wo = rng.randint(0, ref_conds - m - wt)
            ref_rules = tuple(
                Rule(i, (cond("age", ">=", 10 + i),), "RED") for i in range(ref_conds)
            )
            ref = rs_of(*ref_rules)
            totals = {MATCH: m, WRONG_THRESHOLD: wt, WRONG_OPERATOR: wo,
                      EXTRA_CONDITION: 0, MISSING_CONDITION: ref_conds - m - wt - wo}
            upgraded = dict(totals)
            upgraded[MATCH] += 1
            upgraded[WRONG_THRESHOLD] -= 1
            before = similarity_score(self._report(totals, ref), ref)
            after = similarity_score(self._report(upgraded, ref), ref)
            assert after >= before


class TestConsistency:
    def _metrics(self, rulesets):
        return compute_metrics(rulesets)

    def test_identical_reports_zero_spread(self):
        rs = rs_of(Rule(0, (cond("cough", "==", True),), "RED"))
        reports = [self._metrics([rs]) for _ in range(10)]
        out = consistency(reports)
        assert out.ruleset_count.sample_stddev == 0
        assert out.mean_conditions.sample_stddev == 0
        assert set(out.variable_stability.values()) <= {Fraction(1)}

    def test_simple_spread(self):
        one = rs_of(Rule(0, (cond("cough", "==", True),), "RED"))
        reports = [self._metrics([one] * 3), self._metrics([one] * 4)]
        out = consistency(reports)
        assert out.ruleset_count.mean == Fraction(7, 2)
        assert out.ruleset_count.minimum == 3
        assert out.ruleset_count.maximum == 4

    def test_variable_stability_fractions(self):
        with_cough = rs_of(Rule(0, (cond("cough", "==", True),), "RED"))
        with_fatigue = rs_of(Rule(0, (cond("fatigue", "==", True),), "RED"))
        out = consistency([self._metrics([with_cough]), self._metrics([with_fatigue])])
        assert out.variable_stability == {"cough": Fraction(1, 2), "fatigue": Fraction(1, 2)}

    def test_insufficient_runs(self):
        rs = rs_of(Rule(0, (cond("cough", "==", True),), "RED"))
        with pytest.raises(InsufficientRuns):
            consistency([self._metrics([rs])])


class TestCompareCorpus:
    def test_candidates_pair_with_most_shared_variables(self):
        cand = rs_of(Rule(0, (cond("cough", "==", True), cond("fatigue", "==", True)), "RED"), name="c")
        ref_a = rs_of(Rule(0, (cond("age", ">=", 65),), "RED"), name="a")
        ref_b = rs_of(Rule(0, (cond("cough", "==", True), cond("fatigue", "==", True)), "RED"), name="b")
        corpus = compare_corpus([cand], [ref_a, ref_b])
        assert corpus.assignments == [(0, 1)]
        assert corpus.summed_totals[MATCH] == 2

    def test_tie_goes_to_lowest_reference_index(self):
        cand = rs_of(Rule(0, (cond("cough", "==", True),), "RED"))
        ref = rs_of(Rule(0, (cond("cough", "==", True),), "RED"))
        corpus = compare_corpus([cand], [ref, ref])
        assert corpus.assignments == [(0, 0)]

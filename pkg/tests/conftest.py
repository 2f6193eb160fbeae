"""Shared fixtures: seeded random generators for rule sets, decision trees,
and records, plus brute-force oracles kept independent of the code under test."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import permutations

import pytest

from ruleflex.analyze import ScoringConfig, classify_pair, pair_score
from ruleflex.codeparse import Branch, DecisionTree, Leaf
from ruleflex.model import (
    BOOLEAN,
    CATEGORICAL,
    NUMERIC,
    Condition,
    Operator,
    OutcomeSpec,
    Provenance,
    Rule,
    RuleSet,
    default_outcome_spec,
    default_registry,
)

LEVELS = ("GREEN", "AMBER", "RED")

# per-variable threshold menus so random records can probe the boundaries
THRESHOLDS = {
    "body_temperature": [36.5, 37.5, 38.0, 39.0],
    "respiratory_rate": [16, 20, 24, 30],
    "oxygen_saturation": [88, 92, 95],
    "heart_rate": [60, 100, 120],
    "age": [40, 65, 75],
}
ORDERING_OPS = (Operator.GE, Operator.GT, Operator.LE, Operator.LT)


@pytest.fixture
def registry():
    return default_registry()


@pytest.fixture
def outcome_spec():
    return default_outcome_spec()


def random_condition(rng: random.Random, registry, variables: list[str]) -> Condition:
    name = rng.choice(variables)
    spec = registry.resolve(name)
    if spec.kind == NUMERIC:
        if rng.random() < 0.8:
            return Condition(name, rng.choice(ORDERING_OPS), rng.choice(THRESHOLDS[name]))
        return Condition(name, rng.choice((Operator.EQ, Operator.NE)), rng.choice(THRESHOLDS[name]))
    if spec.kind == BOOLEAN:
        return Condition(name, rng.choice((Operator.EQ, Operator.NE)), rng.random() < 0.5)
    return Condition(name, rng.choice((Operator.EQ, Operator.NE)), rng.choice(spec.levels))


def random_rule(rng: random.Random, registry, variables: list[str], index: int, max_conditions: int = 4) -> Rule:
    count = rng.randint(1, max_conditions)
    conds: list[Condition] = []
    for _ in range(count):
        cond = random_condition(rng, registry, variables)
        if cond not in conds:
            conds.append(cond)
    return Rule(index, tuple(conds), rng.choice(LEVELS))


def random_ruleset(
    rng: random.Random,
    registry,
    max_rules: int = 5,
    with_default: bool | None = None,
    variables: list[str] | None = None,
) -> RuleSet:
    if variables is None:
        pool = [s.canonical_name for s in registry]
        variables = rng.sample(pool, rng.randint(2, 6))
    n = rng.randint(1, max_rules)
    rules = [random_rule(rng, registry, variables, i) for i in range(n)]
    if with_default is None:
        with_default = rng.random() < 0.5
    if with_default:
        rules.append(Rule(len(rules), (), rng.choice(LEVELS)))
    return RuleSet(
        name=f"random_{rng.randrange(10**6)}",
        domain="remote patient monitoring",
        objective="triage",
        outcome=default_outcome_spec(),
        rules=tuple(rules),
        provenance=Provenance.expert(),
    )


def random_tree(rng: random.Random, registry, max_depth: int = 4, max_variables: int = 6) -> DecisionTree:
    pool = [s.canonical_name for s in registry]
    variables = rng.sample(pool, rng.randint(2, max_variables))

    def node(depth: int):
        if depth >= max_depth or rng.random() < 0.35:
            return Leaf(rng.choice(LEVELS))
        conds: list[Condition] = []
        for _ in range(rng.randint(1, 3)):
            cond = random_condition(rng, registry, variables)
            if cond not in conds:
                conds.append(cond)
        orelse = None if rng.random() < 0.25 else node(depth + 1)
        return Branch(tuple(conds), node(depth + 1), orelse)

    root = node(0)
    if isinstance(root, Leaf) and rng.random() < 0.7:  # keep most trees non-trivial
        root = Branch(
            (random_condition(rng, registry, variables),),
            node(1),
            node(1) if rng.random() < 0.8 else None,
        )
    return DecisionTree(root=root, outcome_variable="status", name="random_tree")


def tree_variables(tree: DecisionTree) -> list[str]:
    seen: list[str] = []

    def walk(node):
        if isinstance(node, Leaf):
            return
        for cond in node.conditions:
            if cond.variable not in seen:
                seen.append(cond.variable)
        walk(node.then)
        if node.orelse is not None:
            walk(node.orelse)

    walk(tree.root)
    return seen


def random_record(rng: random.Random, registry, variables: list[str]) -> dict:
    """Record over the given variables, biased toward threshold boundaries."""
    record = {}
    for name in variables:
        spec = registry.resolve(name)
        if spec.kind == NUMERIC:
            menu = THRESHOLDS.get(name, [0, 1, 10])
            t = rng.choice(menu)
            record[name] = rng.choice([t - 0.1, t, t + 0.1, t - 5, t + 5, rng.uniform(min(menu) - 10, max(menu) + 10)])
        elif spec.kind == BOOLEAN:
            record[name] = rng.random() < 0.5
        else:
            record[name] = rng.choice(spec.levels)
    return record


def brute_force_alignment_best(
    candidate: RuleSet, reference: RuleSet, scoring: ScoringConfig | None = None
) -> Fraction:
    """Exhaustive-permutation alignment optimum: the oracle align_rules is
    held against. Enumerates every injective same-outcome pairing directly."""
    scoring = scoring or ScoringConfig()
    total = Fraction(0)
    outcomes = {r.outcome for r in candidate.rules}
    for outcome in outcomes:
        rows = [r.index for r in candidate.rules if r.outcome == outcome]
        cols = [r.index for r in reference.rules if r.outcome == outcome]
        if not cols or not rows:
            continue
        score = {
            (i, j): pair_score(classify_pair(candidate.rules[i], reference.rules[j], scoring), scoring)
            for i in rows
            for j in cols
        }
        best = Fraction(0)
        k = min(len(rows), len(cols))
        for size in range(k + 1):
            for row_subset in permutations(rows, size):
                for col_subset in permutations(cols, size):
                    value = sum((score[(i, j)] for i, j in zip(row_subset, col_subset)), Fraction(0))
                    best = max(best, value)
        total += best
    return total


def brute_force_compare_totals(
    candidate: RuleSet, reference: RuleSet, scoring: ScoringConfig | None = None
) -> dict:
    """Independent full-comparison oracle: exhaustively pick, per outcome, the
    assignment lexicographically maximizing (score, matches, wrong
    thresholds), classify every pair, and absorb unmatched rules as
    extra/missing conditions."""
    scoring = scoring or ScoringConfig()
    totals = {"match": 0, "wrong_threshold": 0, "wrong_operator": 0,
              "extra_condition": 0, "missing_condition": 0}
    matched_cand: set[int] = set()
    matched_ref: set[int] = set()
    for outcome in {r.outcome for r in candidate.rules}:
        rows = [r.index for r in candidate.rules if r.outcome == outcome]
        cols = [r.index for r in reference.rules if r.outcome == outcome]
        if not cols or not rows:
            continue
        stats = {}
        for i in rows:
            for j in cols:
                cls = classify_pair(candidate.rules[i], reference.rules[j], scoring)
                stats[(i, j)] = (
                    pair_score(cls, scoring),
                    sum(1 for c in cls if c.kind == "match"),
                    sum(1 for c in cls if c.kind == "wrong_threshold"),
                )
        best_key = (Fraction(-1), -1, -1)
        best_assignment: tuple = ()
        k = min(len(rows), len(cols))
        for size in range(k + 1):
            for row_subset in permutations(rows, size):
                for col_subset in permutations(cols, size):
                    pairs = tuple(zip(row_subset, col_subset))
                    key = (
                        sum((stats[p][0] for p in pairs), Fraction(0)),
                        sum(stats[p][1] for p in pairs),
                        sum(stats[p][2] for p in pairs),
                    )
                    if key > best_key:
                        best_key, best_assignment = key, pairs
        for i, j in best_assignment:
            matched_cand.add(i)
            matched_ref.add(j)
            for c in classify_pair(candidate.rules[i], reference.rules[j], scoring):
                totals[c.kind] += 1
    for rule in candidate.rules:
        if rule.index not in matched_cand:
            totals["extra_condition"] += len(rule.conditions)
    for rule in reference.rules:
        if rule.index not in matched_ref:
            totals["missing_condition"] += len(rule.conditions)
    return totals

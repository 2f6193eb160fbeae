"""Quantitative comparison of rule sets.

Three report families: interpretability metrics (rule-set count, conditions
per rule), variable overlap between two vocabularies, and per-condition
discrepancy classification (match / wrong threshold / wrong operator /
extra / missing) over an optimal rule alignment, plus cross-run consistency
statistics. All arithmetic is exact (fractions.Fraction); square roots for
stddev are the only floats.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import AlignmentTooLarge, EmptyInput, InsufficientRuns
from .model import Condition, Rule, RuleSet, is_number

MATCH = "match"
WRONG_THRESHOLD = "wrong_threshold"
WRONG_OPERATOR = "wrong_operator"
EXTRA_CONDITION = "extra_condition"
MISSING_CONDITION = "missing_condition"

KINDS = (MATCH, WRONG_THRESHOLD, WRONG_OPERATOR, EXTRA_CONDITION, MISSING_CONDITION)

_MAX_ALIGN_GROUP = 16  # bitmask assignment solver bound per outcome level


def _frac_str(value: Fraction) -> str:
    return str(value)


@dataclass(frozen=True)
class ScoringConfig:
    """Per-classification weights and the threshold-equality tolerance.

    Defaults give full credit to exact matches and half credit to threshold
    or operator slips (an SME can repair those cheaply); extra and missing
    conditions earn nothing.
    """

    weights: dict = field(default_factory=lambda: {
        MATCH: Fraction(1),
        WRONG_THRESHOLD: Fraction(1, 2),
        WRONG_OPERATOR: Fraction(1, 2),
        EXTRA_CONDITION: Fraction(0),
        MISSING_CONDITION: Fraction(0),
    })
    threshold_tolerance: Fraction = Fraction(0)

    @classmethod
    def from_json(cls, doc: dict) -> "ScoringConfig":
        weights = {kind: Fraction(str(doc.get("weights", {}).get(kind, d)))
                   for kind, d in cls().weights.items()}
        return cls(weights=weights, threshold_tolerance=Fraction(str(doc.get("threshold_tolerance", 0))))


DEFAULT_SCORING = ScoringConfig()


@dataclass(frozen=True)
class ConditionClassification:
    kind: str
    candidate: Condition | None = None
    reference: Condition | None = None

    def __post_init__(self):
        if self.kind in (MATCH, WRONG_THRESHOLD, WRONG_OPERATOR):
            assert self.candidate is not None and self.reference is not None
        elif self.kind == EXTRA_CONDITION:
            assert self.candidate is not None and self.reference is None
        elif self.kind == MISSING_CONDITION:
            assert self.reference is not None and self.candidate is None

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.candidate is not None:
            doc["candidate"] = self.candidate.to_json()
        if self.reference is not None:
            doc["reference"] = self.reference.to_json()
        return doc


def _values_equal(a, b, tolerance: Fraction) -> bool:
    if is_number(a) and is_number(b):
        return abs(Fraction(a) - Fraction(b)) <= tolerance
    return type(a) is type(b) and a == b


def classify_pair(cand: Rule, ref: Rule, scoring: ScoringConfig = DEFAULT_SCORING) -> list[ConditionClassification]:
    """Classify each condition of an aligned rule pair.

    Conditions pair by canonical variable, in source order when a variable
    appears more than once. Paired: same operator and equal value -> match;
    same operator, different value -> wrong threshold; different operator ->
    wrong operator. Unpaired candidate conditions are extra, unpaired
    reference conditions missing.
    """
    ref_by_var: dict[str, deque[tuple[int, Condition]]] = {}
    for j, cond in enumerate(ref.conditions):
        ref_by_var.setdefault(cond.variable, deque()).append((j, cond))
    used_ref: set[int] = set()
    out: list[ConditionClassification] = []
    for cond in cand.conditions:
        bucket = ref_by_var.get(cond.variable)
        if bucket:
            j, ref_cond = bucket.popleft()
            used_ref.add(j)
            if cond.operator is ref_cond.operator:
                kind = MATCH if _values_equal(cond.value, ref_cond.value, scoring.threshold_tolerance) else WRONG_THRESHOLD
            else:
                kind = WRONG_OPERATOR
            out.append(ConditionClassification(kind, cond, ref_cond))
        else:
            out.append(ConditionClassification(EXTRA_CONDITION, cond, None))
    for j, ref_cond in enumerate(ref.conditions):
        if j not in used_ref:
            out.append(ConditionClassification(MISSING_CONDITION, None, ref_cond))
    return out


def pair_score(classifications: list[ConditionClassification], scoring: ScoringConfig = DEFAULT_SCORING) -> Fraction:
    return sum((scoring.weights[c.kind] for c in classifications), Fraction(0))


def _pair_stats(cand: Rule, ref: Rule, scoring: ScoringConfig) -> tuple[Fraction, int, int]:
    cls = classify_pair(cand, ref, scoring)
    score = pair_score(cls, scoring)
    matches = sum(1 for c in cls if c.kind == MATCH)
    thresholds = sum(1 for c in cls if c.kind == WRONG_THRESHOLD)
    return score, matches, thresholds


def _max_assignment_value(matrix: dict[tuple[int, int], int], rows: tuple[int, ...], cols: tuple[int, ...]) -> int:
    """Maximum total weight of a one-to-one (possibly partial) assignment.

    Exact search with memoization over a column bitmask; group sizes are
    bounded so the mask stays small.
    """
    if len(rows) > len(cols):
        transposed = {(j, i): w for (i, j), w in matrix.items()}
        return _max_assignment_value(transposed, cols, rows)
    if len(cols) > _MAX_ALIGN_GROUP and len(rows) > _MAX_ALIGN_GROUP:
        raise AlignmentTooLarge(
            f"alignment supports at most {_MAX_ALIGN_GROUP} rules per outcome level on the smaller side"
        )
    memo: dict[tuple[int, int], int] = {}

    def best(i: int, used: int) -> int:
        if i == len(rows):
            return 0
        key = (i, used)
        if key in memo:
            return memo[key]
        value = best(i + 1, used)  # row unmatched
        for jx, j in enumerate(cols):
            bit = 1 << jx
            if used & bit:
                continue
            w = matrix.get((rows[i], j), 0)
            value = max(value, w + best(i + 1, used | bit))
        memo[key] = value
        return value

    return best(0, 0)


def align_rules(
    candidate: RuleSet, reference: RuleSet, scoring: ScoringConfig = DEFAULT_SCORING
) -> list[tuple[int, int]]:
    """Optimal one-to-one rule assignment.

    Only rules sharing an outcome level may pair. The assignment maximizes,
    lexicographically, (total pair score, match count, wrong-threshold
    count) — the secondary objectives pin down the classification totals so
    comparing A against B and B against A always agree — and among optimal
    assignments the one whose (candidate, reference) index pairs are
    lexicographically smallest is returned, unmatched ranking last.
    """
    cand_by_outcome: dict[str, list[int]] = {}
    for rule in candidate.rules:
        cand_by_outcome.setdefault(rule.outcome, []).append(rule.index)
    ref_by_outcome: dict[str, list[int]] = {}
    for rule in reference.rules:
        ref_by_outcome.setdefault(rule.outcome, []).append(rule.index)

    # scalarize the (score, matches, thresholds) tuple into one integer
    denom = 1
    for w in scoring.weights.values():
        denom = denom * w.denominator // math.gcd(denom, w.denominator)
    bound = candidate.condition_count() + reference.condition_count() + 1

    pairs: list[tuple[int, int]] = []
    for outcome, rows in cand_by_outcome.items():
        cols = ref_by_outcome.get(outcome)
        if not cols:
            continue
        matrix: dict[tuple[int, int], int] = {}
        for i in rows:
            for j in cols:
                score, matches, thresholds = _pair_stats(candidate.rules[i], reference.rules[j], scoring)
                s_int = int(score * denom)
                matrix[(i, j)] = (s_int * bound + matches) * bound + thresholds

        target = _max_assignment_value(matrix, tuple(rows), tuple(cols))
        used: set[int] = set()
        for pos, i in enumerate(rows):
            rest = tuple(rows[pos + 1:])
            for j in cols:
                if j in used:
                    continue
                remaining = tuple(c for c in cols if c not in used and c != j)
                if matrix[(i, j)] + _max_assignment_value(matrix, rest, remaining) == target:
                    pairs.append((i, j))
                    used.add(j)
                    target -= matrix[(i, j)]
                    break
    return sorted(pairs)


@dataclass
class ComparisonReport:
    candidate_id: str
    reference_id: str
    aligned_pairs: list[tuple[int, int, list[ConditionClassification]]]
    unmatched_candidate_rules: list[int]
    unmatched_reference_rules: list[int]
    totals: dict[str, int]
    similarity: Fraction

    def four_column_totals(self) -> dict[str, int]:
        """The four headline discrepancy columns; missing is reported apart
        to stay comparable with four-column summaries."""
        return {k: self.totals[k] for k in (MATCH, WRONG_THRESHOLD, EXTRA_CONDITION, WRONG_OPERATOR)}

    def to_json(self) -> dict:
        return {
            "candidate": self.candidate_id,
            "reference": self.reference_id,
            "aligned_pairs": [
                {"candidate_rule": ci, "reference_rule": ri, "classifications": [c.to_json() for c in cls]}
                for ci, ri, cls in self.aligned_pairs
            ],
            "unmatched_candidate_rules": self.unmatched_candidate_rules,
            "unmatched_reference_rules": self.unmatched_reference_rules,
            "totals": dict(self.totals),
            "similarity": _frac_str(self.similarity),
            "similarity_approx": float(self.similarity),
        }


def similarity_score(report: "ComparisonReport", reference: RuleSet, scoring: ScoringConfig = DEFAULT_SCORING) -> Fraction:
    """Weighted classification credit normalized by the reference condition
    count, clamped to [0, 1].

    A reference with zero conditions scores 1 exactly when the candidate
    also has zero conditions.
    """
    ref_conditions = reference.condition_count()
    cand_conditions = (
        report.totals[MATCH] + report.totals[WRONG_THRESHOLD]
        + report.totals[WRONG_OPERATOR] + report.totals[EXTRA_CONDITION]
    )
    if ref_conditions == 0:
        return Fraction(1) if cand_conditions == 0 else Fraction(0)
    raw = sum((scoring.weights[kind] * count for kind, count in report.totals.items()), Fraction(0))
    return min(max(raw / ref_conditions, Fraction(0)), Fraction(1))


def compare(candidate: RuleSet, reference: RuleSet, scoring: ScoringConfig = DEFAULT_SCORING) -> ComparisonReport:
    """Align rules, classify every aligned pair, and absorb unmatched rules
    as all-extra / all-missing conditions."""
    pairs = align_rules(candidate, reference, scoring)
    matched_cand = {ci for ci, _ in pairs}
    matched_ref = {ri for _, ri in pairs}
    totals = {kind: 0 for kind in KINDS}
    aligned: list[tuple[int, int, list[ConditionClassification]]] = []
    for ci, ri in pairs:
        cls = classify_pair(candidate.rules[ci], reference.rules[ri], scoring)
        for c in cls:
            totals[c.kind] += 1
        aligned.append((ci, ri, cls))
    unmatched_cand = [r.index for r in candidate.rules if r.index not in matched_cand]
    unmatched_ref = [r.index for r in reference.rules if r.index not in matched_ref]
    for i in unmatched_cand:
        totals[EXTRA_CONDITION] += len(candidate.rules[i].conditions)
    for j in unmatched_ref:
        totals[MISSING_CONDITION] += len(reference.rules[j].conditions)
    report = ComparisonReport(
        candidate_id=candidate.content_id(),
        reference_id=reference.content_id(),
        aligned_pairs=aligned,
        unmatched_candidate_rules=unmatched_cand,
        unmatched_reference_rules=unmatched_ref,
        totals=totals,
        similarity=Fraction(0),
    )
    report.similarity = similarity_score(report, reference, scoring)
    return report


def alignment_score(candidate: RuleSet, reference: RuleSet, pairs: list[tuple[int, int]], scoring: ScoringConfig = DEFAULT_SCORING) -> Fraction:
    """Total pair score of a given assignment."""
    return sum(
        (_pair_stats(candidate.rules[ci], reference.rules[ri], scoring)[0] for ci, ri in pairs),
        Fraction(0),
    )


@dataclass
class OverlapReport:
    left_vars: set[str]
    right_vars: set[str]

    @property
    def intersection(self) -> set[str]:
        return self.left_vars & self.right_vars

    @property
    def union(self) -> set[str]:
        return self.left_vars | self.right_vars

    @property
    def jaccard(self) -> Fraction:
        if not self.union:
            return Fraction(1)  # two empty vocabularies are identical
        return Fraction(len(self.intersection), len(self.union))

    @property
    def only_left(self) -> set[str]:
        return self.left_vars - self.right_vars

    @property
    def only_right(self) -> set[str]:
        return self.right_vars - self.left_vars

    def to_json(self) -> dict:
        return {
            "left": sorted(self.left_vars),
            "right": sorted(self.right_vars),
            "intersection": sorted(self.intersection),
            "union": sorted(self.union),
            "jaccard": _frac_str(self.jaccard),
            "jaccard_approx": float(self.jaccard),
            "only_left": sorted(self.only_left),
            "only_right": sorted(self.only_right),
        }


def variable_overlap(a: set[str], b: set[str]) -> OverlapReport:
    """Set algebra over two canonicalized variable vocabularies. Apply any
    composite expansion (registry.expand) before calling when composites
    should count as their members."""
    return OverlapReport(set(a), set(b))


@dataclass
class PerRuleSetMetrics:
    name: str
    rule_count: int
    condition_counts: list[int]
    mean_conditions: Fraction

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "rule_count": self.rule_count,
            "condition_counts": self.condition_counts,
            "mean_conditions": _frac_str(self.mean_conditions),
        }


@dataclass
class MetricsReport:
    ruleset_count: int
    per_ruleset: list[PerRuleSetMetrics]
    mean_conditions_overall: Fraction
    variables_used: set[str]

    def to_json(self) -> dict:
        return {
            "ruleset_count": self.ruleset_count,
            "per_ruleset": [p.to_json() for p in self.per_ruleset],
            "mean_conditions_overall": _frac_str(self.mean_conditions_overall),
            "mean_conditions_overall_approx": float(self.mean_conditions_overall),
            "variables_used": sorted(self.variables_used),
        }


def compute_metrics(rulesets: list[RuleSet]) -> MetricsReport:
    """Interpretability counts for one response's rule sets.

    Default rules count as rules but are excluded from condition averaging;
    the overall mean pools every condition-bearing rule across the response.
    """
    if not rulesets:
        raise EmptyInput("no rule sets to measure")
    per: list[PerRuleSetMetrics] = []
    pooled: list[int] = []
    variables: set[str] = set()
    for rs in rulesets:
        counts = [len(r.conditions) for r in rs.rules if r.conditions]
        mean = Fraction(sum(counts), len(counts)) if counts else Fraction(0)
        per.append(PerRuleSetMetrics(rs.name, len(rs.rules), counts, mean))
        pooled.extend(counts)
        variables.update(rs.referenced_variables())
    overall = Fraction(sum(pooled), len(pooled)) if pooled else Fraction(0)
    return MetricsReport(len(rulesets), per, overall, variables)


@dataclass
class MetricStats:
    values: list[Fraction]
    mean: Fraction
    sample_stddev: float
    minimum: Fraction
    maximum: Fraction

    def to_json(self) -> dict:
        return {
            "values": [_frac_str(v) for v in self.values],
            "mean": _frac_str(self.mean),
            "mean_approx": float(self.mean),
            "sample_stddev": self.sample_stddev,
            "min": _frac_str(self.minimum),
            "max": _frac_str(self.maximum),
        }


def _stats(values: list[Fraction]) -> MetricStats:
    n = len(values)
    mean = sum(values, Fraction(0)) / n
    variance = sum(((v - mean) ** 2 for v in values), Fraction(0)) / (n - 1)
    return MetricStats(values, mean, math.sqrt(variance), min(values), max(values))


@dataclass
class ConsistencyReport:
    ruleset_count: MetricStats
    mean_conditions: MetricStats
    variable_stability: dict[str, Fraction]

    def to_json(self) -> dict:
        return {
            "runs": len(self.ruleset_count.values),
            "ruleset_count": self.ruleset_count.to_json(),
            "mean_conditions": self.mean_conditions.to_json(),
            "variable_stability": {k: _frac_str(v) for k, v in sorted(self.variable_stability.items())},
        }


def consistency(reports: list[MetricsReport]) -> ConsistencyReport:
    """Cross-run stability of the interpretability metrics."""
    if len(reports) < 2:
        raise InsufficientRuns("consistency needs at least two runs")
    n = len(reports)
    counts = [Fraction(r.ruleset_count) for r in reports]
    means = [r.mean_conditions_overall for r in reports]
    stability: dict[str, Fraction] = {}
    for report in reports:
        for var in report.variables_used:
            stability[var] = stability.get(var, Fraction(0)) + Fraction(1, n)
    return ConsistencyReport(_stats(counts), _stats(means), stability)


@dataclass
class CorpusComparison:
    """A response's rule sets each compared against its closest expert set
    (most shared variables, ties to the lowest expert index)."""

    assignments: list[tuple[int, int]]
    reports: list[ComparisonReport]
    summed_totals: dict[str, int]

    def to_json(self) -> dict:
        return {
            "assignments": [{"candidate": c, "reference": r} for c, r in self.assignments],
            "reports": [r.to_json() for r in self.reports],
            "summed_totals": dict(self.summed_totals),
        }


def compare_corpus(
    candidates: list[RuleSet], references: list[RuleSet], scoring: ScoringConfig = DEFAULT_SCORING
) -> CorpusComparison:
    if not candidates or not references:
        raise EmptyInput("corpus comparison needs candidates and references")
    assignments: list[tuple[int, int]] = []
    reports: list[ComparisonReport] = []
    totals = {kind: 0 for kind in KINDS}
    for ci, cand in enumerate(candidates):
        cand_vars = set(cand.referenced_variables())
        best_ri, best_shared = 0, -1
        for ri, ref in enumerate(references):
            shared = len(cand_vars & set(ref.referenced_variables()))
            if shared > best_shared:
                best_ri, best_shared = ri, shared
        assignments.append((ci, best_ri))
        report = compare(cand, references[best_ri], scoring)
        reports.append(report)
        for kind in KINDS:
            totals[kind] += report.totals[kind]
    return CorpusComparison(assignments, reports, totals)

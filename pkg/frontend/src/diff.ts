/** Diff view-model: a faithful re-arrangement of a ComparisonReport for
 * side-by-side rendering. Badges and totals are copied verbatim from the
 * report; this module computes no classifications of its own. */

import type {
  ClassificationDoc,
  ClassificationKind,
  ComparisonReportDoc,
  ConditionDoc,
} from './types.js';

export const BADGE_LABELS: Record<ClassificationKind, string> = {
  match: 'Match',
  wrong_threshold: 'Wrong Threshold',
  wrong_operator: 'Wrong Operator',
  extra_condition: 'Extra',
  missing_condition: 'Missing',
};

/** The four headline columns; missing is shown on its own line. */
export const FOUR_COLUMNS: ClassificationKind[] = [
  'match',
  'wrong_threshold',
  'extra_condition',
  'wrong_operator',
];

export interface BadgeCell {
  kind: ClassificationKind;
  label: string;
  candidate: ConditionDoc | null;
  reference: ConditionDoc | null;
}

export interface DiffRow {
  candidateRule: number | null;
  referenceRule: number | null;
  badges: BadgeCell[];
}

export interface DiffView {
  rows: DiffRow[];
  fourColumnTotals: Array<{ kind: ClassificationKind; label: string; count: number }>;
  missingTotal: number;
  similarity: string;
  similarityApprox: number;
}

function badge(c: ClassificationDoc): BadgeCell {
  return {
    kind: c.kind,
    label: BADGE_LABELS[c.kind],
    candidate: c.candidate ?? null,
    reference: c.reference ?? null,
  };
}

export function buildDiffView(report: ComparisonReportDoc): DiffView {
  const rows: DiffRow[] = report.aligned_pairs.map((pair) => ({
    candidateRule: pair.candidate_rule,
    referenceRule: pair.reference_rule,
    badges: pair.classifications.map(badge),
  }));
  for (const index of report.unmatched_candidate_rules) {
    rows.push({ candidateRule: index, referenceRule: null, badges: [] });
  }
  for (const index of report.unmatched_reference_rules) {
    rows.push({ candidateRule: null, referenceRule: index, badges: [] });
  }
  return {
    rows,
    fourColumnTotals: FOUR_COLUMNS.map((kind) => ({
      kind,
      label: BADGE_LABELS[kind],
      count: report.totals[kind],
    })),
    missingTotal: report.totals.missing_condition,
    similarity: report.similarity,
    similarityApprox: report.similarity_approx,
  };
}

export function formatCondition(cond: ConditionDoc | null): string {
  if (!cond) {
    return '(none)';
  }
  const value = typeof cond.value === 'string' ? cond.value : String(cond.value);
  return `${cond.variable} ${cond.operator} ${value}`;
}

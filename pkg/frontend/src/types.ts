/** Wire types mirroring the review service's JSON exactly. */

export type OperatorSymbol = '>=' | '>' | '<=' | '<' | '==' | '!=';

export type LiteralValue = number | boolean | string;

export interface ConditionDoc {
  variable: string;
  operator: OperatorSymbol;
  value: LiteralValue;
}

export interface RuleDoc {
  index: number;
  conditions: ConditionDoc[];
  outcome: string;
}

export interface OutcomeDoc {
  name: string;
  levels: string[];
  default: string;
}

export interface ProvenanceDoc {
  kind: 'expert' | 'generated' | 'edited';
  run?: unknown;
  parent?: string;
  editor?: string;
  timestamp?: string;
}

export interface RuleSetDoc {
  id: string;
  name: string;
  domain: string;
  objective: string;
  outcome: OutcomeDoc;
  rules: RuleDoc[];
  provenance: ProvenanceDoc;
  children?: string[];
}

export interface RuleSetSummary {
  id: string;
  name: string;
  provenance: ProvenanceDoc;
  rule_count: number;
  condition_count: number;
  outcome_levels: string[];
}

export type ClassificationKind =
  | 'match'
  | 'wrong_threshold'
  | 'wrong_operator'
  | 'extra_condition'
  | 'missing_condition';

export interface ClassificationDoc {
  kind: ClassificationKind;
  candidate?: ConditionDoc;
  reference?: ConditionDoc;
}

export interface AlignedPairDoc {
  candidate_rule: number;
  reference_rule: number;
  classifications: ClassificationDoc[];
}

export interface ComparisonReportDoc {
  candidate: string;
  reference: string;
  aligned_pairs: AlignedPairDoc[];
  unmatched_candidate_rules: number[];
  unmatched_reference_rules: number[];
  totals: Record<ClassificationKind, number>;
  similarity: string;
  similarity_approx: number;
}

export interface RunSummary {
  id: string;
  run_index: number;
  strategy: string;
  model: string | null;
  ruleset_ids: string[];
  error: { status: number; body: string } | null;
}

export interface DiagnosticDoc {
  code: string;
  message: string;
  severity: string;
  rule?: number;
  condition?: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  diagnostics?: DiagnosticDoc[];
}

/** Review actions accepted by POST /api/rulesets/{id}/review. */
export interface ConditionEdit {
  condition: number;
  variable?: string;
  operator?: OperatorSymbol;
  value?: LiteralValue;
}

export type ReviewAction =
  | { action: 'accept'; rule: number }
  | { action: 'edit'; rule: number; condition_edits?: ConditionEdit[]; outcome?: string; conditions?: ConditionDoc[] }
  | { action: 'delete'; rule: number }
  | { action: 'add'; conditions: ConditionDoc[]; outcome: string; position?: number };

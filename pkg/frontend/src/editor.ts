/** Edit state for one rule set under review.
 *
 * Edits are structural (operator dropdowns, typed thresholds, outcome
 * selects, row add/delete), never free-text code. The fetched document is
 * never mutated: the editor keeps a working copy plus a dirty map, and
 * submission serializes the whole session into review actions for the
 * service to validate and apply.
 */

import type {
  ConditionDoc,
  DiagnosticDoc,
  LiteralValue,
  OperatorSymbol,
  ReviewAction,
  RuleDoc,
  RuleSetDoc,
} from './types.js';

interface WorkingRule {
  sourceIndex: number | null; // null for rules added in this session
  conditions: ConditionDoc[];
  outcome: string;
  deleted: boolean;
  dirty: boolean;
}

function cloneCondition(c: ConditionDoc): ConditionDoc {
  return { variable: c.variable, operator: c.operator, value: c.value };
}

function cloneRule(rule: RuleDoc): WorkingRule {
  return {
    sourceIndex: rule.index,
    conditions: rule.conditions.map(cloneCondition),
    outcome: rule.outcome,
    deleted: false,
    dirty: false,
  };
}

export class RuleSetEditor {
  readonly source: RuleSetDoc;
  private rules: WorkingRule[];

  constructor(source: RuleSetDoc) {
    this.source = source;
    this.rules = source.rules.map(cloneRule);
  }

  /** Current working rules (deleted rows excluded), for rendering. */
  view(): Array<{ position: number; conditions: ConditionDoc[]; outcome: string; dirty: boolean; added: boolean }> {
    return this.rules
      .filter((r) => !r.deleted)
      .map((r, position) => ({
        position,
        conditions: r.conditions.map(cloneCondition),
        outcome: r.outcome,
        dirty: r.dirty,
        added: r.sourceIndex === null,
      }));
  }

  get isDirty(): boolean {
    return this.rules.some((r) => r.dirty || r.deleted || r.sourceIndex === null);
  }

  private sourceRule(index: number): WorkingRule {
    const rule = this.rules.find((r) => r.sourceIndex === index && !r.deleted);
    if (!rule) {
      throw new Error(`no editable rule with source index ${index}`);
    }
    return rule;
  }

  setThreshold(ruleIndex: number, conditionIndex: number, value: LiteralValue): void {
    const rule = this.sourceRule(ruleIndex);
    const cond = rule.conditions[conditionIndex];
    if (!cond) {
      throw new Error(`rule ${ruleIndex} has no condition ${conditionIndex}`);
    }
    cond.value = value;
    rule.dirty = true;
  }

  setOperator(ruleIndex: number, conditionIndex: number, operator: OperatorSymbol): void {
    const rule = this.sourceRule(ruleIndex);
    const cond = rule.conditions[conditionIndex];
    if (!cond) {
      throw new Error(`rule ${ruleIndex} has no condition ${conditionIndex}`);
    }
    cond.operator = operator;
    rule.dirty = true;
  }

  setOutcome(ruleIndex: number, outcome: string): void {
    const rule = this.sourceRule(ruleIndex);
    rule.outcome = outcome;
    rule.dirty = true;
  }

  deleteRule(ruleIndex: number): void {
    this.sourceRule(ruleIndex).deleted = true;
  }

  addRule(conditions: ConditionDoc[], outcome: string): void {
    this.rules.push({
      sourceIndex: null,
      conditions: conditions.map(cloneCondition),
      outcome,
      deleted: false,
      dirty: true,
    });
  }

  /** Serialize the session into review actions; an untouched editor yields
   * an empty action list (accept-all). */
  toActions(): ReviewAction[] {
    const actions: ReviewAction[] = [];
    for (const rule of this.rules) {
      if (rule.sourceIndex === null) {
        continue;
      }
      if (rule.deleted) {
        actions.push({ action: 'delete', rule: rule.sourceIndex });
      } else if (rule.dirty) {
        actions.push({
          action: 'edit',
          rule: rule.sourceIndex,
          conditions: rule.conditions.map(cloneCondition),
          outcome: rule.outcome,
        });
      }
    }
    for (const rule of this.rules) {
      if (rule.sourceIndex === null && !rule.deleted) {
        actions.push({ action: 'add', conditions: rule.conditions.map(cloneCondition), outcome: rule.outcome });
      }
    }
    return actions;
  }

  /** Attach service diagnostics to the rule/condition they point at, for
   * inline rendering next to the offending row. */
  mapDiagnostics(diagnostics: DiagnosticDoc[]): Map<string, DiagnosticDoc[]> {
    const out = new Map<string, DiagnosticDoc[]>();
    for (const diag of diagnostics) {
      const key = diag.rule === undefined ? 'ruleset' : diag.condition === undefined
        ? `rule:${diag.rule}`
        : `rule:${diag.rule}:cond:${diag.condition}`;
      const bucket = out.get(key) ?? [];
      bucket.push(diag);
      out.set(key, bucket);
    }
    return out;
  }
}

/** The approval affordance is available only once a human has reviewed the
 * rule set: generated provenance keeps it disabled. */
export function apiGenerationEnabled(doc: RuleSetDoc): boolean {
  return doc.provenance.kind === 'expert' || doc.provenance.kind === 'edited';
}

export function apiGenerationHint(doc: RuleSetDoc): string {
  if (!apiGenerationEnabled(doc)) {
    return 'Review this rule set (accept or edit) before generating API artifacts.';
  }
  return `ruleflex gen-api --ruleset ${doc.id} --out ./api`;
}

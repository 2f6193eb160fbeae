/** Browser entry point: hash-routed views over the review API.
 *
 * Routes:
 *   #/runs                     generation runs and stored rule sets (default)
 *   #/rulesets/<id>            editable rule set detail + review submission
 *   #/diff/<cand>/<ref>        side-by-side classified diff
 */

import { ApiError, ReviewApiClient } from './api.js';
import { buildDiffView, formatCondition } from './diff.js';
import { RuleSetEditor, apiGenerationEnabled, apiGenerationHint } from './editor.js';
import type { DiagnosticDoc, OperatorSymbol, RuleSetDoc, RuleSetSummary } from './types.js';

const OPERATORS: OperatorSymbol[] = ['>=', '>', '<=', '<', '==', '!='];

const client = new ReviewApiClient('');

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Array<Node | string> = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') {
      node.className = value;
    } else {
      node.setAttribute(key, value);
    }
  }
  node.append(...children);
  return node;
}

function root(): HTMLElement {
  const node = document.getElementById('app');
  if (!node) {
    throw new Error('missing #app container');
  }
  return node;
}

function banner(kind: 'error' | 'info', text: string): HTMLElement {
  return el('div', { class: `banner banner-${kind}` }, [text]);
}

function errorBanner(err: unknown): HTMLElement {
  if (err instanceof ApiError) {
    return banner('error', `${err.body.code}: ${err.body.message}`);
  }
  return banner('error', String(err));
}

function provenanceBadge(kind: string): HTMLElement {
  return el('span', { class: `prov prov-${kind}` }, [kind]);
}

function link(href: string, text: string): HTMLElement {
  return el('a', { href }, [text]);
}

// ---------------------------------------------------------------- runs view

async function renderRuns(): Promise<void> {
  const container = root();
  container.replaceChildren(el('p', {}, ['Loading…']));
  try {
    const [runs, rulesets] = await Promise.all([client.listRuns(), client.listRulesets()]);
    const runRows = runs.map((run) =>
      el('tr', {}, [
        el('td', {}, [String(run.run_index)]),
        el('td', {}, [run.strategy]),
        el('td', {}, [run.model ?? '']),
        el('td', {}, run.error
          ? [el('span', { class: 'prov prov-generated' }, [`error ${run.error.status}`])]
          : run.ruleset_ids.map((id) => el('span', { class: 'chip' }, [link(`#/rulesets/${id}`, id.slice(0, 10))]))),
      ]),
    );
    const rulesetRows = rulesets.map((rs: RuleSetSummary) =>
      el('tr', {}, [
        el('td', {}, [link(`#/rulesets/${rs.id}`, rs.name)]),
        el('td', {}, [provenanceBadge(rs.provenance.kind)]),
        el('td', {}, [String(rs.rule_count)]),
        el('td', {}, [String(rs.condition_count)]),
        el('td', {}, [diffPicker(rs.id, rulesets)]),
      ]),
    );
    container.replaceChildren(
      el('h2', {}, ['Generation runs']),
      runs.length
        ? el('table', {}, [
            el('thead', {}, [el('tr', {}, [el('th', {}, ['#']), el('th', {}, ['Strategy']), el('th', {}, ['Model']), el('th', {}, ['Rule sets'])])]),
            el('tbody', {}, runRows),
          ])
        : el('p', {}, ['No runs captured yet.']),
      el('h2', {}, ['Rule sets']),
      rulesets.length
        ? el('table', {}, [
            el('thead', {}, [el('tr', {}, [el('th', {}, ['Name']), el('th', {}, ['Provenance']), el('th', {}, ['Rules']), el('th', {}, ['Conditions']), el('th', {}, ['Compare against'])])]),
            el('tbody', {}, rulesetRows),
          ])
        : el('p', {}, ['No rule sets stored yet.']),
    );
  } catch (err) {
    container.replaceChildren(errorBanner(err));
  }
}

function diffPicker(candidateId: string, rulesets: RuleSetSummary[]): HTMLElement {
  const select = el('select', {}) as HTMLSelectElement;
  select.append(el('option', { value: '' }, ['choose reference…']));
  for (const rs of rulesets) {
    if (rs.id !== candidateId) {
      select.append(el('option', { value: rs.id }, [`${rs.name} (${rs.provenance.kind})`]));
    }
  }
  select.addEventListener('change', () => {
    if (select.value) {
      window.location.hash = `#/diff/${candidateId}/${select.value}`;
    }
  });
  return select;
}

// ------------------------------------------------------------- detail view

async function renderRuleset(id: string): Promise<void> {
  const container = root();
  container.replaceChildren(el('p', {}, ['Loading…']));
  let doc: RuleSetDoc;
  try {
    doc = await client.getRuleset(id);
  } catch (err) {
    container.replaceChildren(errorBanner(err));
    return;
  }
  const editor = new RuleSetEditor(doc);
  const diagnosticsHost = el('div', {});
  const table = el('div', {});

  const redraw = () => {
    table.replaceChildren(editorTable(doc, editor, redraw));
  };

  const reviewerInput = el('input', { type: 'text', value: 'sme', 'aria-label': 'reviewer' }) as HTMLInputElement;
  const submit = el('button', {}, ['Submit review']) as HTMLButtonElement;
  submit.addEventListener('click', async () => {
    diagnosticsHost.replaceChildren();
    try {
      const result = await client.submitReview(doc.id, editor.toActions(), reviewerInput.value || 'sme');
      window.location.hash = `#/rulesets/${result.new_id}`;
    } catch (err) {
      if (err instanceof ApiError && err.body.diagnostics) {
        renderDiagnostics(diagnosticsHost, editor, err.body.diagnostics);
      } else {
        diagnosticsHost.replaceChildren(errorBanner(err));
      }
    }
  });

  const apiButton = el('button', {}, ['Generate API']) as HTMLButtonElement;
  apiButton.disabled = !apiGenerationEnabled(doc);
  apiButton.title = apiGenerationHint(doc);
  const apiHint = el('pre', { class: 'hint hidden' }, []);
  apiButton.addEventListener('click', () => {
    apiHint.textContent = apiGenerationHint(doc);
    apiHint.classList.remove('hidden');
  });

  const forkChildren = doc.children ?? [];
  container.replaceChildren(
    el('h2', {}, [doc.name, ' ', provenanceBadge(doc.provenance.kind)]),
    el('p', { class: 'meta' }, [`${doc.domain} | ${doc.objective}`]),
    el('p', { class: 'meta' }, [
      `outcome ${doc.outcome.name} in [${doc.outcome.levels.join(', ')}] default ${doc.outcome.default}`,
    ]),
    ...(doc.provenance.kind === 'edited' && doc.provenance.parent
      ? [el('p', { class: 'meta' }, ['edited from ', link(`#/rulesets/${doc.provenance.parent}`, doc.provenance.parent.slice(0, 12))])]
      : []),
    ...(forkChildren.length > 1
      ? [banner('info', `This rule set has ${forkChildren.length} sibling edits to reconcile: ${forkChildren.map((c) => c.slice(0, 10)).join(', ')}`)]
      : []),
    table,
    diagnosticsHost,
    el('div', { class: 'actions' }, [
      el('label', {}, ['Reviewer: ', reviewerInput]),
      submit,
      apiButton,
    ]),
    apiHint,
  );
  redraw();
}

function editorTable(doc: RuleSetDoc, editor: RuleSetEditor, redraw: () => void): HTMLElement {
  const rows: HTMLElement[] = [];
  for (const rule of doc.rules) {
    const working = editor.view().find((r, i) => !r.added && i === rule.index);
    if (!working) {
      rows.push(el('tr', { class: 'deleted' }, [
        el('td', {}, [String(rule.index)]),
        el('td', { colspan: '3' }, ['(deleted in this review)']),
      ]));
      continue;
    }
    const conditionCells: Array<Node | string> = [];
    rule.conditions.forEach((cond, ci) => {
      const opSelect = el('select', {}) as HTMLSelectElement;
      for (const op of OPERATORS) {
        const option = el('option', { value: op }, [op]) as HTMLOptionElement;
        option.selected = op === working.conditions[ci]?.operator;
        opSelect.append(option);
      }
      opSelect.addEventListener('change', () => {
        editor.setOperator(rule.index, ci, opSelect.value as OperatorSymbol);
      });
      const current = working.conditions[ci];
      const valueInput = el('input', {
        type: typeof cond.value === 'number' ? 'number' : 'text',
        value: String(current ? current.value : cond.value),
        step: 'any',
      }) as HTMLInputElement;
      valueInput.addEventListener('change', () => {
        const raw = valueInput.value;
        let value: string | number | boolean = raw;
        if (typeof cond.value === 'number' && raw !== '' && !Number.isNaN(Number(raw))) {
          value = Number(raw);
        } else if (typeof cond.value === 'boolean') {
          value = raw === 'true';
        }
        editor.setThreshold(rule.index, ci, value);
      });
      conditionCells.push(el('span', { class: 'cond' }, [cond.variable, ' ', opSelect, ' ', valueInput]));
    });
    if (!rule.conditions.length) {
      conditionCells.push(el('em', {}, ['default rule']));
    }
    const outcomeSelect = el('select', {}) as HTMLSelectElement;
    for (const level of doc.outcome.levels) {
      const option = el('option', { value: level }, [level]) as HTMLOptionElement;
      option.selected = level === working.outcome;
      outcomeSelect.append(option);
    }
    outcomeSelect.addEventListener('change', () => editor.setOutcome(rule.index, outcomeSelect.value));
    const deleteButton = el('button', { class: 'small' }, ['delete']) as HTMLButtonElement;
    deleteButton.addEventListener('click', () => {
      editor.deleteRule(rule.index);
      redraw();
    });
    rows.push(el('tr', {}, [
      el('td', {}, [String(rule.index)]),
      el('td', {}, conditionCells),
      el('td', {}, [outcomeSelect]),
      el('td', {}, [deleteButton]),
    ]));
  }
  return el('table', {}, [
    el('thead', {}, [el('tr', {}, [el('th', {}, ['#']), el('th', {}, ['Conditions']), el('th', {}, ['Outcome']), el('th', {}, [''])])]),
    el('tbody', {}, rows),
  ]);
}

function renderDiagnostics(host: HTMLElement, editor: RuleSetEditor, diagnostics: DiagnosticDoc[]): void {
  const mapped = editor.mapDiagnostics(diagnostics);
  const items: HTMLElement[] = [];
  for (const [where, diags] of mapped) {
    for (const diag of diags) {
      items.push(el('li', {}, [el('code', {}, [diag.code]), ` at ${where}: ${diag.message}`]));
    }
  }
  host.replaceChildren(banner('error', 'The review was rejected; fix the findings below and resubmit.'), el('ul', {}, items));
}

// --------------------------------------------------------------- diff view

async function renderDiff(candidateId: string, referenceId: string): Promise<void> {
  const container = root();
  container.replaceChildren(el('p', {}, ['Loading…']));
  try {
    const report = await client.compare(candidateId, referenceId);
    const view = buildDiffView(report);
    const rows = view.rows.map((row) =>
      el('tr', {}, [
        el('td', {}, [row.candidateRule === null ? '(unmatched)' : `rule ${row.candidateRule}`]),
        el('td', {}, row.badges.length
          ? row.badges.flatMap((b) => [
              el('div', { class: `badge badge-${b.kind}` }, [
                el('strong', {}, [b.label]),
                ` ${formatCondition(b.candidate)} vs ${formatCondition(b.reference)}`,
              ]),
            ])
          : ['no aligned counterpart']),
        el('td', {}, [row.referenceRule === null ? '(unmatched)' : `rule ${row.referenceRule}`]),
      ]),
    );
    container.replaceChildren(
      el('h2', {}, ['Classified diff']),
      el('p', { class: 'meta' }, [
        'candidate ', link(`#/rulesets/${report.candidate}`, report.candidate.slice(0, 12)),
        ' vs reference ', link(`#/rulesets/${report.reference}`, report.reference.slice(0, 12)),
      ]),
      el('table', { class: 'totals' }, [
        el('thead', {}, [el('tr', {}, view.fourColumnTotals.map((t) => el('th', {}, [t.label])))]),
        el('tbody', {}, [el('tr', {}, view.fourColumnTotals.map((t) => el('td', {}, [String(t.count)])))]),
      ]),
      el('p', {}, [`Missing conditions: ${view.missingTotal}`]),
      el('p', {}, [`Similarity: ${view.similarity} (${view.similarityApprox})`]),
      el('table', {}, [
        el('thead', {}, [el('tr', {}, [el('th', {}, ['Candidate']), el('th', {}, ['Classifications']), el('th', {}, ['Reference'])])]),
        el('tbody', {}, rows),
      ]),
    );
  } catch (err) {
    container.replaceChildren(errorBanner(err));
  }
}

// ------------------------------------------------------------------ router

export function route(): void {
  const hash = window.location.hash || '#/runs';
  const parts = hash.replace(/^#\//, '').split('/');
  if (parts[0] === 'rulesets' && parts[1]) {
    void renderRuleset(parts[1]);
  } else if (parts[0] === 'diff' && parts[1] && parts[2]) {
    void renderDiff(parts[1], parts[2]);
  } else {
    void renderRuns();
  }
}

if (typeof window !== 'undefined' && typeof document !== 'undefined' && document.getElementById('app')) {
  window.addEventListener('hashchange', route);
  route();
}

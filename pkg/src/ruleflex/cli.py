"""Command-line surface.

Exit codes are a stable scripting contract: 0 success, 1 domain error
(validation, comparison, provider failures), 2 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import analyze, apigen, dsl
from .codeparse import parse_response
from .errors import RuleflexError, ValidationFailed
from .gateway import (
    CHAIN_OF_THOUGHT,
    FEW_SHOT,
    IMITATION,
    INSTRUCTION_FOLLOWING,
    HttpChatProvider,
    ProviderConfig,
    ReplayProvider,
    generate,
)
from .httpapi import make_eval_server, make_review_server, scoring_from_workspace
from .model import Provenance, RuleSet
from .presets import expert_rules_path
from .workspace import Workspace

STRATEGY_ALIASES = {
    "instruction": INSTRUCTION_FOLLOWING,
    "imitation": IMITATION,
    "cot": CHAIN_OF_THOUGHT,
    "few-shot": FEW_SHOT,
}


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group()
@click.option(
    "--workspace", "-w", "workspace_path", default="./workspace", envvar="RULEFLEX_WORKSPACE",
    show_default=True, help="Workspace directory (created on first use).",
)
@click.pass_context
def main(ctx: click.Context, workspace_path: str):
    """Rule-engineering workbench: generate, parse, compare, review, deploy."""
    ctx.obj = workspace_path


def _workspace(ctx: click.Context) -> Workspace:
    return Workspace(ctx.obj)


@main.command()
@click.option("--domain", required=True)
@click.option("--objective", required=True)
@click.option("--strategy", type=click.Choice(sorted(STRATEGY_ALIASES)), default="few-shot", show_default=True)
@click.option("--model", default=None, help="Provider model name (defaults to workspace config).")
@click.option("--runs", type=int, default=1, show_default=True)
@click.option("--temperature", type=float, default=None)
@click.option("--max-tokens", type=int, default=None)
@click.option("--replay", is_flag=True, help="Serve responses from recorded fixtures instead of a live provider.")
@click.option("--fixtures-dir", type=click.Path(), default=None, help="Fixture directory for --replay (defaults to <workspace>/fixtures).")
@click.pass_context
def generate_cmd(ctx, domain, objective, strategy, model, runs, temperature, max_tokens, replay, fixtures_dir):
    """Query the configured model and capture generation runs."""
    ws = _workspace(ctx)
    base = ProviderConfig.from_json(ws.config.get("provider", {}))
    config = ProviderConfig(
        endpoint=base.endpoint,
        model=model or base.model,
        temperature=base.temperature if temperature is None else temperature,
        max_response_tokens=base.max_response_tokens if max_tokens is None else max_tokens,
        credential_env=base.credential_env,
    )
    provider = ReplayProvider(fixtures_dir or ws.fixtures_dir) if replay else HttpChatProvider()
    try:
        results = generate(provider, config, STRATEGY_ALIASES[strategy], domain, objective, runs, ws)
    except RuleflexError as exc:
        _fail(str(exc))
    run_ids = ws.list_ids("run")
    stored = {rid: ws.load(rid).payload for rid in run_ids}
    out = []
    for run in results:
        match = [rid for rid, payload in stored.items()
                 if payload["run_index"] == run.run_index and payload["prompt_sha256"] == run.prompt_sha256
                 and payload["config"] == run.config]
        out.append({
            "run_index": run.run_index,
            "run_id": match[-1] if match else None,
            "ruleset_ids": run.ruleset_ids,
            "error": run.error,
            "diagnostics": run.diagnostics,
        })
    _echo_json(out)


main.add_command(generate_cmd, name="generate")


def _load_rulesets_for(ws: Workspace, ref: str) -> list[RuleSet]:
    """A ruleset id, a run id (its parsed rule sets), or a file path."""
    path = expert_rules_path() if ref == "bundled:expert" else Path(ref)
    if path.exists():
        text = path.read_text(encoding="utf-8")
        stripped = "\n".join(l for l in text.split("\n") if not l.lstrip().startswith("#")).lstrip()
        if stripped.startswith("ruleset"):
            return dsl.parse_dsl(text)
        parsed = parse_response(text, ws.registry, outcome_spec=None, provenance=Provenance.generated())
        for diag in parsed.diagnostics:
            click.echo(f"warning: {diag.code}: {diag.message}", err=True)
        return parsed.rulesets
    entry = ws.load(ref)
    if entry.kind == "ruleset":
        return [RuleSet.from_wire(entry.payload)]
    if entry.kind == "run":
        return [ws.load_ruleset(rid) for rid in entry.payload.get("parse", {}).get("ruleset_ids", [])]
    _fail(f"{ref} is neither a rule set, a run, nor a readable file")


@main.command("parse")
@click.argument("source")
@click.pass_context
def parse_cmd(ctx, source):
    """Parse a DSL file, a code file, or re-parse a stored run's response."""
    ws = _workspace(ctx)
    try:
        path = expert_rules_path() if source == "bundled:expert" else Path(source)
        if not path.exists():
            entry = ws.load(source)
            if entry.kind != "run":
                _fail(f"{source} is neither a run id nor a readable file")
            text = entry.payload.get("response")
            if text is None:
                _fail(f"run {source} recorded no response (error run)")
            parsed = parse_response(
                text, ws.registry, outcome_spec=ws.outcome_spec,
                domain=entry.payload.get("domain", ""),
                objective=entry.payload.get("objective", ""),
                provenance=Provenance.generated({
                    "prompt_sha256": entry.payload["prompt_sha256"],
                    "run_index": entry.payload["run_index"],
                    "model": entry.payload["config"].get("model"),
                }),
            )
            for diag in parsed.diagnostics:
                click.echo(f"warning: {diag.code}: {diag.message}", err=True)
            rulesets = parsed.rulesets
        else:
            rulesets = _load_rulesets_for(ws, source)
        ws.save_registry()
        ids = [ws.store("ruleset", rs.to_wire()) for rs in rulesets]
    except RuleflexError as exc:
        _fail(str(exc))
    _echo_json([{"id": i, "name": rs.name, "rules": len(rs.rules)} for i, rs in zip(ids, rulesets)])


@main.command("metrics")
@click.argument("run_ids", nargs=-1, required=True)
@click.pass_context
def metrics_cmd(ctx, run_ids):
    """Interpretability metrics for each run (rule sets, conditions)."""
    ws = _workspace(ctx)
    try:
        reports = []
        for rid in run_ids:
            rulesets = _load_rulesets_for(ws, rid)
            reports.append(analyze.compute_metrics(rulesets).to_json())
    except RuleflexError as exc:
        _fail(str(exc))
    _echo_json(reports if len(reports) > 1 else reports[0])


@main.command("compare")
@click.option("--candidate", required=True, help="Rule set id, run id, or file.")
@click.option("--reference", required=True, help="Rule set id, run id, or file.")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="json", show_default=True)
@click.pass_context
def compare_cmd(ctx, candidate, reference, fmt):
    """Classified diff between candidate and reference rule sets."""
    ws = _workspace(ctx)
    scoring = scoring_from_workspace(ws)
    try:
        cands = _load_rulesets_for(ws, candidate)
        refs = _load_rulesets_for(ws, reference)
        if len(cands) == 1 and len(refs) == 1:
            report = analyze.compare(cands[0], refs[0], scoring)
            payload = report.to_json()
            totals = report.four_column_totals()
            missing = report.totals[analyze.MISSING_CONDITION]
            similarity = float(report.similarity)
        else:
            corpus = analyze.compare_corpus(cands, refs, scoring)
            payload = corpus.to_json()
            payload["totals"] = payload.pop("summed_totals")
            totals = {k: corpus.summed_totals[k] for k in
                      (analyze.MATCH, analyze.WRONG_THRESHOLD, analyze.EXTRA_CONDITION, analyze.WRONG_OPERATOR)}
            missing = corpus.summed_totals[analyze.MISSING_CONDITION]
            similarity = None
        payload = {"id": ws.store("comparison", payload), **payload}
    except RuleflexError as exc:
        _fail(str(exc))
    if fmt == "json":
        _echo_json(payload)
        return
    headers = ["Match", "Wrong Threshold", "Extra Condition", "Wrong Operator"]
    values = [totals[analyze.MATCH], totals[analyze.WRONG_THRESHOLD],
              totals[analyze.EXTRA_CONDITION], totals[analyze.WRONG_OPERATOR]]
    widths = [max(len(h), len(str(v))) for h, v in zip(headers, values)]
    click.echo("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    click.echo("  ".join(str(v).ljust(w) for v, w in zip(values, widths)))
    click.echo(f"Missing conditions: {missing}")
    if similarity is not None:
        click.echo(f"Similarity: {similarity}")


@main.command("consistency")
@click.argument("run_ids", nargs=-1, required=True)
@click.pass_context
def consistency_cmd(ctx, run_ids):
    """Cross-run stability of the interpretability metrics."""
    ws = _workspace(ctx)
    try:
        reports = [analyze.compute_metrics(_load_rulesets_for(ws, rid)) for rid in run_ids]
        out = analyze.consistency(reports).to_json()
    except RuleflexError as exc:
        _fail(str(exc))
    _echo_json(out)


@main.command("eval")
@click.option("--ruleset", "ruleset_id", required=True)
@click.option("--record", "record_path", required=True, type=click.Path(exists=True))
@click.pass_context
def eval_cmd(ctx, ruleset_id, record_path):
    """Evaluate one record against a stored rule set and print the trace."""
    ws = _workspace(ctx)
    from .evaluate import evaluate

    try:
        rs = ws.load_ruleset(ruleset_id)
        record = json.loads(Path(record_path).read_text(encoding="utf-8"))
        trace = evaluate(rs, record)
    except (RuleflexError, json.JSONDecodeError) as exc:
        _fail(str(exc))
    _echo_json(trace.to_json())


@main.command("gen-api")
@click.option("--ruleset", "ruleset_id", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--epsilon", type=float, default=None, help="Boundary offset (defaults to workspace config).")
@click.pass_context
def gen_api_cmd(ctx, ruleset_id, out_dir, epsilon):
    """Write descriptor.json and tests.json for a reviewed rule set."""
    ws = _workspace(ctx)
    try:
        rs = ws.load_ruleset(ruleset_id)
        eps = epsilon if epsilon is not None else float(ws.config.get("epsilon", 0.1))
        descriptor = apigen.generate_descriptor(rs, ws.registry)
        suite = apigen.generate_test_suite(rs, ws.registry, eps)
        paths = apigen.write_artifacts(out_dir, descriptor, suite)
    except RuleflexError as exc:
        _fail(str(exc))
    click.echo(f"wrote {paths[0]} and {paths[1]} ({len(suite.cases)} cases)")


@main.command("serve")
@click.option("--ruleset", "ruleset_id", required=True)
@click.option("--port", type=int, required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.pass_context
def serve_cmd(ctx, ruleset_id, port, host):
    """Serve POST /evaluate and GET /health for one rule set."""
    ws = _workspace(ctx)
    try:
        rs = ws.load_ruleset(ruleset_id)
    except RuleflexError as exc:
        _fail(str(exc))
    server = make_eval_server(rs, host, port)
    click.echo(f"evaluation service for {ruleset_id[:12]}… on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass


@main.command("review")
@click.option("--port", type=int, required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.pass_context
def review_cmd(ctx, port, host, ui_dir):
    """Serve the review HTTP API (and the UI when --ui-dir is given)."""
    ws = _workspace(ctx)
    server = make_review_server(ws, ui_dir, host, port)
    click.echo(f"review service on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()

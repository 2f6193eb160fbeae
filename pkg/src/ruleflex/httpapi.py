"""HTTP surfaces: the rule-set evaluation service and the review API.

Both run on the standard library's threading HTTP server; errors travel as
JSON {code, message, diagnostics?} with 4xx statuses. The review server
also serves the static UI directory when one is supplied.
"""

from __future__ import annotations

import json
import mimetypes
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .analyze import compare
from .errors import (
    CredentialMissing,
    FixtureMissing,
    MissingVariable,
    NotFound,
    RuleflexError,
    TypeMismatch,
    UnknownStrategy,
    ValidationFailed,
)
from .evaluate import evaluate
from .gateway import HttpChatProvider, ProviderConfig, ReplayProvider, generate
from .model import RuleSet
from .workspace import Workspace


class _JsonHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # silence per-request stderr noise
        pass

    def send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def send_error_json(self, status: int, code: str, message: str, diagnostics=None) -> None:
        payload = {"code": code, "message": message}
        if diagnostics is not None:
            payload["diagnostics"] = diagnostics
        self.send_json(status, payload)

    def read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        return json.loads(raw.decode("utf-8"))


class EvalHandler(_JsonHandler):
    ruleset: RuleSet = None  # set on the subclass created by make_eval_server

    def do_GET(self):
        if urlparse(self.path).path == "/health":
            self.send_json(200, {"status": "ok", "ruleset": self.ruleset.content_id()})
        else:
            self.send_error_json(404, "NotFound", f"no route {self.path}")

    def do_POST(self):
        if urlparse(self.path).path != "/evaluate":
            self.send_error_json(404, "NotFound", f"no route {self.path}")
            return
        try:
            record = self.read_body()
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            self.send_error_json(400, "BadRequest", f"request body is not valid JSON: {exc}")
            return
        if not isinstance(record, dict):
            self.send_error_json(400, "BadRequest", "record must be a JSON object")
            return
        try:
            trace = evaluate(self.ruleset, record)
        except MissingVariable as exc:
            self.send_error_json(400, "MissingVariable", str(exc))
            return
        except TypeMismatch as exc:
            self.send_error_json(400, "TypeMismatch", str(exc))
            return
        self.send_json(200, {"outcome": trace.outcome, "matched_rule": trace.matched_rule_index})


def make_eval_server(ruleset: RuleSet, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundEvalHandler", (EvalHandler,), {"ruleset": ruleset})
    return ThreadingHTTPServer((host, port), handler)


class ReviewHandler(_JsonHandler):
    workspace: Workspace = None
    ui_dir: Path | None = None

    # -- routing ---------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        parsed = urlparse(self.path)
        path = parsed.path
        try:
            if path == "/api/rulesets":
                return self.list_rulesets()
            if path.startswith("/api/rulesets/"):
                return self.get_ruleset(path.removeprefix("/api/rulesets/"))
            if path == "/api/compare":
                return self.get_compare(parse_qs(parsed.query))
            if path == "/api/runs":
                return self.list_runs()
            if path.startswith("/api/runs/"):
                return self.get_run(path.removeprefix("/api/runs/"))
            if path.startswith("/api/"):
                return self.send_error_json(404, "NotFound", f"no route {path}")
            return self.serve_static(path)
        except NotFound as exc:
            self.send_error_json(404, "NotFound", str(exc))
        except RuleflexError as exc:
            self.send_error_json(400, type(exc).__name__, str(exc))

    def do_POST(self):
        path = urlparse(self.path).path
        try:
            body = self.read_body()
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            self.send_error_json(400, "BadRequest", f"request body is not valid JSON: {exc}")
            return
        try:
            if path == "/api/generate":
                return self.post_generate(body)
            m = path.removeprefix("/api/rulesets/")
            if path.startswith("/api/rulesets/") and m.endswith("/review"):
                return self.post_review(m.removesuffix("/review"), body)
            self.send_error_json(404, "NotFound", f"no route {path}")
        except ValidationFailed as exc:
            self.send_error_json(422, "ValidationFailed", str(exc), [d.to_json() for d in exc.diagnostics])
        except NotFound as exc:
            self.send_error_json(404, "NotFound", str(exc))
        except (UnknownStrategy, FixtureMissing, CredentialMissing) as exc:
            self.send_error_json(400, type(exc).__name__, str(exc))
        except RuleflexError as exc:
            self.send_error_json(400, type(exc).__name__, str(exc))

    # -- endpoints ---------------------------------------------------------

    def list_rulesets(self):
        out = []
        for entry in self.workspace.entries("ruleset"):
            rs = RuleSet.from_wire(entry.payload)
            out.append({
                "id": entry.id,
                "name": rs.name,
                "provenance": rs.provenance.to_json(),
                "rule_count": len(rs.rules),
                "condition_count": rs.condition_count(),
                "outcome_levels": list(rs.outcome.levels),
            })
        self.send_json(200, out)

    def get_ruleset(self, ruleset_id: str):
        entry = self.workspace.load(ruleset_id)
        if entry.kind != "ruleset":
            raise NotFound(ruleset_id)
        doc = dict(entry.payload)
        doc["children"] = self.workspace.children_of(entry.id)
        self.send_json(200, doc)

    def get_compare(self, query: dict):
        candidate = query.get("candidate", [None])[0]
        reference = query.get("reference", [None])[0]
        if not candidate or not reference:
            return self.send_error_json(400, "BadRequest", "candidate and reference query parameters are required")
        report = compare(
            self.workspace.load_ruleset(candidate),
            self.workspace.load_ruleset(reference),
            scoring_from_workspace(self.workspace),
        )
        self.send_json(200, report.to_json())

    def list_runs(self):
        out = []
        for entry in self.workspace.entries("run"):
            payload = entry.payload
            out.append({
                "id": entry.id,
                "run_index": payload["run_index"],
                "strategy": payload["strategy"],
                "model": payload["config"].get("model"),
                "ruleset_ids": payload.get("parse", {}).get("ruleset_ids", []),
                "error": payload.get("error"),
            })
        self.send_json(200, out)

    def get_run(self, run_id: str):
        entry = self.workspace.load(run_id)
        if entry.kind != "run":
            raise NotFound(run_id)
        self.send_json(200, entry.payload)

    def post_generate(self, body: dict):
        for key in ("domain", "objective", "strategy"):
            if not body.get(key):
                return self.send_error_json(400, "BadRequest", f"{key!r} is required")
        runs = int(body.get("runs", 1))
        config = ProviderConfig.from_json(self.workspace.config.get("provider", {}))
        replay = body.get("replay")
        if replay is None:
            replay = not os.environ.get(config.credential_env)
        provider = ReplayProvider(self.workspace.fixtures_dir) if replay else HttpChatProvider()
        results = generate(provider, config, body["strategy"], body["domain"], body["objective"], runs, self.workspace)
        self.send_json(200, {
            "runs": [
                {"run_index": r.run_index, "ruleset_ids": r.ruleset_ids, "error": r.error,
                 "diagnostics": r.diagnostics}
                for r in results
            ]
        })

    def post_review(self, ruleset_id: str, body: dict):
        decision = {
            "ruleset_id": ruleset_id,
            "actions": body.get("actions", []),
            "reviewer": body.get("reviewer", "reviewer"),
        }
        if "timestamp" in body:
            decision["timestamp"] = body["timestamp"]
        new_id = self.workspace.apply_review(decision)
        self.send_json(200, {"new_id": new_id, "diagnostics": []})

    # -- static UI ---------------------------------------------------------

    def serve_static(self, path: str):
        if self.ui_dir is None:
            return self.send_error_json(404, "NotFound", "no UI directory configured; use the /api routes")
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            return self.send_error_json(404, "NotFound", f"no static file {path}")
        body = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def scoring_from_workspace(workspace: Workspace):
    from .analyze import ScoringConfig

    return ScoringConfig.from_json(workspace.config.get("scoring", {}))


def make_review_server(
    workspace: Workspace, ui_dir: str | Path | None = None, host: str = "127.0.0.1", port: int = 0
) -> ThreadingHTTPServer:
    handler = type(
        "BoundReviewHandler",
        (ReviewHandler,),
        {"workspace": workspace, "ui_dir": Path(ui_dir) if ui_dir else None},
    )
    return ThreadingHTTPServer((host, port), handler)


def serve_forever_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread

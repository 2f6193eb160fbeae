"""Deployable evaluation-service descriptor and generated test suite.

Artifacts are data: an OpenAPI-shaped descriptor plus a boundary-value test
file whose expected outcomes all come from the evaluator, never from hand.
The `serve` command interprets the rule set directly against the same
contract, so the suite replayed over HTTP is a true round-trip check.

Rule sets with provenance `generated` are refused outright: nothing ships
without an expert having accepted or edited it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import UnreviewedRuleSet
from .evaluate import boundary_records, evaluate, neutral_record
from .model import (
    BOOLEAN,
    GENERATED,
    NUMERIC,
    RuleSet,
    VariableRegistry,
)


@dataclass(frozen=True)
class FieldSpec:
    name: str
    type: str                      # number | boolean | string-enum
    required: bool = True
    enum: tuple[str, ...] | None = None


@dataclass
class ServiceDescriptor:
    service_name: str
    ruleset_id: str
    input_fields: list[FieldSpec]
    outcome_levels: tuple[str, ...]

    def to_openapi(self) -> dict:
        properties = {}
        for f in self.input_fields:
            schema: dict = {"type": f.type}
            if f.enum is not None:
                schema = {"type": "string", "enum": list(f.enum)}
            properties[f.name] = schema
        request_schema = {
            "type": "object",
            "properties": properties,
            "required": [f.name for f in self.input_fields if f.required],
            "additionalProperties": False,
        }
        response_schema = {
            "type": "object",
            "properties": {
                "outcome": {"type": "string", "enum": list(self.outcome_levels)},
                "matched_rule": {"type": ["integer", "null"]},
            },
            "required": ["outcome", "matched_rule"],
        }
        error_schema = {
            "type": "object",
            "properties": {"code": {"type": "string"}, "message": {"type": "string"}},
            "required": ["code", "message"],
        }
        return {
            "openapi": "3.0.3",
            "info": {
                "title": self.service_name,
                "version": "1.0.0",
                "x-ruleset-id": self.ruleset_id,
            },
            "paths": {
                "/evaluate": {
                    "post": {
                        "operationId": "evaluate",
                        "requestBody": {
                            "required": True,
                            "content": {"application/json": {"schema": {"$ref": "#/components/schemas/EvaluateRequest"}}},
                        },
                        "responses": {
                            "200": {
                                "description": "Evaluation outcome",
                                "content": {"application/json": {"schema": {"$ref": "#/components/schemas/EvaluateResponse"}}},
                            },
                            "400": {
                                "description": "Missing variable or type mismatch",
                                "content": {"application/json": {"schema": {"$ref": "#/components/schemas/Error"}}},
                            },
                        },
                    }
                },
                "/health": {
                    "get": {
                        "operationId": "health",
                        "responses": {"200": {"description": "Service liveness"}},
                    }
                },
            },
            "components": {
                "schemas": {
                    "EvaluateRequest": request_schema,
                    "EvaluateResponse": response_schema,
                    "Error": error_schema,
                }
            },
        }


def _require_reviewed(rs: RuleSet) -> None:
    if rs.provenance.kind == GENERATED:
        raise UnreviewedRuleSet(rs.content_id())


def generate_descriptor(rs: RuleSet, registry: VariableRegistry, service_name: str | None = None) -> ServiceDescriptor:
    """Descriptor over exactly the variables the rule set references, typed
    from the registry. Refuses unreviewed (generated) rule sets."""
    _require_reviewed(rs)
    fields: list[FieldSpec] = []
    for name in rs.referenced_variables():
        spec = registry.resolve(name)
        if spec.kind == NUMERIC:
            fields.append(FieldSpec(name, "number"))
        elif spec.kind == BOOLEAN:
            fields.append(FieldSpec(name, "boolean"))
        else:
            fields.append(FieldSpec(name, "string", enum=spec.levels))
    return ServiceDescriptor(
        service_name=service_name or f"{rs.name} evaluation service",
        ruleset_id=rs.content_id(),
        input_fields=fields,
        outcome_levels=rs.outcome.levels,
    )


@dataclass
class GeneratedTestSuite:
    ruleset_id: str
    epsilon: float
    cases: list[dict]  # {record, expected, note}

    def to_json(self) -> dict:
        return {"ruleset_id": self.ruleset_id, "epsilon": self.epsilon, "cases": self.cases}


def generate_test_suite(rs: RuleSet, registry: VariableRegistry, epsilon: float = 0.1) -> GeneratedTestSuite:
    """Boundary records, each with the evaluator's outcome frozen in as the
    expectation. A rule set with no probeable conditions still gets one
    neutral-record case."""
    _require_reviewed(rs)
    records = boundary_records(rs, registry, epsilon)
    notes = [f"boundary probe {i}" for i in range(len(records))]
    if not records:
        records = [neutral_record(rs, registry)]
        notes = ["neutral record (no probeable conditions)"]
    cases = []
    for record, note in zip(records, notes):
        trace = evaluate(rs, record)
        cases.append({"record": record, "expected": trace.outcome, "note": note})
    return GeneratedTestSuite(rs.content_id(), epsilon, cases)


def write_artifacts(out_dir: str | Path, descriptor: ServiceDescriptor, suite: GeneratedTestSuite) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    descriptor_path = out / "descriptor.json"
    tests_path = out / "tests.json"
    descriptor_path.write_text(json.dumps(descriptor.to_openapi(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tests_path.write_text(json.dumps(suite.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return descriptor_path, tests_path

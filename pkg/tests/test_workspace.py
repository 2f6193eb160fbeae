import json
import random
import threading

import pytest

from ruleflex.analyze import MATCH, WRONG_THRESHOLD, compare
from ruleflex.errors import HashMismatch, NotFound, ValidationFailed
from ruleflex.model import (
    Condition,
    Operator,
    OutcomeSpec,
    Provenance,
    Rule,
    RuleSet,
)
from ruleflex.workspace import Workspace

from conftest import random_ruleset

SPEC = OutcomeSpec("status", ("GREEN", "AMBER", "RED"), "GREEN")


@pytest.fixture
def ws(tmp_path):
    return Workspace(tmp_path / "ws")


def demo_ruleset():
    return RuleSet(
        "demo", "remote patient monitoring", "triage", SPEC,
        (
            Rule(0, (Condition("body_temperature", Operator.GE, 37.5),
                     Condition("shortness_of_breath", Operator.EQ, False)), "RED"),
            Rule(1, (), "GREEN"),
        ),
        Provenance.expert(),
    )


class TestStoreLoad:
    def test_round_trip(self, ws):
        rs = demo_ruleset()
        entry_id = ws.store("ruleset", rs.to_wire())
        assert RuleSet.from_wire(ws.load(entry_id).payload) == rs

    def test_storing_twice_dedupes(self, ws):
        rs = demo_ruleset()
        first = ws.store("ruleset", rs.to_wire())
        second = ws.store("ruleset", rs.to_wire())
        assert first == second
        assert ws.list_ids("ruleset") == [first]

    def test_id_is_content_hash(self, ws):
        rs = demo_ruleset()
        assert ws.store("ruleset", rs.to_wire()) == rs.content_id()

    def test_validation_failure_blocks_store(self, ws):
        bad = demo_ruleset().to_wire()
        bad["rules"][0]["outcome"] = "PURPLE"
        with pytest.raises(ValidationFailed):
            ws.store("ruleset", bad)
        assert ws.list_ids("ruleset") == []

    def test_unknown_id(self, ws):
        with pytest.raises(NotFound):
            ws.load("deadbeef" * 8)

    def test_tampered_file_detected(self, ws):
        entry_id = ws.store("ruleset", demo_ruleset().to_wire())
        path = ws.root / "rulesets" / f"{entry_id}.json"
        doc = json.loads(path.read_text())
        doc["rules"][0]["outcome"] = "AMBER"
        path.write_text(json.dumps(doc))
        with pytest.raises(HashMismatch):
            ws.load(entry_id)

    def test_prefix_lookup(self, ws):
        entry_id = ws.store("ruleset", demo_ruleset().to_wire())
        assert ws.load(entry_id[:12]).id == entry_id

    def test_config_created_with_defaults(self, ws):
        assert ws.config["provider"]["temperature"] == 1
        assert ws.config["provider"]["max_response_tokens"] == 3000
        assert ws.outcome_spec.levels == ("GREEN", "AMBER", "RED")
        assert ws.registry.resolve("temp").canonical_name == "body_temperature"

    def test_byte_identical_canonical_files(self, tmp_path):
        rs = demo_ruleset()
        a = Workspace(tmp_path / "a")
        b = Workspace(tmp_path / "b")
        ia, ib = a.store("ruleset", rs.to_wire()), b.store("ruleset", rs.to_wire())
        assert ia == ib
        assert (a.root / "rulesets" / f"{ia}.json").read_bytes() == (b.root / "rulesets" / f"{ib}.json").read_bytes()


class TestApplyReview:
    def test_threshold_edit(self, ws):
        pre_id = ws.store("ruleset", demo_ruleset().to_wire())
        new_id = ws.apply_review({
            "ruleset_id": pre_id,
            "actions": [{"action": "edit", "rule": 0, "condition_edits": [{"condition": 0, "value": 38.0}]}],
            "reviewer": "dr_lee",
            "timestamp": "2024-06-01T09:00:00+00:00",
        })
        edited = ws.load_ruleset(new_id)
        assert edited.rules[0].conditions[0].value == 38
        assert edited.provenance.kind == "edited"
        assert edited.provenance.parent == pre_id
        # the comparison engine sees exactly one threshold discrepancy
        report = compare(ws.load_ruleset(pre_id), edited)
        assert report.totals[WRONG_THRESHOLD] == 1
        assert report.totals[MATCH] == ws.load_ruleset(pre_id).condition_count() - 1

    def test_zero_actions_idempotent(self, ws):
        pre_id = ws.store("ruleset", demo_ruleset().to_wire())
        decision = {"ruleset_id": pre_id, "actions": [], "reviewer": "dr_lee",
                    "timestamp": "2024-06-01T09:00:00+00:00"}
        first = ws.apply_review(decision)
        second = ws.apply_review(decision)
        assert first == second
        edited = ws.load_ruleset(first)
        assert edited.rules == demo_ruleset().rules
        # re-storing the identical payload lands on the same id
        assert ws.store("ruleset", edited.to_wire()) == first

    def test_unknown_outcome_rejected_with_diagnostics(self, ws):
        pre_id = ws.store("ruleset", demo_ruleset().to_wire())
        with pytest.raises(ValidationFailed) as err:
            ws.apply_review({
                "ruleset_id": pre_id,
                "actions": [{"action": "edit", "rule": 0, "outcome": "PURPLE"}],
                "reviewer": "dr_lee",
            })
        assert [d.code for d in err.value.diagnostics] == ["UnknownOutcomeLevel"]
        assert ws.children_of(pre_id) == []

    def test_delete_and_add_reindex(self, ws):
        pre_id = ws.store("ruleset", demo_ruleset().to_wire())
        new_id = ws.apply_review({
            "ruleset_id": pre_id,
            "actions": [
                {"action": "delete", "rule": 0},
                {"action": "add", "conditions": [{"variable": "cough", "operator": "==", "value": True}],
                 "outcome": "AMBER"},
            ],
            "reviewer": "dr_lee",
            "timestamp": "2024-06-01T09:00:00+00:00",
        })
        edited = ws.load_ruleset(new_id)
        assert [r.index for r in edited.rules] == [0, 1]
        assert edited.rules[0].outcome == "AMBER"
        assert edited.rules[1].is_default  # trailing default stays last

    def test_parent_untouched(self, ws):
        pre_id = ws.store("ruleset", demo_ruleset().to_wire())
        before = (ws.root / "rulesets" / f"{pre_id}.json").read_bytes()
        ws.apply_review({"ruleset_id": pre_id, "actions": [{"action": "edit", "rule": 0, "outcome": "AMBER"}],
                        "reviewer": "dr_lee", "timestamp": "2024-06-01T09:00:00+00:00"})
        assert (ws.root / "rulesets" / f"{pre_id}.json").read_bytes() == before

    def test_audit_trail_terminates_at_origin(self, ws):
        pre_id = ws.store("ruleset", demo_ruleset().to_wire())
        current = pre_id
        for day in range(1, 4):
            current = ws.apply_review({
                "ruleset_id": current,
                "actions": [{"action": "edit", "rule": 0,
                             "condition_edits": [{"condition": 0, "value": 38 + day}]}],
                "reviewer": "dr_lee",
                "timestamp": f"2024-06-0{day}T09:00:00+00:00",
            })
        hops = 0
        rs = ws.load_ruleset(current)
        while rs.provenance.kind == "edited":
            rs = ws.load_ruleset(rs.provenance.parent)
            hops += 1
        assert hops == 3
        assert rs.provenance.kind == "expert"

    def test_sibling_edits_surface_as_fork(self, ws):
        pre_id = ws.store("ruleset", demo_ruleset().to_wire())
        a = ws.apply_review({"ruleset_id": pre_id, "reviewer": "a", "timestamp": "2024-06-01T09:00:00+00:00",
                             "actions": [{"action": "edit", "rule": 0, "condition_edits": [{"condition": 0, "value": 39}]}]})
        b = ws.apply_review({"ruleset_id": pre_id, "reviewer": "b", "timestamp": "2024-06-01T10:00:00+00:00",
                             "actions": [{"action": "edit", "rule": 0, "condition_edits": [{"condition": 0, "value": 40}]}]})
        assert sorted(ws.children_of(pre_id)) == sorted([a, b])

    def test_concurrent_reviews_serialized(self, ws):
        pre_id = ws.store("ruleset", demo_ruleset().to_wire())
        results = []

        def worker(value):
            results.append(ws.apply_review({
                "ruleset_id": pre_id, "reviewer": f"r{value}",
                "timestamp": "2024-06-01T09:00:00+00:00",
                "actions": [{"action": "edit", "rule": 0, "condition_edits": [{"condition": 0, "value": value}]}],
            }))

        threads = [threading.Thread(target=worker, args=(38 + i,)) for i in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(results) == 6
        assert len(ws.children_of(pre_id)) == 6


class TestRunsStorage:
    def test_store_and_list_runs(self, ws):
        run = {"run_index": 0, "strategy": "few_shot", "prompt": [], "prompt_sha256": "x",
               "config": {"model": "m"}, "response": "text", "started_at": "t0", "finished_at": "t1",
               "error": None, "parse": {"ruleset_ids": [], "diagnostics": []}}
        run_id = ws.store("run", run)
        assert ws.load(run_id).kind == "run"
        assert ws.list_ids("run") == [run_id]

    def test_random_rulesets_store_clean(self, ws):
        rng = random.Random(3)
        ids = set()
        for _ in range(20):
            ids.add(ws.store("ruleset", random_ruleset(rng, ws.registry).to_wire()))
        assert len(ws.list_ids("ruleset")) == len(ids)

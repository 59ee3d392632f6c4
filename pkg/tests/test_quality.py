import pytest

from ochub.quality import (
    Violation,
    check_graph_edge_endpoints,
    check_graph_node_uniqueness,
    run_checkpoint,
    synthesize_missing_objects,
)
from ochub.schema import Batch
from conftest import clean_fixture_batch


class TestRunCheckpoint:
    def test_clean_store_passes(self, store):
        store.append_batch(clean_fixture_batch())
        report = run_checkpoint(store, "transform")
        assert report.passed
        assert report.violations == []
        assert all(report.check_status.values())

    def test_missing_object_reference_flagged(self, store):
        store.append_batch(clean_fixture_batch())
        bad = Batch()
        bad.add("event_to_object", id="e2o:bad", event_id="ev:1",
                object_id="obj:ghost", qualifier_id="q:handles",
                qualifier_value="handles")
        report = run_checkpoint(bad, "staging", store=store)
        hits = [v for v in report.violations
                if v.check == "referential_integrity"]
        assert len(hits) == 1
        assert hits[0].ref_id == "obj:ghost"
        assert hits[0].table == "event_to_object"

    def test_duplicate_event_id_in_one_batch(self, store):
        b = Batch()
        b.add("event_types", id="et:a", description="a")
        b.add("events", id="e1", event_type_id="et:a",
              timestamp="2024-01-01T00:00:00.000Z")
        b.add("events", id="e1", event_type_id="et:a",
              timestamp="2024-01-02T00:00:00.000Z")
        report = run_checkpoint(b, "staging", store=store)
        hits = [v for v in report.violations if v.check == "unique_primary_keys"]
        assert len(hits) == 1
        assert hits[0].key == "e1"

    def test_batch_reference_into_store_resolves(self, store):
        store.append_batch(clean_fixture_batch())
        late = Batch()
        late.add("event_to_object", id="e2o:late", event_id="ev:1",
                 object_id="obj:i2", qualifier_id="q:handles",
                 qualifier_value="handles")
        report = run_checkpoint(late, "staging", store=store)
        assert report.passed

    def test_null_foreign_key_flagged_once(self, store):
        b = Batch()
        b.add("events", id="e1", event_type_id=None,
              timestamp="2024-01-01T00:00:00.000Z")
        report = run_checkpoint(b, "staging", store=store)
        by_check = {}
        for v in report.violations:
            by_check.setdefault(v.check, []).append(v)
        assert len(by_check["foreign_keys_not_null"]) == 1
        assert "referential_integrity" not in by_check

    def test_bad_timestamp_flagged(self, store):
        b = Batch()
        b.add("event_types", id="et:a", description="a")
        b.add("events", id="e1", event_type_id="et:a", timestamp="whenever")
        report = run_checkpoint(b, "staging", store=store)
        hits = [v for v in report.violations if v.check == "timestamp_validity"]
        assert len(hits) == 1

    def test_no_early_exit_reports_everything(self, store):
        b = Batch()
        b.add("events", id="e1", event_type_id=None, timestamp=None)
        b.add("events", id="e1", event_type_id=None, timestamp=None)
        report = run_checkpoint(b, "staging", store=store)
        kinds = {v.check for v in report.violations}
        assert kinds == {
            "unique_primary_keys",
            "foreign_keys_not_null",
            "timestamp_validity",
        }

    def test_transform_checkpoint_sees_store_wide_problems(self, store):
        # dangling rows can accumulate across batches; the transform
        # checkpoint is the enforcement point
        b = Batch()
        b.add("event_types", id="et:a", description="a")
        b.add("events", id="e1", event_type_id="et:a",
              timestamp="2024-01-01T00:00:00.000Z")
        b.add("relation_qualifiers", id="q:r", description="r", datatype="string")
        b.add("event_to_object", id="r1", event_id="e1", object_id="obj:never",
              qualifier_id="q:r", qualifier_value="r")
        store.append_batch(b)
        report = run_checkpoint(store, "transform")
        assert not report.passed
        assert report.check_status["referential_integrity"] is False

    def test_report_serialization(self, store, tmp_path):
        b = Batch()
        b.add("events", id="e1", event_type_id=None, timestamp=None)
        report = run_checkpoint(b, "staging", store=store)
        out = tmp_path / "report.json"
        report.write_json(out)
        import json
        data = json.loads(out.read_text())
        assert data["passed"] is False
        assert data["violations"]
        assert "FAILED" in report.summary()


class TestGraphChecks:
    def test_duplicate_node_ids(self):
        hits = check_graph_node_uniqueness(["a", "b", "a"])
        assert len(hits) == 1
        assert hits[0].key == "a"

    def test_dangling_edge_endpoint(self):
        hits = check_graph_edge_endpoints(["a", "b"], [("a", "b"), ("a", "c")])
        assert len(hits) == 1
        assert hits[0].key == "c"

    def test_checkpoint_over_csv_directory(self, tmp_path):
        (tmp_path / "nodes.csv").write_text(
            "id:ID,kind,:LABEL,timestamp,detail\nn1,event,Event,,\nn1,event,Event,,\n"
        )
        (tmp_path / "edges.csv").write_text(
            ":START_ID,:END_ID,:TYPE,object,qualifier,frequency\nn1,nx,DF,,,1\n"
        )
        report = run_checkpoint(tmp_path, "graph")
        assert not report.passed
        kinds = sorted(v.check for v in report.violations)
        assert kinds == ["graph_edge_endpoints", "graph_node_uniqueness"]


class TestSynthesizeMissingObjects:
    def ingest_with_missing_objects(self, store):
        b = clean_fixture_batch()
        b.add("event_to_object", id="e2o:m1", event_id="ev:1",
              object_id="obj:gone1", qualifier_id="q:handles",
              qualifier_value="handles")
        b.add("event_to_object", id="e2o:m2", event_id="ev:2",
              object_id="obj:gone2", qualifier_id="q:handles",
              qualifier_value="handles")
        store.append_batch(b)

    def test_repair_clears_exactly_the_violations(self, store):
        self.ingest_with_missing_objects(store)
        report = run_checkpoint(store, "transform")
        repair = synthesize_missing_objects(store, report.violations)
        assert len(repair.rows["objects"]) == 2
        assert len(repair.rows["object_types"]) == 1
        store.append_batch(repair)
        after = run_checkpoint(store, "transform")
        assert after.passed

    def test_empty_violations_empty_batch(self, store):
        assert synthesize_missing_objects(store, []).is_empty()

    def test_non_object_violation_rejected(self, store):
        bogus = Violation(
            check="referential_integrity", table="event_attribute_values",
            key="ev:ghost", detail="", ref_table="events", ref_id="ev:ghost",
        )
        with pytest.raises(ValueError, match="unsupported repair"):
            synthesize_missing_objects(store, [bogus])

    def test_wrong_check_kind_rejected(self, store):
        bogus = Violation(
            check="timestamp_validity", table="events", key="e1", detail="",
        )
        with pytest.raises(ValueError, match="unsupported repair"):
            synthesize_missing_objects(store, [bogus])

    def test_repair_adds_no_new_violation_kinds(self, store):
        self.ingest_with_missing_objects(store)
        report = run_checkpoint(store, "transform")
        repair = synthesize_missing_objects(store, report.violations)
        staged = run_checkpoint(repair, "staging", store=store)
        assert staged.passed


class TestZeroFalsePositives:
    def test_clean_fixture_has_no_violations_at_both_checkpoints(self, store):
        batch = clean_fixture_batch()
        assert run_checkpoint(batch, "staging", store=store).passed
        store.append_batch(batch)
        assert run_checkpoint(store, "transform").passed

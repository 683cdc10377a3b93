import json
import math

import pytest
from hypothesis import given, strategies as st

import datafix
from conftest import write_jsonl
from sqleq.backend import GenConfig, MockBackend, MockRule
from sqleq.bench import (
    CoverageReport, QueryPair, breakdown, compute_metrics,
    coverage_compare, emit_report, load_dataset, run_benchmark, write_report,
)
from sqleq.errors import DatasetParseError, DuplicateId, MissingSchema
from sqleq.pipeline import Backends, PipelineConfig


def dataset_paths(tmp_path, records, schemas=None):
    schemas = schemas if schemas is not None else datafix.TOY_SCHEMAS
    data_path = write_jsonl(tmp_path / "pairs.jsonl", records)
    schema_path = tmp_path / "schemas.json"
    schema_path.write_text(json.dumps(schemas))
    return data_path, schema_path


def scored_pair(pair_id, label, difficulty="Easy", question=None):
    return QueryPair(id=pair_id, sql1="q1", sql2="q2", schema_name="s",
                     label=label, difficulty=difficulty, question=question)


class TestLoadDataset:
    def test_three_valid_lines(self, tmp_path):
        records = [
            {"id": "a", "sql1": "SELECT 1", "sql2": "SELECT 2",
             "schema": "toy", "label": "NEQ"},
            {"id": "b", "sql1": "SELECT 1", "sql2": "SELECT 1",
             "schema": "toy", "label": "EQ"},
            {"id": "c", "sql1": "SELECT 3", "sql2": "select 3;",
             "schema": "toy", "label": "EQ", "difficulty": "Hard"},
        ]
        data, schemas = dataset_paths(tmp_path, records)
        loaded = load_dataset(data, schemas)
        assert len(loaded.pairs) == 3
        assert [p.exact for p in loaded.pairs] == [False, True, True]
        assert loaded.pairs[2].difficulty == "Hard"

    def test_missing_label_reports_line(self, tmp_path):
        records = [
            {"id": "a", "sql1": "SELECT 1", "sql2": "SELECT 2",
             "schema": "toy", "label": "EQ"},
            {"id": "b", "sql1": "SELECT 1", "sql2": "SELECT 2",
             "schema": "toy"},
        ]
        data, schemas = dataset_paths(tmp_path, records)
        with pytest.raises(DatasetParseError, match="line 2"):
            load_dataset(data, schemas)

    def test_duplicate_id_rejected(self, tmp_path):
        record = {"id": "same", "sql1": "SELECT 1", "sql2": "SELECT 2",
                  "schema": "toy", "label": "EQ"}
        data, schemas = dataset_paths(tmp_path, [record, record])
        with pytest.raises(DuplicateId):
            load_dataset(data, schemas)

    def test_missing_schema_rejected(self, tmp_path):
        records = [{"id": "a", "sql1": "SELECT 1", "sql2": "SELECT 2",
                    "schema": "elsewhere", "label": "EQ"}]
        data, schemas = dataset_paths(tmp_path, records)
        with pytest.raises(MissingSchema):
            load_dataset(data, schemas)

    def test_bad_json_line(self, tmp_path):
        data = tmp_path / "pairs.jsonl"
        data.write_text('{"id": "a"\n')
        schemas = tmp_path / "schemas.json"
        schemas.write_text(json.dumps(datafix.TOY_SCHEMAS))
        with pytest.raises(DatasetParseError, match="line 1"):
            load_dataset(data, schemas)

    def test_difficulty_corpus_fixture_counts(self, tmp_path):
        data, schemas = dataset_paths(tmp_path, datafix.difficulty_records())
        loaded = load_dataset(data, schemas)
        assert len(loaded.pairs) == 1034
        exact = [p for p in loaded.pairs if p.exact]
        scored = [p for p in loaded.pairs if not p.exact]
        assert len(exact) == 460
        assert sum(1 for p in scored if p.label == "EQ") == 385
        assert sum(1 for p in scored if p.label == "NEQ") == 189


class TestComputeMetrics:
    def test_simple_counts(self):
        pairs = [scored_pair("e1", "EQ"), scored_pair("e2", "EQ"),
                 scored_pair("n1", "NEQ"), scored_pair("n2", "NEQ")]
        predictions = {"e1": "Equivalent", "e2": "NonEquivalent",
                       "n1": "NonEquivalent", "n2": "NonEquivalent"}
        metrics = compute_metrics(predictions, pairs)
        assert metrics.eq_accuracy == 0.5
        assert metrics.neq_accuracy == 1.0
        assert metrics.gm == math.sqrt(0.5)

    def test_gm_zero_when_class_accuracy_zero(self):
        pairs = [scored_pair("e1", "EQ"), scored_pair("n1", "NEQ")]
        predictions = {"e1": "Equivalent", "n1": "Equivalent"}
        metrics = compute_metrics(predictions, pairs)
        assert metrics.neq_accuracy == 0.0
        assert metrics.gm == 0.0

    def test_gm_recompute_invariant(self):
        pairs = [scored_pair(f"e{i}", "EQ") for i in range(8)]
        pairs += [scored_pair(f"n{i}", "NEQ") for i in range(5)]
        predictions = {p.id: ("Equivalent" if i % 3 else "NonEquivalent")
                       for i, p in enumerate(pairs)}
        metrics = compute_metrics(predictions, pairs)
        assert metrics.gm == pytest.approx(
            math.sqrt(metrics.eq_accuracy * metrics.neq_accuracy))

    def test_empty_class_reports_not_applicable(self):
        pairs = [scored_pair("e1", "EQ")]
        metrics = compute_metrics({"e1": "Equivalent"}, pairs)
        assert metrics.eq_accuracy == 1.0
        assert metrics.neq_accuracy is None
        assert metrics.gm is None

    def test_unknown_policy_default_counts_as_neq(self):
        pairs = [scored_pair("e1", "EQ"), scored_pair("n1", "NEQ")]
        predictions = {"e1": "Unknown", "n1": "Unknown"}
        as_neq = compute_metrics(predictions, pairs, "as_neq")
        assert as_neq.eq_accuracy == 0.0
        assert as_neq.neq_accuracy == 1.0
        always_wrong = compute_metrics(predictions, pairs, "always_wrong")
        assert always_wrong.eq_accuracy == 0.0
        assert always_wrong.neq_accuracy == 0.0
        assert as_neq.unknown_predictions == 2

    def test_missing_prediction_rejected(self):
        with pytest.raises(ValueError, match="missing prediction"):
            compute_metrics({}, [scored_pair("e1", "EQ")])

    def test_unknown_policy_name_rejected(self):
        with pytest.raises(ValueError):
            compute_metrics({}, [], unknown_policy="optimistic")


@given(st.lists(
    st.tuples(st.sampled_from(["EQ", "NEQ"]),
              st.sampled_from(["Equivalent", "NonEquivalent", "Unknown"])),
    min_size=1, max_size=60))
def test_unknown_policy_property(assignments):
    pairs = [scored_pair(f"p{i}", label)
             for i, (label, _pred) in enumerate(assignments)]
    predictions = {f"p{i}": pred
                   for i, (_label, pred) in enumerate(assignments)}
    policy_a = compute_metrics(predictions, pairs, "as_neq")
    policy_b = compute_metrics(predictions, pairs, "always_wrong")
    assert policy_a.eq_accuracy == policy_b.eq_accuracy
    if policy_a.neq_accuracy is not None:
        assert policy_a.neq_accuracy >= policy_b.neq_accuracy


class TestRunAndReports:
    def _small_run(self, tmp_path, parallelism=2):
        records = [
            {"id": f"p{i:02d}", "sql1": f"SELECT a FROM t WHERE b = {i}",
             "sql2": f"SELECT a FROM t WHERE b = {i + 50}",
             "schema": "toy", "label": "EQ" if i % 2 else "NEQ",
             "difficulty": "Easy" if i < 5 else "Medium"}
            for i in range(10)
        ]
        records.append({"id": "px", "sql1": "SELECT 9 FROM t",
                        "sql2": "select 9 from t", "schema": "toy",
                        "label": "EQ"})
        data, schemas = dataset_paths(tmp_path, records)
        dataset = load_dataset(data, schemas)
        mock = MockBackend(rules=[
            MockRule(response="Equivalent", substring="WHERE b = 1"),
            MockRule(response="Non Equivalent"),
        ])
        cfg = PipelineConfig(strategy_cfg=GenConfig(model="mock-model"),
                             fail_soft=True)
        report = run_benchmark(dataset, "basic", False,
                               Backends(strategy=mock), cfg,
                               parallelism=parallelism)
        return report, mock

    def test_run_scores_exclude_exact(self, tmp_path):
        report, _mock = self._small_run(tmp_path)
        assert len(report.verdicts) == 11
        assert len(report.scored_ids) == 10
        assert "px" not in report.scored_ids

    def test_exact_pair_shortcut_no_calls(self, tmp_path):
        report, mock = self._small_run(tmp_path)
        shortcut = next(v for v in report.verdicts if v.pair_id == "px")
        assert shortcut.shortcut
        assert mock.call_count == 20  # 10 scored pairs x 2 calls

    def test_report_independent_of_parallelism(self, tmp_path):
        texts = []
        for parallelism in (1, 4):
            report, _ = self._small_run(tmp_path, parallelism)
            payload = json.loads(emit_report(report, "json"))
            payload.pop("started_at")
            payload.pop("finished_at")
            texts.append(json.dumps(payload, sort_keys=True))
        assert texts[0] == texts[1]

    def test_breakdown_difficulty(self, tmp_path):
        report, _ = self._small_run(tmp_path)
        by_difficulty = breakdown(report, "difficulty")
        assert set(by_difficulty) == {"Easy", "Medium"}
        easy = by_difficulty["Easy"]
        assert easy.eq_total + easy.neq_total == 5

    def test_breakdown_single_difficulty_dataset(self, tmp_path):
        records = [
            {"id": "a", "sql1": "SELECT 1 FROM t", "sql2": "SELECT 2 FROM t",
             "schema": "toy", "label": "NEQ", "difficulty": "Hard"},
        ]
        data, schemas = dataset_paths(tmp_path, records)
        dataset = load_dataset(data, schemas)
        cfg = PipelineConfig(strategy_cfg=GenConfig(model="m"))
        report = run_benchmark(dataset, "basic", False,
                               Backends(strategy=MockBackend()), cfg,
                               parallelism=1)
        assert list(breakdown(report, "difficulty")) == ["Hard"]

    def test_breakdown_axis_validation(self, tmp_path):
        report, _ = self._small_run(tmp_path)
        with pytest.raises(ValueError):
            breakdown(report, "color")

    def test_emit_json_deterministic_and_gm_consistent(self, tmp_path):
        report, _ = self._small_run(tmp_path)
        one = emit_report(report, "json")
        two = emit_report(report, "json")
        assert one == two
        payload = json.loads(one)
        metrics = payload["metrics"]
        if metrics["eq_accuracy"] is not None and \
                metrics["neq_accuracy"] is not None:
            assert metrics["gm"] == pytest.approx(math.sqrt(
                metrics["eq_accuracy"] * metrics["neq_accuracy"]))
        assert [row["pair_id"] for row in payload["pairs"]] == \
            sorted(row["pair_id"] for row in payload["pairs"])

    def test_emit_csv_has_rows_and_metric_footer(self, tmp_path):
        report, _ = self._small_run(tmp_path)
        text = emit_report(report, "csv")
        lines = text.strip().split("\n")
        assert lines[0].startswith("pair_id,")
        assert sum(1 for ln in lines if ln.startswith("p")) - 1 == 11
        assert any(ln.startswith("# gm,") for ln in lines)

    def test_emit_markdown_tables(self, tmp_path):
        report, _ = self._small_run(tmp_path)
        text = emit_report(report, "markdown")
        assert "## Overall" in text
        assert "## By difficulty" in text
        assert "| EQ n | NEQ n |" in text

    def test_write_report(self, tmp_path):
        report, _ = self._small_run(tmp_path)
        out = tmp_path / "report.json"
        write_report(report, "json", out)
        assert json.loads(out.read_text())["strategy"] == "basic"

    def test_unknown_format(self, tmp_path):
        report, _ = self._small_run(tmp_path)
        with pytest.raises(ValueError):
            emit_report(report, "xml")

    def test_config_echo_in_report(self, tmp_path):
        report, _ = self._small_run(tmp_path)
        assert report.config["strategy_gen"]["model"] == "mock-model"
        assert report.config["strategy_gen"]["temperature"] == 0.2
        assert report.config["backend"] == "MockBackend"

    def test_fewshot_exemplar_pairs_excluded_from_run(self, tmp_path):
        from sqleq.prompts import select_exemplars
        records = [
            {"id": f"f{i:02d}", "sql1": f"SELECT a FROM t WHERE b = {i}",
             "sql2": f"SELECT a FROM t WHERE {i} = b",
             "schema": "toy", "label": "EQ" if i % 2 else "NEQ"}
            for i in range(12)
        ]
        data, schemas = dataset_paths(tmp_path, records)
        dataset = load_dataset(data, schemas)
        exemplars = select_exemplars(dataset, seed=1)
        cfg = PipelineConfig(strategy_cfg=GenConfig(model="m"),
                             exemplars=exemplars)
        report = run_benchmark(dataset, "fewshot", False,
                               Backends(strategy=MockBackend()), cfg,
                               parallelism=1)
        excluded = set(exemplars.excluded_ids)
        assert len(excluded) == 4
        assert not {v.pair_id for v in report.verdicts} & excluded
        assert not report.scored_ids & excluded
        assert report.metrics.eq_total + report.metrics.neq_total == 8


class TestCoverage:
    def _report(self, tmp_path):
        report, _ = TestRunAndReports()._small_run(tmp_path)
        return report

    def test_all_supported_all_correct_overlap_equals_total(self, tmp_path):
        records = [
            {"id": f"c{i}", "sql1": f"SELECT a FROM t WHERE b = {i}",
             "sql2": f"SELECT a FROM t WHERE b = {i + 9}",
             "schema": "toy", "label": "EQ" if i % 2 else "NEQ"}
            for i in range(6)
        ]
        data, schemas = dataset_paths(tmp_path, records)
        dataset = load_dataset(data, schemas)
        rules = [MockRule(response="Equivalent" if r["label"] == "EQ"
                          else "Non Equivalent", pair_id=r["id"])
                 for r in records]
        cfg = PipelineConfig(strategy_cfg=GenConfig(model="m"))
        report = run_benchmark(dataset, "basic", False,
                               Backends(strategy=MockBackend(rules=rules)),
                               cfg, parallelism=1)
        assert report.metrics.eq_accuracy == 1.0
        assert report.metrics.neq_accuracy == 1.0
        path = write_jsonl(tmp_path / "tool.jsonl",
                           [{"pair_id": r["id"], "supported": True}
                            for r in records])
        coverage = coverage_compare(report, path)
        assert coverage.supported_total == 6
        assert coverage.supported_correct == coverage.supported_total
        assert coverage.unsupported_total == 0

    def test_unknown_pair_id_warns_and_ignored(self, tmp_path):
        report = self._report(tmp_path)
        path = write_jsonl(tmp_path / "tool.jsonl", [
            {"pair_id": "p00", "supported": True},
            {"pair_id": "does-not-exist", "supported": True},
        ])
        with pytest.warns(UserWarning, match="unknown pair id"):
            coverage = coverage_compare(report, path)
        assert coverage.supported_total == 1

    def test_as_dict(self):
        coverage = CoverageReport(2, 3, 1, 0)
        assert coverage.as_dict()["supported_total"] == 2

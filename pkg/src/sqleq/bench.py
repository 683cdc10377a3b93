"""Benchmark harness: dataset ingestion, runs, metrics, reports.

Datasets are JSONL, one pair per line:

    {"id": "...", "sql1": "...", "sql2": "...", "schema": "<name>",
     "label": "EQ"|"NEQ", "difficulty": "Easy|Medium|Hard|ExtraHard",
     "question": "Q1", "explanation": "..."}

(the last three fields are optional). Schema names resolve against a
schemas JSON file mapping name to schema definition.

Scoring: exact-match pairs are excluded from the scored denominators by
default; Unknown predictions count as Non-Equivalent under the default
policy ("as_neq") or as always wrong ("always_wrong"). The geometric
mean is sqrt(eq_accuracy * neq_accuracy) and is omitted when a class is
empty.
"""

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

from .errors import DatasetParseError, DuplicateId, MissingSchema
from .normalize import exact_match
from .pipeline import (
    LABEL_EQUIVALENT, LABEL_NON_EQUIVALENT, LABEL_UNKNOWN, check_pair,
    verdict_to_dict,
)
from .schema import load_schemas

DIFFICULTIES = ("Easy", "Medium", "Hard", "ExtraHard", "Unlabeled")
UNKNOWN_POLICIES = ("as_neq", "always_wrong")

_DIFFICULTY_ALIASES = {
    "easy": "Easy", "medium": "Medium", "hard": "Hard",
    "extrahard": "ExtraHard", "extra": "ExtraHard", "unlabeled": "Unlabeled",
}


@dataclass
class QueryPair:
    id: str
    sql1: str
    sql2: str
    schema_name: str
    label: Optional[str]            # EQ | NEQ
    difficulty: str = "Unlabeled"
    question: Optional[str] = None
    explanation: Optional[str] = None
    exact: bool = False             # computed at load time


@dataclass
class Dataset:
    pairs: list
    schemas: dict   # name -> SchemaDef

    def schema_for(self, pair):
        return self.schemas[pair.schema_name]


def load_dataset(path, schemas):
    """Load and validate a JSONL dataset; `schemas` is a path or dict."""
    if isinstance(schemas, (str, bytes)) or hasattr(schemas, "__fspath__"):
        schemas = load_schemas(schemas)
    pairs = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            pair = _parse_pair_line(line, line_number, schemas)
            if pair.id in seen:
                raise DuplicateId(f"duplicate pair id {pair.id!r} "
                                  f"(line {line_number})")
            seen.add(pair.id)
            pairs.append(pair)
    return Dataset(pairs=pairs, schemas=schemas)


def _parse_pair_line(line, line_number, schemas):
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetParseError(f"invalid JSON: {exc}", line_number) from exc
    for required in ("id", "sql1", "sql2", "schema", "label"):
        if required not in record:
            raise DatasetParseError(f"missing field {required!r}", line_number)
    label = record["label"]
    if label not in ("EQ", "NEQ"):
        raise DatasetParseError(f"label must be EQ or NEQ, got {label!r}",
                                line_number)
    schema_name = record["schema"]
    if schema_name not in schemas:
        raise MissingSchema(f"line {line_number}: schema {schema_name!r} "
                            f"not in schemas file")
    difficulty = _normalize_difficulty(record.get("difficulty"), line_number)
    pair = QueryPair(
        id=str(record["id"]), sql1=record["sql1"], sql2=record["sql2"],
        schema_name=schema_name, label=label, difficulty=difficulty,
        question=record.get("question"),
        explanation=record.get("explanation"),
    )
    pair.exact = exact_match(pair.sql1, pair.sql2)
    return pair


def _normalize_difficulty(value, line_number):
    if value is None:
        return "Unlabeled"
    key = "".join(ch for ch in str(value).lower() if ch.isalpha())
    if key.startswith("extra"):
        key = "extrahard"
    if key not in _DIFFICULTY_ALIASES:
        raise DatasetParseError(f"unknown difficulty {value!r}", line_number)
    return _DIFFICULTY_ALIASES[key]


# --- metrics ---

@dataclass(frozen=True)
class Metrics:
    eq_total: int
    neq_total: int
    eq_correct: int
    neq_correct: int
    unknown_predictions: int
    errors: int
    eq_accuracy: Optional[float]
    neq_accuracy: Optional[float]
    gm: Optional[float]

    def as_dict(self):
        return {
            "eq_total": self.eq_total,
            "neq_total": self.neq_total,
            "eq_correct": self.eq_correct,
            "neq_correct": self.neq_correct,
            "unknown_predictions": self.unknown_predictions,
            "errors": self.errors,
            "eq_accuracy": self.eq_accuracy,
            "neq_accuracy": self.neq_accuracy,
            "gm": self.gm,
        }


def compute_metrics(predictions, pairs, unknown_policy="as_neq",
                    error_count=0):
    """EQ/NEQ accuracy and geometric mean over scored pairs.

    `predictions` maps pair id to a pipeline label. Every scored pair
    needs a prediction. With an empty class the per-class accuracy is
    None and the geometric mean is omitted.
    """
    if unknown_policy not in UNKNOWN_POLICIES:
        raise ValueError(f"unknown policy {unknown_policy!r}")
    eq_total = neq_total = eq_correct = neq_correct = 0
    unknown = 0
    for pair in pairs:
        if pair.id not in predictions:
            raise ValueError(f"missing prediction for pair {pair.id!r}")
        predicted = predictions[pair.id]
        if predicted == LABEL_UNKNOWN:
            unknown += 1
        if pair.label == "EQ":
            eq_total += 1
            eq_correct += predicted == LABEL_EQUIVALENT
        elif pair.label == "NEQ":
            neq_total += 1
            if unknown_policy == "as_neq":
                neq_correct += predicted in (LABEL_NON_EQUIVALENT,
                                             LABEL_UNKNOWN)
            else:
                neq_correct += predicted == LABEL_NON_EQUIVALENT
    eq_accuracy = eq_correct / eq_total if eq_total else None
    neq_accuracy = neq_correct / neq_total if neq_total else None
    gm = None
    if eq_accuracy is not None and neq_accuracy is not None:
        gm = math.sqrt(eq_accuracy * neq_accuracy)
    return Metrics(eq_total=eq_total, neq_total=neq_total,
                   eq_correct=eq_correct, neq_correct=neq_correct,
                   unknown_predictions=unknown, errors=error_count,
                   eq_accuracy=eq_accuracy, neq_accuracy=neq_accuracy, gm=gm)


# --- run execution ---

@dataclass
class RunReport:
    strategy: str
    plans_enabled: bool
    unknown_policy: str
    verdicts: list                  # sorted by pair id
    pairs: list                     # QueryPair rows the run covered
    scored_ids: set
    metrics: Optional[Metrics]
    by_difficulty: dict
    by_question: dict
    config: dict
    started_at: str = ""
    finished_at: str = ""

    def predictions(self):
        return {v.pair_id: v.label for v in self.verdicts}

    def pair_by_id(self, pair_id):
        for pair in self.pairs:
            if pair.id == pair_id:
                return pair
        return None


def run_benchmark(dataset, strategy, plans_enabled, backends, cfg,
                  parallelism=4, unknown_policy="as_neq",
                  score_exact_matches=False, extra_config=None):
    """Check every pair and aggregate metrics plus breakdowns.

    Pair fan-out is bounded by `parallelism`; aggregation sorts by pair
    id so reports do not depend on scheduling. Exemplar pairs (for
    few-shot) are dropped from the run entirely.
    """
    excluded = set()
    if cfg.exemplars is not None:
        excluded = set(cfg.exemplars.excluded_ids)
    pairs = [p for p in dataset.pairs if p.id not in excluded]

    started = _now()
    if parallelism <= 1:
        verdicts = [
            check_pair(p, dataset.schema_for(p), strategy, plans_enabled,
                       backends, cfg)
            for p in pairs
        ]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            verdicts = list(pool.map(
                lambda p: check_pair(p, dataset.schema_for(p), strategy,
                                     plans_enabled, backends, cfg),
                pairs))
    finished = _now()

    verdicts.sort(key=lambda v: v.pair_id)
    scored_ids = {
        p.id for p in pairs
        if p.label and (score_exact_matches or not p.exact)
    }

    report = RunReport(
        strategy=strategy, plans_enabled=plans_enabled,
        unknown_policy=unknown_policy, verdicts=verdicts, pairs=pairs,
        scored_ids=scored_ids, metrics=None, by_difficulty={},
        by_question={}, config=_config_echo(backends, cfg, parallelism,
                                            plans_enabled, strategy,
                                            extra_config),
        started_at=started, finished_at=finished,
    )
    predictions = report.predictions()
    scored = [p for p in pairs if p.id in scored_ids]
    errors = sum(1 for v in verdicts
                 if v.error is not None and v.pair_id in scored_ids)
    report.metrics = compute_metrics(predictions, scored, unknown_policy,
                                     error_count=errors)
    report.by_difficulty = breakdown(report, "difficulty")
    report.by_question = breakdown(report, "question")
    return report


def breakdown(report, axis):
    """Per-difficulty or per-question metrics over the scored pairs."""
    if axis not in ("difficulty", "question"):
        raise ValueError(f"unknown breakdown axis {axis!r}")
    predictions = report.predictions()
    groups = {}
    for pair in report.pairs:
        if pair.id not in report.scored_ids:
            continue
        key = pair.difficulty if axis == "difficulty" \
            else (pair.question or "untagged")
        groups.setdefault(key, []).append(pair)
    ordered = {}
    for key in _axis_order(groups, axis):
        ordered[key] = compute_metrics(predictions, groups[key],
                                       report.unknown_policy)
    return ordered


def _axis_order(groups, axis):
    if axis == "difficulty":
        return [d for d in DIFFICULTIES if d in groups]
    return sorted(groups)


def _config_echo(backends, cfg, parallelism, plans_enabled, strategy,
                 extra_config):
    def gen_dict(gen):
        if gen is None:
            return None
        return {
            "model": gen.model,
            "temperature": gen.temperature,
            "max_output_tokens": gen.max_output_tokens,
            "timeout": gen.timeout,
            "max_retries": gen.max_retries,
            "parallelism": gen.parallelism,
        }

    del parallelism  # fan-out bound; kept out so report bytes don't vary
    echo = {
        "strategy": strategy,
        "plans": plans_enabled,
        "shortcut": cfg.shortcut,
        "fail_soft": cfg.fail_soft,
        "strategy_gen": gen_dict(cfg.strategy_cfg),
        "classifier_gen": gen_dict(cfg.classifier_config()),
        "backend": type(backends.strategy).__name__,
        "classifier_backend": type(backends.classifier_backend()).__name__,
    }
    if cfg.exemplars is not None:
        echo["exemplar_excluded_ids"] = sorted(cfg.exemplars.excluded_ids)
    if extra_config:
        echo.update(extra_config)
    return echo


def _now():
    return datetime.now(timezone.utc).isoformat()


# --- coverage comparison ---

@dataclass(frozen=True)
class CoverageReport:
    supported_total: int
    unsupported_total: int
    supported_correct: int
    unsupported_correct: int

    def as_dict(self):
        return {
            "supported_total": self.supported_total,
            "unsupported_total": self.unsupported_total,
            "supported_correct": self.supported_correct,
            "unsupported_correct": self.unsupported_correct,
        }


def coverage_compare(report, tool_results_path):
    """Count supported/unsupported pairs for a formal tool and, within
    each subset, how many this run predicted correctly.

    Tool results are JSONL: {pair_id, supported: bool, tool_label?}.
    Unknown pair ids warn and are ignored.
    """
    predictions = report.predictions()
    known = {p.id: p for p in report.pairs}
    supported_total = unsupported_total = 0
    supported_correct = unsupported_correct = 0
    with open(tool_results_path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(f"invalid JSON: {exc}",
                                        line_number) from exc
            pair_id = str(record.get("pair_id"))
            if pair_id not in known:
                warnings.warn(f"tool results line {line_number}: unknown "
                              f"pair id {pair_id!r} ignored", stacklevel=2)
                continue
            pair = known[pair_id]
            correct = _prediction_correct(
                predictions.get(pair_id), pair.label, report.unknown_policy)
            if record.get("supported"):
                supported_total += 1
                supported_correct += correct
            else:
                unsupported_total += 1
                unsupported_correct += correct
    return CoverageReport(supported_total, unsupported_total,
                          supported_correct, unsupported_correct)


def _prediction_correct(predicted, label, unknown_policy):
    if predicted is None:
        return False
    if label == "EQ":
        return predicted == LABEL_EQUIVALENT
    if label == "NEQ":
        if unknown_policy == "as_neq":
            return predicted in (LABEL_NON_EQUIVALENT, LABEL_UNKNOWN)
        return predicted == LABEL_NON_EQUIVALENT
    return False


# --- report emission ---

def emit_report(report, fmt):
    """Render a report as json, csv, or markdown text.

    Deterministic for a given report: pairs are ordered by id and JSON
    keys are sorted. Timestamps appear only in the JSON format.
    """
    if fmt == "json":
        return _emit_json(report)
    if fmt == "csv":
        return _emit_csv(report)
    if fmt == "markdown":
        return _emit_markdown(report)
    raise ValueError(f"unknown report format {fmt!r}")


def write_report(report, fmt, path):
    text = emit_report(report, fmt)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path


def _pair_rows(report):
    rows = []
    for verdict in report.verdicts:
        pair = report.pair_by_id(verdict.pair_id)
        row = verdict_to_dict(verdict)
        row["ground_truth"] = pair.label if pair else None
        row["difficulty"] = pair.difficulty if pair else None
        row["question"] = pair.question if pair else None
        row["scored"] = verdict.pair_id in report.scored_ids
        rows.append(row)
    return rows


def _emit_json(report):
    payload = {
        "strategy": report.strategy,
        "plans": report.plans_enabled,
        "unknown_policy": report.unknown_policy,
        "config": report.config,
        "started_at": report.started_at,
        "finished_at": report.finished_at,
        "metrics": report.metrics.as_dict() if report.metrics else None,
        "breakdowns": {
            "difficulty": {k: m.as_dict()
                           for k, m in report.by_difficulty.items()},
            "question": {k: m.as_dict()
                         for k, m in report.by_question.items()},
        },
        "pairs": _pair_rows(report),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _emit_csv(report):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["pair_id", "ground_truth", "prediction", "scored",
                     "shortcut", "difficulty", "question", "error"])
    for row in _pair_rows(report):
        writer.writerow([
            row["pair_id"], row["ground_truth"], row["label"], row["scored"],
            row["shortcut"], row["difficulty"], row["question"],
            row["error"] or "",
        ])
    metrics = report.metrics
    writer.writerow([])
    writer.writerow(["# metric", "value"])
    for key, value in metrics.as_dict().items():
        writer.writerow([f"# {key}", _fmt_metric(value)])
    return buffer.getvalue()


def _emit_markdown(report):
    lines = [
        "# Equivalence benchmark report",
        "",
        f"- strategy: {report.strategy}",
        f"- logical plans in prompt: {report.plans_enabled}",
        f"- unknown policy: {report.unknown_policy}",
        f"- scored pairs: {len(report.scored_ids)}",
        "",
        "## Overall",
        "",
        "| EQ n | NEQ n | EQ acc | NEQ acc | GM |",
        "| --- | --- | --- | --- | --- |",
        _markdown_metrics_row(report.metrics),
    ]
    for title, table in (("By difficulty", report.by_difficulty),
                         ("By question", report.by_question)):
        if not table:
            continue
        lines.extend([
            "",
            f"## {title}",
            "",
            "| group | EQ n | NEQ n | EQ acc | NEQ acc | GM |",
            "| --- | --- | --- | --- | --- | --- |",
        ])
        for key, metrics in table.items():
            lines.append(f"| {key} " + _markdown_metrics_row(metrics))
    return "\n".join(lines) + "\n"


def _markdown_metrics_row(metrics):
    return (f"| {metrics.eq_total} | {metrics.neq_total} "
            f"| {_fmt_metric(metrics.eq_accuracy)} "
            f"| {_fmt_metric(metrics.neq_accuracy)} "
            f"| {_fmt_metric(metrics.gm)} |")


def _fmt_metric(value):
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)

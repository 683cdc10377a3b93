"""Command-line entry point.

Subcommands: check (one pair), bench (dataset run + report), plan,
features, prompt (exact prompt bytes), oracle (execution-based check).

Exit codes: 0 Equivalent, 1 Non-Equivalent, 2 Unknown, 64 usage error,
70 internal error. Configuration precedence: flags > environment
(SQLEQ_API_KEY, SQLEQ_CONFIG) > config file (TOML or JSON) > defaults.
Diagnostics go to stderr; stdout stays machine-parseable under
--format json.
"""

import argparse
import json
import os
import sys

from .backend import GenConfig, HttpBackend, MockBackend
from .bench import load_dataset, run_benchmark, write_report
from .errors import SqleqError
from .executor import instance_from_dict
from .features import extract_features
from .oracle import oracle_check
from .parser import parse_sql
from .pipeline import (
    Backends, LABEL_EQUIVALENT, LABEL_NON_EQUIVALENT, PipelineConfig,
    check_pair, verdict_to_dict,
)
from .plan import plan_or_placeholder
from .prompts import (
    build_basic, build_classify, build_cot, build_decide, build_explain,
    build_fewshot, exemplar_set_from_file, select_exemplars,
)
from .schema import load_schema

EXIT_EQUIVALENT = 0
EXIT_NON_EQUIVALENT = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 64
EXIT_ERROR = 70

CONFIG_ENV = "SQLEQ_CONFIG"
API_KEY_ENV = "SQLEQ_API_KEY"

_DEFAULTS = {
    "backend": "mock",
    "endpoint": None,
    "api_key": None,
    "model": "mock-model",
    "classifier_model": None,
    "temperature": 0.2,
    "max_tokens": 1000,
    "timeout": 30.0,
    "retries": 3,
    "parallelism": 4,
    "seed": 0,
    "exemplars": None,
    "mock_script": None,
    "mock_default": "Unknown",
    "shortcut": True,
    "unknown_policy": "as_neq",
}


class UsageError(Exception):
    pass


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SqleqError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sqleq",
        description="SQL query-pair equivalence checking toolkit")
    parser.add_argument("--config", help="config file (TOML or JSON); "
                        f"also via ${CONFIG_ENV}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("check", help="check one query pair")
    p.add_argument("--sql1", required=True)
    p.add_argument("--sql2", required=True)
    p.add_argument("--schema", required=True, help="schema JSON file")
    p.add_argument("--strategy", default="basic",
                   choices=["basic", "cot", "fewshot", "multistage"])
    p.add_argument("--with-plans", action="store_true")
    _backend_flags(p)
    p.add_argument("--no-shortcut", action="store_true",
                   help="send exact-match pairs to the backend anyway")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="run a dataset benchmark")
    p.add_argument("--dataset", required=True, help="pairs JSONL file")
    p.add_argument("--schemas", required=True, help="schemas JSON file")
    p.add_argument("--strategy", default="basic",
                   choices=["basic", "cot", "fewshot", "multistage"])
    p.add_argument("--with-plans", action="store_true")
    p.add_argument("--out", required=True, help="report output path")
    p.add_argument("--format", default="json",
                   choices=["json", "csv", "markdown"])
    p.add_argument("--parallelism", type=int)
    p.add_argument("--unknown-policy", choices=["as_neq", "always_wrong"])
    p.add_argument("--score-exact-matches", action="store_true")
    _backend_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plan", help="print the logical plan for a query")
    p.add_argument("--sql", required=True)
    p.add_argument("--schema", required=True, help="schema JSON file")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("features", help="print a feature profile")
    p.add_argument("--sql", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("prompt", help="print exact prompt bytes")
    p.add_argument("--strategy", required=True,
                   choices=["basic", "cot", "fewshot", "explain", "decide",
                            "classify"])
    p.add_argument("--sql1")
    p.add_argument("--sql2")
    p.add_argument("--schema", help="schema JSON file")
    p.add_argument("--with-plans", action="store_true")
    p.add_argument("--exemplars", help="exemplar JSON file (fewshot)")
    p.add_argument("--slot", type=int, choices=[1, 2], default=1,
                   help="query slot for the explain stage")
    p.add_argument("--expl1", help="stage-1 explanation (decide)")
    p.add_argument("--expl2", help="stage-1 explanation (decide)")
    p.add_argument("--text", help="raw text to classify")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("oracle", help="execution-based oracle over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--schemas", required=True)
    p.add_argument("--instances", required=True, nargs="+",
                   help="instance JSON file(s)")
    p.add_argument("--format", default="text", choices=["text", "json"])
    p.set_defaults(func=cmd_oracle)

    return parser


def _backend_flags(p):
    p.add_argument("--backend", choices=["mock", "http"])
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.add_argument("--classifier-model")
    p.add_argument("--api-key")
    p.add_argument("--mock-script", help="mock rules JSON file")
    p.add_argument("--exemplars-file", dest="exemplars",
                   help="exemplar JSON file for fewshot")
    p.add_argument("--seed", type=int, help="exemplar sampling seed")


def resolve_config(args):
    """Merge flags over environment over config file over defaults."""
    merged = dict(_DEFAULTS)
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        merged.update(_read_config_file(path))
    if os.environ.get(API_KEY_ENV):
        merged["api_key"] = os.environ[API_KEY_ENV]
    for key in ("backend", "endpoint", "model", "classifier_model",
                "api_key", "mock_script", "exemplars", "seed", "parallelism",
                "unknown_policy"):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if getattr(args, "no_shortcut", False):
        merged["shortcut"] = False
    return merged


def _read_config_file(path):
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            try:
                import tomli as tomllib
            except ModuleNotFoundError as exc:
                raise UsageError(
                    "TOML config requires Python 3.11+ or tomli") from exc
        with open(path, "rb") as f:
            return tomllib.load(f)
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _make_backends(conf):
    if conf["backend"] == "mock":
        if conf["mock_script"]:
            backend = MockBackend.from_file(conf["mock_script"],
                                            default=conf["mock_default"])
        else:
            backend = MockBackend(default=conf["mock_default"])
        return Backends(strategy=backend)
    if not conf["endpoint"]:
        raise UsageError("http backend requires --endpoint (or config)")
    gen = _gen_config(conf, conf["model"])
    backend = HttpBackend.from_config(conf["endpoint"], gen,
                                      api_key=conf["api_key"])
    return Backends(strategy=backend)


def _gen_config(conf, model):
    return GenConfig(model=model, temperature=conf["temperature"],
                     max_output_tokens=conf["max_tokens"],
                     timeout=conf["timeout"], max_retries=conf["retries"],
                     parallelism=conf["parallelism"])


def _pipeline_config(conf, dataset=None):
    classifier_model = conf["classifier_model"] or conf["model"]
    exemplars = None
    if conf["exemplars"]:
        exemplars = exemplar_set_from_file(conf["exemplars"])
    elif dataset is not None:
        try:
            exemplars = select_exemplars(dataset, conf["seed"])
        except SqleqError:
            exemplars = None
    return PipelineConfig(
        strategy_cfg=_gen_config(conf, conf["model"]),
        classifier_cfg=_gen_config(conf, classifier_model),
        exemplars=exemplars,
        shortcut=conf["shortcut"],
        fail_soft=True,
    )


def _load_schema_file(path):
    if not os.path.exists(path):
        raise UsageError(f"schema file not found: {path}")
    try:
        return load_schema(path)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed schema file {path}: {exc}") from exc


class _AdHocPair:
    def __init__(self, sql1, sql2, pair_id="pair-0"):
        self.id = pair_id
        self.sql1 = sql1
        self.sql2 = sql2


# --- commands ---

def cmd_check(args):
    conf = resolve_config(args)
    schema = _load_schema_file(args.schema)
    backends = _make_backends(conf)
    cfg = _pipeline_config(conf)
    if args.strategy == "fewshot" and cfg.exemplars is None:
        raise UsageError("fewshot strategy needs --exemplars-file")
    cfg.fail_soft = False
    pair = _AdHocPair(args.sql1, args.sql2)
    verdict = check_pair(pair, schema, args.strategy, args.with_plans,
                         backends, cfg)
    print(json.dumps(verdict_to_dict(verdict), sort_keys=True))
    if verdict.label == LABEL_EQUIVALENT:
        return EXIT_EQUIVALENT
    if verdict.label == LABEL_NON_EQUIVALENT:
        return EXIT_NON_EQUIVALENT
    return EXIT_UNKNOWN


def cmd_bench(args):
    conf = resolve_config(args)
    if not os.path.exists(args.dataset):
        raise UsageError(f"dataset file not found: {args.dataset}")
    if not os.path.exists(args.schemas):
        raise UsageError(f"schemas file not found: {args.schemas}")
    dataset = load_dataset(args.dataset, args.schemas)
    backends = _make_backends(conf)
    cfg = _pipeline_config(
        conf, dataset=dataset if args.strategy == "fewshot" else None)
    if args.strategy == "fewshot" and cfg.exemplars is None:
        raise UsageError("fewshot strategy needs exemplars "
                         "(--exemplars-file or enough labeled pairs)")
    report = run_benchmark(
        dataset, args.strategy, args.with_plans, backends, cfg,
        parallelism=conf["parallelism"],
        unknown_policy=conf["unknown_policy"],
        score_exact_matches=args.score_exact_matches,
        extra_config={"seed": conf["seed"]},
    )
    write_report(report, args.format, args.out)
    metrics = report.metrics.as_dict()
    if args.format == "json":
        print(json.dumps({"out": args.out, "metrics": metrics},
                         sort_keys=True))
    else:
        print(f"wrote {args.out}")
        print(f"EQ {_fmt(metrics['eq_accuracy'])} "
              f"({metrics['eq_correct']}/{metrics['eq_total']}), "
              f"NEQ {_fmt(metrics['neq_accuracy'])} "
              f"({metrics['neq_correct']}/{metrics['neq_total']}), "
              f"GM {_fmt(metrics['gm'])}")
    return 0


def cmd_plan(args):
    schema = _load_schema_file(args.schema)
    print(plan_or_placeholder(args.sql, schema))
    return 0


def cmd_features(args):
    profile = extract_features(parse_sql(args.sql, mode="strict"))
    print(json.dumps(profile.as_dict(), sort_keys=True))
    return 0


def cmd_prompt(args):
    need_pair = args.strategy in ("basic", "cot", "fewshot", "decide")
    if need_pair and not (args.sql1 and args.sql2 and args.schema):
        raise UsageError(f"{args.strategy} prompt needs --sql1 --sql2 "
                         "--schema")
    if args.strategy == "explain" and not (args.sql1 and args.sql2 and
                                           args.schema):
        raise UsageError("explain prompt needs --sql1 --sql2 --schema")
    if args.strategy == "classify":
        if not args.text:
            raise UsageError("classify prompt needs --text")
        sys.stdout.write(build_classify(args.text).body)
        return 0

    schema = _load_schema_file(args.schema)
    pair = _AdHocPair(args.sql1, args.sql2)
    plans = None
    if args.with_plans:
        plans = (plan_or_placeholder(args.sql1, schema),
                 plan_or_placeholder(args.sql2, schema))

    if args.strategy == "basic":
        bundle = build_basic(pair, schema, plans)
    elif args.strategy == "cot":
        bundle = build_cot(pair, schema, plans)
    elif args.strategy == "fewshot":
        if not args.exemplars:
            raise UsageError("fewshot prompt needs --exemplars-file")
        bundle = build_fewshot(pair, schema, plans,
                               exemplars=exemplar_set_from_file(args.exemplars))
    elif args.strategy == "explain":
        bundle = build_explain(args.slot, pair, schema, plans)
    else:  # decide
        if not (args.expl1 and args.expl2):
            raise UsageError("decide prompt needs --expl1 --expl2")
        bundle = build_decide(pair, schema, plans, expl1=args.expl1,
                              expl2=args.expl2)
    sys.stdout.write(bundle.body)
    return 0


def cmd_oracle(args):
    if not os.path.exists(args.dataset):
        raise UsageError(f"dataset file not found: {args.dataset}")
    if not os.path.exists(args.schemas):
        raise UsageError(f"schemas file not found: {args.schemas}")
    dataset = load_dataset(args.dataset, args.schemas)
    raw_instances = []
    for path in args.instances:
        if not os.path.exists(path):
            raise UsageError(f"instance file not found: {path}")
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed instance file {path}: {exc}") from exc
        raw_instances.extend(data if isinstance(data, list) else [data])

    refuted = consistent = inconclusive = 0
    for pair in dataset.pairs:
        schema = dataset.schema_for(pair)
        instances = []
        load_errors = []
        for i, raw in enumerate(raw_instances):
            try:
                instances.append(instance_from_dict(raw, schema))
            except SqleqError as exc:
                load_errors.append(f"instance {i}: {exc}")
        if instances:
            outcome = oracle_check(pair.sql1, pair.sql2, instances)
        else:
            from .oracle import OracleOutcome
            outcome = OracleOutcome("inconclusive",
                                    errors=tuple(load_errors))
        if outcome.status == "refuted":
            refuted += 1
        elif outcome.status == "consistent":
            consistent += 1
        else:
            inconclusive += 1
        if args.format == "json":
            print(json.dumps({
                "pair_id": pair.id,
                "status": outcome.status,
                "witness_index": outcome.witness_index,
                "reason": outcome.reason,
                "errors": list(outcome.errors),
            }, sort_keys=True))
        else:
            detail = ""
            if outcome.status == "refuted":
                detail = f" (instance {outcome.witness_index}: " \
                         f"{outcome.reason})"
            elif outcome.errors:
                detail = f" ({'; '.join(outcome.errors)})"
            print(f"{pair.id}: {outcome.status.capitalize()}{detail}")
    print(f"refuted {refuted}, consistent {consistent}, "
          f"inconclusive {inconclusive}", file=sys.stderr)
    return 0


def _fmt(value):
    return "n/a" if value is None else f"{value:.4f}"


if __name__ == "__main__":
    sys.exit(main())

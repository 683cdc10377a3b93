"""Prompt construction for the four strategies and the classifier stage.

Templates live under templates/ with <<MARKER>> slots; substitution is
single-pass, so inserted content is never rescanned (a query containing
a marker or a section header stays verbatim). All bodies use LF newlines
with exactly one blank line between sections, end with the Answer header
plus a newline -- except the classifier prompt, which ends at the header.
"""

import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import BadExemplarSet, EmptyExplanation, InsufficientPairs
from .schema import SchemaDef, serialize_schema

EQUIVALENT_TEXT = "Equivalent"
NON_EQUIVALENT_TEXT = "Non Equivalent"
UNKNOWN_TEXT = "Unknown"

_FALLBACK_EXPLANATIONS = {
    "EQ": "Both queries produce the same result on every instance of the "
          "given schema.",
    "NEQ": "There is an instance of the given schema on which the two "
           "queries produce different results.",
}


@dataclass(frozen=True)
class PromptBundle:
    strategy: str   # basic | cot | fewshot | multistage-explain |
                    # multistage-decide | classify
    stage: int
    body: str
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Exemplar:
    schema_text: str
    sql1: str
    sql2: str
    label: str       # EQ | NEQ
    explanation: str


@dataclass(frozen=True)
class ExemplarSet:
    exemplars: tuple
    excluded_ids: tuple = ()

    def __post_init__(self):
        if len(self.exemplars) != 4:
            raise BadExemplarSet(
                f"need exactly 4 exemplars, got {len(self.exemplars)}")
        labels = sorted(e.label for e in self.exemplars)
        if labels != ["EQ", "EQ", "NEQ", "NEQ"]:
            raise BadExemplarSet(
                "exemplars must be two equivalent and two non-equivalent "
                f"pairs, got {labels}")


def exemplar_set_from_file(path):
    """Exemplar JSON file: list of {schema, sql1, sql2, label, explanation}."""
    with open(path, encoding="utf-8") as f:
        entries = json.load(f)
    exemplars = tuple(
        Exemplar(schema_text=e["schema"], sql1=e["sql1"], sql2=e["sql2"],
                 label=e["label"], explanation=e["explanation"])
        for e in entries
    )
    return ExemplarSet(exemplars=exemplars)


def select_exemplars(dataset, seed, explanations=None):
    """Sample a fixed 2 EQ + 2 NEQ exemplar set from a dataset.

    Deterministic for a given (dataset, seed). Sampled pairs are recorded
    in `excluded_ids` so the caller drops them from the scored split.
    Explanations come from `explanations[pair_id]` when provided, else a
    fixed per-label text.
    """
    explanations = explanations or {}
    scored = [p for p in dataset.pairs if not p.exact and p.label]
    eq_pool = sorted((p for p in scored if p.label == "EQ"), key=lambda p: p.id)
    neq_pool = sorted((p for p in scored if p.label == "NEQ"),
                      key=lambda p: p.id)
    if len(eq_pool) < 2 or len(neq_pool) < 2:
        raise InsufficientPairs(
            f"need at least 2 pairs per class, have {len(eq_pool)} EQ / "
            f"{len(neq_pool)} NEQ")
    rng = random.Random(seed)
    picked = rng.sample(eq_pool, 2) + rng.sample(neq_pool, 2)
    exemplars = []
    for pair in picked:
        schema = dataset.schemas[pair.schema_name]
        explanation = explanations.get(pair.id) or \
            getattr(pair, "explanation", None) or \
            _FALLBACK_EXPLANATIONS[pair.label]
        exemplars.append(Exemplar(
            schema_text=serialize_schema(schema), sql1=pair.sql1,
            sql2=pair.sql2, label=pair.label, explanation=explanation))
    return ExemplarSet(exemplars=tuple(exemplars),
                       excluded_ids=tuple(p.id for p in picked))


# --- builders ---

def build_basic(pair, schema, plans=None):
    body = _fill(_template("basic"), {
        "SCHEMA": _schema_text(schema),
        "SQL_BLOCK": _pair_sql_block(pair, plans),
    })
    return PromptBundle("basic", 1, body, meta=_meta(pair))


def build_cot(pair, schema, plans=None):
    body = _fill(_template("cot"), {
        "SCHEMA": _schema_text(schema),
        "SQL_BLOCK": _pair_sql_block(pair, plans),
    })
    return PromptBundle("cot", 1, body, meta=_meta(pair))


def build_fewshot(pair, schema, plans=None, exemplars=None):
    if not isinstance(exemplars, ExemplarSet):
        raise BadExemplarSet("few-shot prompting requires an ExemplarSet")
    blocks = []
    for i, exemplar in enumerate(exemplars.exemplars, start=1):
        label_text = EQUIVALENT_TEXT if exemplar.label == "EQ" \
            else NON_EQUIVALENT_TEXT
        blocks.append(_fill(_template("fewshot_example"), {
            "NUMBER": str(i),
            "SCHEMA": exemplar.schema_text,
            "SQL_BLOCK": _sql_block(exemplar.sql1, exemplar.sql2, None),
            "LABEL": label_text,
            "EXPLANATION": exemplar.explanation,
        }).rstrip("\n"))
    body = _fill(_template("fewshot"), {
        "EXAMPLES": "\n\n".join(blocks),
        "SCHEMA": _schema_text(schema),
        "SQL_BLOCK": _pair_sql_block(pair, plans),
    })
    return PromptBundle("fewshot", 1, body, meta=_meta(pair))


def build_explain(slot, pair, schema, plans=None):
    """Stage 1 of multi-stage prompting: describe one query of the pair."""
    if slot not in (1, 2):
        raise ValueError(f"slot must be 1 or 2, got {slot!r}")
    sql = pair.sql1 if slot == 1 else pair.sql2
    plan = None
    if plans is not None:
        _check_plans(plans)
        plan = plans[slot - 1]
    block = f"[SQL_{slot}] {sql}"
    if plan is not None:
        block += f"\n{plan}"
    body = _fill(_template("explain"), {
        "SLOT": f"SQL_{slot}",
        "SCHEMA": _schema_text(schema),
        "SQL_BLOCK": block,
    })
    return PromptBundle("multistage-explain", 1, body,
                        meta=_meta(pair, slot=slot))


def build_decide(pair, schema, plans=None, expl1="", expl2=""):
    """Stage 2 of multi-stage prompting: decide using stage-1 explanations."""
    if not expl1.strip() or not expl2.strip():
        raise EmptyExplanation("both stage-1 explanations are required")
    body = _fill(_template("decide"), {
        "SCHEMA": _schema_text(schema),
        "SQL_BLOCK": _pair_sql_block(pair, plans),
        "EXPLANATION_1": expl1,
        "EXPLANATION_2": expl2,
    })
    return PromptBundle("multistage-decide", 2, body, meta=_meta(pair))


def build_classify(raw, stage=2, meta=None):
    """Wrap strategy output in the three-way classification prompt."""
    if not raw:
        raise ValueError("classifier input must be non-empty")
    body = _fill(_template("classify"), {"TEXT": raw})
    return PromptBundle("classify", stage, body, meta=dict(meta or {}))


# --- internals ---

def _template(name):
    return resources.files("sqleq").joinpath("templates", f"{name}.txt") \
        .read_text(encoding="utf-8")


def _fill(template, mapping):
    """Single-pass marker substitution; inserted text is never rescanned."""
    pattern = re.compile("|".join(f"<<{key}>>" for key in mapping))
    return pattern.sub(lambda m: mapping[m.group(0)[2:-2]], template)


def _schema_text(schema):
    if isinstance(schema, SchemaDef):
        return serialize_schema(schema)
    return schema


def _check_plans(plans):
    if len(plans) != 2 or any(p is None for p in plans):
        raise ValueError("plans must be provided for both queries or neither")


def _pair_sql_block(pair, plans):
    return _sql_block(pair.sql1, pair.sql2, plans)


def _sql_block(sql1, sql2, plans):
    if plans is None:
        return f"[SQL_1] {sql1}\n\n[SQL_2] {sql2}"
    _check_plans(plans)
    return (f"[SQL_1] {sql1}\n{plans[0]}"
            f"\n\n[SQL_2] {sql2}\n{plans[1]}")


def _meta(pair, **extra):
    meta = {"pair_id": getattr(pair, "id", None)}
    meta.update(extra)
    return meta

"""Write the synthetic benchmark fixtures to a directory.

Produces the corpus-shaped datasets used by the test suite and the demo
scripts: the 1034-pair exact-match/difficulty dataset, the 499-pair
question-tagged dataset, schema files, a scripted mock backend, a
witness database instance, and the few-shot exemplar file.

Usage:
    python scripts/make_fixtures.py [out_dir]
"""

import json
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))  # shared fixture builders
sys.path.insert(0, str(ROOT / "src"))

import datafix  # noqa: E402

WITNESS_INSTANCE = {
    "tables": {
        "batting": {
            "columns": ["playerid", "yearid", "cs"],
            "rows": [["p1", 2000, 2], ["p1", 2001, 3],
                     ["p2", 2000, None], ["p3", 1999, 7]],
        },
        "people": {
            "columns": ["playerid", "namefirst", "namelast"],
            "rows": [["p1", "Alice", "Smith"], ["p2", "Bo", "Jones"],
                     ["p3", None, "Ng"]],
        },
    }
}

SINGLE_ROW_INSTANCE = {
    "tables": {
        "batting": {
            "columns": ["playerid", "yearid", "cs"],
            "rows": [["p1", 2000, 2], ["p2", 2001, 5]],
        },
        "people": {
            "columns": ["playerid", "namefirst", "namelast"],
            "rows": [["p1", "Alice", "Smith"], ["p2", "Bo", "Jones"]],
        },
    }
}


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record) + "\n")


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)

    write_jsonl(out_dir / "difficulty_corpus.jsonl", datafix.difficulty_records())
    (out_dir / "toy_schemas.json").write_text(
        json.dumps(datafix.TOY_SCHEMAS, indent=2))

    write_jsonl(out_dir / "questions.jsonl", datafix.question_records())
    (out_dir / "question_schemas.json").write_text(
        json.dumps(datafix.QUESTION_SCHEMAS, indent=2))

    (out_dir / "mock_strong_model.json").write_text(
        json.dumps(datafix.scripted_question_rules(), indent=2))

    (out_dir / "witness_instance.json").write_text(
        json.dumps(WITNESS_INSTANCE, indent=2))
    (out_dir / "single_row_instance.json").write_text(
        json.dumps(SINGLE_ROW_INSTANCE, indent=2))

    shutil.copy(ROOT / "tests" / "fixtures" / "exemplars.json",
                out_dir / "exemplars.json")

    for name in sorted(p.name for p in out_dir.iterdir()):
        print(f"wrote {out_dir / name}")


if __name__ == "__main__":
    main()

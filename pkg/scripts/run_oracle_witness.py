"""Oracle demo: refute a non-equivalent pair with a witness instance.

The pair aggregates caught-stealing counts per player (CTE variant)
versus joining people to raw batting rows. On an instance where a player
has two batting rows the outputs differ, refuting equivalence; on a
one-row-per-player instance the pair is merely consistent.

Usage:
    python scripts/run_oracle_witness.py
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))
sys.path.insert(0, str(ROOT / "src"))

import corpusqueries as corpus  # noqa: E402
import datafix  # noqa: E402
from sqleq.executor import execute, instance_from_dict  # noqa: E402
from sqleq.oracle import oracle_check  # noqa: E402
from sqleq.parser import parse_sql  # noqa: E402
from sqleq.schema import schema_from_dict  # noqa: E402


def instance(schema, batting_rows, people_rows):
    return instance_from_dict({"tables": {
        "batting": {"columns": ["playerid", "yearid", "cs"],
                    "rows": batting_rows},
        "people": {"columns": ["playerid", "namefirst", "namelast"],
                   "rows": people_rows},
    }}, schema)


def main():
    schema = schema_from_dict(datafix.QUESTION_SCHEMAS["baseball"])
    people = [["p1", "Alice", "Smith"], ["p2", "Bo", "Jones"]]
    witness = instance(schema,
                       [["p1", 2000, 2], ["p1", 2001, 3], ["p2", 1999, 4]],
                       people)
    single = instance(schema, [["p1", 2000, 2], ["p2", 1999, 4]], people)

    for name, query in (("aggregating", corpus.CAUGHT_STEALING_CTE),
                        ("join-only", corpus.CAUGHT_STEALING_JOIN)):
        result = execute(parse_sql(query), witness)
        print(f"{name} query on witness instance -> {len(result.rows)} rows:")
        for row in result.rows:
            print(f"  {row}")

    for label, inst in (("witness", witness), ("single-row", single)):
        outcome = oracle_check(corpus.CAUGHT_STEALING_CTE,
                               corpus.CAUGHT_STEALING_JOIN, [inst])
        detail = ""
        if outcome.status == "refuted":
            detail = (f" (instance {outcome.witness_index}: "
                      f"{outcome.reason})")
        print(f"oracle on {label} instance -> {outcome.status}{detail}")


if __name__ == "__main__":
    main()

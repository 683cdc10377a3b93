import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from sqleq.schema import SchemaDef, TableDef  # noqa: E402

FIXTURES = Path(__file__).resolve().parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def baseball_schema():
    """The assignment-corpus schema used by the caught-stealing queries."""
    return SchemaDef(tables=(
        TableDef("batting", ("playerid", "yearid", "cs", "h2b", "h3b", "hr")),
        TableDef("people", ("playerid", "namefirst", "namelast",
                            "birthyear", "birthmonth", "birthday")),
        TableDef("fielding", ("playerid", "yearid")),
        TableDef("pitching", ("playerid", "yearid", "teamid")),
        TableDef("awardsshareplayers", ("playerid", "pointswon", "yearid")),
        TableDef("allstarfull", ("playerid", "yearid", "teamid", "gp")),
        TableDef("graph1", ("p1", "p2", "w")),
    ))


@pytest.fixture
def toy_schema():
    return SchemaDef(tables=(TableDef("t", ("a", "b")),))


@pytest.fixture
def golden_schema():
    """Fixed two-table schema behind every prompt golden file."""
    return SchemaDef(
        tables=(
            TableDef("people", ("playerid", "namefirst", "namelast")),
            TableDef("batting", ("playerid", "yearid", "cs")),
        ),
        foreign_keys=(("batting.playerid", "people.playerid"),),
        primary_keys=("people.playerid",),
    )


class Pair:
    """Minimal pair object for pipeline/prompt tests."""

    def __init__(self, pair_id, sql1, sql2):
        self.id = pair_id
        self.sql1 = sql1
        self.sql2 = sql2


@pytest.fixture
def golden_pair():
    return Pair("golden-1", "SELECT playerid FROM people",
                "SELECT playerid FROM batting")


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record) + "\n")
    return path

"""Execution-based equivalence testing over concrete instances.

Running both queries on an instance can only refute equivalence: a
differing result is a witness of non-equivalence, while agreement on
every provided instance is just consistency. Results compare positionally
(column names ignored) under bag semantics unless both queries carry an
outer ORDER BY, in which case row order matters.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .executor import execute, sort_key
from .errors import SqleqError
from .parser import parse_sql

REAL_REL_TOL = 1e-9
REAL_ABS_TOL = 1e-12


@dataclass(frozen=True)
class Comparison:
    identical: bool
    reason: Optional[str] = None


@dataclass(frozen=True)
class OracleOutcome:
    status: str  # refuted | consistent | inconclusive
    witness_index: Optional[int] = None
    reason: Optional[str] = None
    errors: tuple = field(default_factory=tuple)

    @property
    def refuted(self):
        return self.status == "refuted"


def compare_results(r1, r2):
    """Compare two result tables; nulls count as equal, reals compare
    with relative tolerance."""
    if r1.column_count != r2.column_count:
        return Comparison(False, "column count differs "
                          f"({r1.column_count} vs {r2.column_count})")
    if len(r1.rows) != len(r2.rows):
        return Comparison(False,
                          f"row count differs ({len(r1.rows)} vs {len(r2.rows)})")
    if r1.ordered and r2.ordered:
        rows1, rows2 = r1.rows, r2.rows
        positional = "row order"
    else:
        if r1.ordered != r2.ordered:
            warnings.warn("comparing an ordered result against an unordered "
                          "one as multisets", stacklevel=2)
        rows1 = sorted(r1.rows, key=_row_key)
        rows2 = sorted(r2.rows, key=_row_key)
        positional = "multiset contents"
    for row1, row2 in zip(rows1, rows2):
        if not _rows_equal(row1, row2):
            return Comparison(False, f"{positional} differ")
    return Comparison(True)


def oracle_check(sql1, sql2, instances):
    """Run the pair over each instance until one refutes.

    Instances carry their schema. Returns refuted(witness index) on the
    first differing instance, consistent when all agree, inconclusive
    when executions erred and none refuted.
    """
    if not instances:
        raise ValueError("oracle_check needs at least one instance")
    errors = []
    try:
        ast1 = parse_sql(sql1, mode="strict")
        ast2 = parse_sql(sql2, mode="strict")
    except SqleqError as exc:
        return OracleOutcome("inconclusive", errors=(_describe(exc),))
    for index, instance in enumerate(instances):
        try:
            r1 = execute(ast1, instance)
            r2 = execute(ast2, instance)
        except SqleqError as exc:
            errors.append(f"instance {index}: {_describe(exc)}")
            continue
        outcome = compare_results(r1, r2)
        if not outcome.identical:
            return OracleOutcome("refuted", witness_index=index,
                                 reason=outcome.reason,
                                 errors=tuple(errors))
    if errors:
        return OracleOutcome("inconclusive", errors=tuple(errors))
    return OracleOutcome("consistent")


def _describe(exc):
    return f"{type(exc).__name__}: {exc}"


def _rows_equal(row1, row2):
    for a, b in zip(row1, row2):
        if a is None and b is None:
            continue
        if a is None or b is None:
            return False
        if _both_real(a, b):
            if not math.isclose(a, b, rel_tol=REAL_REL_TOL,
                                abs_tol=REAL_ABS_TOL):
                return False
            continue
        if _is_number(a) and _is_number(b):
            if a != b:
                return False
            continue
        if isinstance(a, bool) != isinstance(b, bool):
            return False
        if type(a) is not type(b) or a != b:
            return False
    return True


def _both_real(a, b):
    return _is_number(a) and _is_number(b) and \
        (isinstance(a, float) or isinstance(b, float))


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _row_key(row):
    return tuple(sort_key(v) for v in row)

import pytest
from hypothesis import given, settings, strategies as st

import corpusqueries as corpus
from sqleq.ast_nodes import (
    ColumnRef, Cte, FuncCall, Join, Literal, SelectCore, SelectStmt, walk,
)
from sqleq.errors import SqlSyntaxError, UnsupportedConstruct
from sqleq.parser import parse_sql
from sqleq.render import render_statement


class TestBasics:
    def test_minimal_select(self):
        ast = parse_sql("SELECT 1")
        core = ast.body
        assert isinstance(core, SelectCore)
        assert len(core.items) == 1
        assert core.items[0].expr == Literal(1)
        assert core.from_item is None

    def test_assignment_cte_query_structure(self):
        ast = parse_sql(corpus.CAUGHT_STEALING_CTE)
        assert len(ast.ctes) == 1
        assert isinstance(ast.ctes[0], Cte)
        assert ast.ctes[0].name == "result"
        joins = [n for n in walk(ast) if isinstance(n, Join)]
        assert len(joins) == 1
        groups = [n for n in walk(ast)
                  if isinstance(n, SelectCore) and n.group_by]
        assert len(groups) == 1

    def test_missing_projection_offset(self):
        with pytest.raises(SqlSyntaxError) as excinfo:
            parse_sql("SELECT FROM")
        assert excinfo.value.offset == 7
        assert excinfo.value.expected == "expression"

    def test_empty_text(self):
        with pytest.raises(SqlSyntaxError):
            parse_sql("   ")

    def test_unterminated_string(self):
        with pytest.raises(SqlSyntaxError) as excinfo:
            parse_sql("SELECT 'abc")
        assert excinfo.value.offset == 7

    def test_natural_join_unsupported_in_strict(self):
        with pytest.raises(UnsupportedConstruct):
            parse_sql("SELECT * FROM t NATURAL JOIN s")

    def test_lenient_wraps_trailing(self):
        ast = parse_sql("SELECT a FROM t GARBAGE !!!", mode="lenient")
        assert ast.partial
        assert ast.trailing_text == "!!!"

    def test_strict_rejects_trailing(self):
        with pytest.raises(SqlSyntaxError):
            parse_sql("SELECT a FROM t !!!")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            parse_sql("SELECT 1", mode="fast")


class TestDialect:
    def test_recursive_flag(self):
        ast = parse_sql(corpus.PATH_EXISTS_RECURSIVE)
        assert ast.ctes[0].recursive

    def test_window_call_parsed_opaquely(self):
        ast = parse_sql("SELECT row_number() OVER (ORDER BY a) FROM t")
        call = next(n for n in walk(ast) if isinstance(n, FuncCall))
        assert call.is_window
        assert call.window_text == "(ORDER BY a)"

    def test_quoted_identifier_preserved(self):
        ast = parse_sql('SELECT "MixedCase" FROM t')
        ref = next(n for n in walk(ast) if isinstance(n, ColumnRef))
        assert ref.column == "MixedCase"
        assert ref.column_quoted

    def test_unquoted_identifier_folded(self):
        ast = parse_sql("SELECT MixedCase FROM T")
        ref = next(n for n in walk(ast) if isinstance(n, ColumnRef))
        assert ref.column == "mixedcase"
        assert not ref.column_quoted

    def test_column_ref_keeps_raw_text(self):
        ast = parse_sql("SELECT People.PlayerID FROM people")
        ref = next(n for n in walk(ast) if isinstance(n, ColumnRef))
        assert ref.raw == "People.PlayerID"
        assert (ref.table, ref.column) == ("people", "playerid")

    def test_order_direction_defaults_ascending(self):
        ast = parse_sql("SELECT a FROM t ORDER BY a, b DESC")
        assert [item.descending for item in ast.order_by] == [False, True]

    def test_intersect_binds_tighter_than_union(self):
        ast = parse_sql("SELECT a FROM t UNION SELECT b FROM s "
                        "INTERSECT SELECT c FROM u")
        assert ast.body.kind == "union"
        assert ast.body.right.kind == "intersect"

    @pytest.mark.parametrize("sql", corpus.ALL_QUERIES)
    def test_corpus_parses_strict(self, sql):
        ast = parse_sql(sql)
        assert isinstance(ast, SelectStmt)
        assert not ast.partial


class TestRoundTrip:
    @pytest.mark.parametrize("sql", corpus.ALL_QUERIES)
    def test_parse_render_parse_is_stable(self, sql):
        first = parse_sql(sql)
        rendered = render_statement(first)
        second = parse_sql(rendered)
        assert first == second
        assert render_statement(second) == rendered


_names = st.sampled_from(["a", "b", "c", "playerid", "yearid"])
_tables = st.sampled_from(["t", "s", "people", "batting"])
_ints = st.integers(min_value=-99, max_value=99)
_strings = st.text(
    alphabet=st.characters(blacklist_characters="'", min_codepoint=32,
                           max_codepoint=126),
    max_size=8)


@st.composite
def _exprs(draw, depth=0):
    if depth >= 2:
        choice = draw(st.integers(0, 2))
    else:
        choice = draw(st.integers(0, 5))
    if choice == 0:
        return str(draw(_ints))
    if choice == 1:
        return "'" + draw(_strings).replace("'", "''") + "'"
    if choice == 2:
        return draw(_names)
    if choice == 3:
        op = draw(st.sampled_from(["+", "-", "*", "=", "<", ">=", "<>"]))
        return (f"({draw(_exprs(depth + 1))} {op} "
                f"{draw(_exprs(depth + 1))})")
    if choice == 4:
        return f"COALESCE({draw(_exprs(depth + 1))}, 0)"
    return (f"CASE WHEN {draw(_exprs(depth + 1))} > 0 THEN "
            f"{draw(_exprs(depth + 1))} ELSE NULL END")


@st.composite
def _selects(draw):
    items = ", ".join(draw(st.lists(_exprs(), min_size=1, max_size=3)))
    sql = f"SELECT {items} FROM {draw(_tables)}"
    if draw(st.booleans()):
        sql += f" WHERE {draw(_exprs())} >= 1"
    if draw(st.booleans()):
        sql += f" ORDER BY {draw(_names)} DESC"
    if draw(st.booleans()):
        sql += f" LIMIT {draw(st.integers(0, 50))}"
    return sql


@settings(max_examples=200, deadline=None)
@given(_selects())
def test_generated_statements_round_trip(sql):
    first = parse_sql(sql)
    rendered = render_statement(first)
    assert parse_sql(rendered) == first

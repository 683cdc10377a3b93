"""In-memory interpreter for the supported dialect subset.

Evaluates a parsed statement against a concrete database instance:
scans, filters, all five join kinds, grouping with SUM/COUNT/AVG/MIN/MAX
(COUNT(*), DISTINCT), set operations, non-recursive CTEs, scalar/IN/
EXISTS subqueries (correlated), CASE, COALESCE, casts, arithmetic and
string concatenation.

Semantics notes:
- predicates use three-valued logic; only rows where the condition is
  True survive WHERE/ON/HAVING;
- GROUP BY, DISTINCT and set-operation deduplication treat NULLs as
  equal and compare numbers by value (1 == 1.0);
- ORDER BY uses a stable sort over the documented total order
  null < booleans < numbers < text, applied in reverse for DESC;
- aggregates skip NULLs (except COUNT(*)); SUM/AVG/MIN/MAX of no values
  is NULL, COUNT is 0.

Recursive CTEs and window functions raise UnsupportedFeature.
"""

import json
import re
from dataclasses import dataclass, field

from .ast_nodes import (
    ArrayLit, Between, Binary, Case, Cast, ColumnRef, Cte, DerivedTable,
    Exists, FuncCall, InList, InSubquery, IsNull, Join, Like, Literal,
    Quantified, SelectStmt, SetOp, Star, Subquery, TableRef, Unary, walk,
    _children as ast_children,
)
from .errors import InstanceError, RuntimeExecError, UnsupportedFeature


# --- data containers ---

@dataclass
class ResultTable:
    column_count: int
    rows: list          # list of value tuples
    ordered: bool       # outermost statement had ORDER BY


@dataclass
class DatabaseInstance:
    """Per-table row multisets conforming to a schema definition."""
    schema: object
    tables: dict = field(default_factory=dict)  # name -> (columns, rows)

    def table(self, name):
        entry = self.tables.get(name.lower())
        if entry is not None:
            return entry
        table = self.schema.find_table(name)
        if table is None:
            raise RuntimeExecError(f"unknown table {name!r}")
        return ([c.lower() for c in table.columns], [])


def instance_from_dict(data, schema):
    """Build and validate an instance from {"tables": {name: {...}}} JSON."""
    tables = {}
    for name, spec in data.get("tables", {}).items():
        table = schema.find_table(name)
        if table is None:
            raise InstanceError(f"instance table {name!r} not in schema")
        columns = [c.lower() for c in spec["columns"]]
        declared = [c.lower() for c in table.columns]
        if columns != declared:
            raise InstanceError(
                f"table {name!r} columns {columns} do not match schema "
                f"{declared}")
        rows = []
        for row in spec["rows"]:
            if len(row) != len(columns):
                raise InstanceError(
                    f"table {name!r} row arity {len(row)} != {len(columns)}")
            rows.append(tuple(row))
        tables[name.lower()] = (columns, rows)
    instance = DatabaseInstance(schema=schema, tables=tables)
    _check_primary_keys(instance)
    return instance


def load_instances(path, schema):
    """Load one instance or a list of instances from a JSON file."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if isinstance(data, list):
        return [instance_from_dict(d, schema) for d in data]
    return [instance_from_dict(data, schema)]


def _check_primary_keys(instance):
    for ref in instance.schema.primary_keys:
        table_name, _, column = ref.partition(".")
        columns, rows = instance.table(table_name)
        try:
            idx = columns.index(column.lower())
        except ValueError:
            continue
        seen = set()
        for row in rows:
            value = row[idx]
            if value is None:
                raise InstanceError(f"NULL in primary key column {ref}")
            key = _canon(value)
            if key in seen:
                raise InstanceError(f"duplicate primary key value in {ref}")
            seen.add(key)


# --- public entry point ---

def execute(ast, instance):
    """Run a statement against an instance; returns a ResultTable.

    Raises UnsupportedFeature for recursive CTEs or window calls, and
    RuntimeExecError for runtime violations.
    """
    if ast.partial:
        raise RuntimeExecError("cannot execute a partial statement")
    for node in walk(ast):
        if isinstance(node, Cte) and node.recursive:
            raise UnsupportedFeature("recursive CTE")
        if isinstance(node, FuncCall) and node.is_window:
            raise UnsupportedFeature("window function")
    relation = _exec_stmt(ast, _Env(instance), None)
    return ResultTable(column_count=len(relation.columns),
                       rows=relation.rows,
                       ordered=bool(ast.order_by))


# --- internal machinery ---

class _Relation:
    __slots__ = ("columns", "rows")

    def __init__(self, columns, rows):
        self.columns = columns
        self.rows = rows


class _Env:
    """Instance plus the CTE relations visible at this statement level."""
    __slots__ = ("instance", "ctes", "parent")

    def __init__(self, instance, ctes=None, parent=None):
        self.instance = instance
        self.ctes = ctes or {}
        self.parent = parent

    def child(self):
        return _Env(self.instance, ctes={}, parent=self)

    def lookup_cte(self, name):
        env = self
        while env is not None:
            if name in env.ctes:
                return env.ctes[name]
            env = env.parent
        return None


class _Ctx:
    """One working row: frames of (alias, column index map, values)."""
    __slots__ = ("frames", "outer", "group")

    def __init__(self, frames, outer=None, group=None):
        self.frames = frames
        self.outer = outer
        self.group = group  # list of member _Ctx when aggregating


class _Frame:
    __slots__ = ("alias", "index", "values")

    def __init__(self, alias, columns, values):
        self.alias = alias
        self.index = {c: i for i, c in enumerate(columns)}
        self.values = values


class _SortScope:
    """Resolution scope for ORDER BY: output columns, then the row ctx."""
    __slots__ = ("names", "values", "ctx")

    def __init__(self, names, values, ctx):
        self.names = names
        self.values = values
        self.ctx = ctx


def _exec_stmt(stmt, env, outer_ctx):
    env = env.child()
    for cte in stmt.ctes:
        relation = _exec_stmt(cte.query, env, None)
        if cte.columns:
            if len(cte.columns) != len(relation.columns):
                raise RuntimeExecError(
                    f"CTE {cte.name!r} column list arity mismatch")
            relation = _Relation(list(cte.columns), relation.rows)
        env.ctes[cte.name] = relation

    pairs, names = _exec_body(stmt.body, env, outer_ctx)

    if stmt.order_by:
        pairs = _sort_rows(pairs, stmt.order_by, names, env)

    rows = [out for out, _scope in pairs]

    if stmt.limit is not None:
        rows = _apply_limit(rows, stmt.limit, env)

    return _Relation(names, rows)


def _exec_body(body, env, outer_ctx):
    """Returns ([(output row, sort scope)], output names)."""
    if isinstance(body, SetOp):
        return _exec_setop(body, env, outer_ctx)
    if isinstance(body, SelectStmt):
        relation = _exec_stmt(body, env, outer_ctx)
        pairs = [(row, _SortScope(relation.columns, row, None))
                 for row in relation.rows]
        return pairs, relation.columns
    return _exec_core(body, env, outer_ctx)


def _exec_setop(op, env, outer_ctx):
    left, names = _exec_body(op.left, env, outer_ctx)
    right, right_names = _exec_body(op.right, env, outer_ctx)
    if len(names) != len(right_names):
        raise RuntimeExecError(
            f"{op.kind.upper()} arms have different column counts")
    lrows = [row for row, _ in left]
    rrows = [row for row, _ in right]

    if op.kind == "union":
        combined = lrows + rrows
        rows = combined if op.all else _dedupe_rows(combined)
    elif op.kind == "intersect":
        rcounts = _multiset(rrows)
        if op.all:
            rows = []
            for row in lrows:
                key = _canon_row(row)
                if rcounts.get(key, 0) > 0:
                    rcounts[key] -= 1
                    rows.append(row)
        else:
            rows = [row for row in _dedupe_rows(lrows)
                    if _canon_row(row) in rcounts]
    else:  # except
        rcounts = _multiset(rrows)
        if op.all:
            rows = []
            for row in lrows:
                key = _canon_row(row)
                if rcounts.get(key, 0) > 0:
                    rcounts[key] -= 1
                else:
                    rows.append(row)
        else:
            rows = [row for row in _dedupe_rows(lrows)
                    if _canon_row(row) not in rcounts]

    pairs = [(row, _SortScope(names, row, None)) for row in rows]
    return pairs, names


def _exec_core(core, env, outer_ctx):
    if core.from_item is None:
        ctxs = [_Ctx(frames=[], outer=outer_ctx)]
        relations = []
    else:
        ctxs, relations = _exec_from(core.from_item, env, outer_ctx)

    if core.where is not None:
        ctxs = [c for c in ctxs if _eval(core.where, c, env) is True]

    items = _expand_star_items(core.items, relations)
    names = [item.output_name() or f"col{i}" for i, item in enumerate(items)]

    has_aggregates = any(_find_aggregates(item.expr) for item in items)
    if core.having is not None:
        has_aggregates = has_aggregates or bool(_find_aggregates(core.having))

    if core.group_by or has_aggregates:
        groups = _group(ctxs, core.group_by, env, outer_ctx)
        if core.having is not None:
            groups = [g for g in groups if _eval(core.having, g, env) is True]
        pairs = []
        for group_ctx in groups:
            out = tuple(_eval(item.expr, group_ctx, env) for item in items)
            pairs.append((out, _SortScope(names, out, group_ctx)))
    else:
        if core.having is not None:
            ctxs = [c for c in ctxs if _eval(core.having, c, env) is True]
        pairs = []
        for ctx in ctxs:
            out = tuple(_eval(item.expr, ctx, env) for item in items)
            pairs.append((out, _SortScope(names, out, ctx)))

    if core.distinct:
        deduped = []
        seen = set()
        for out, _scope in pairs:
            key = _canon_row(out)
            if key not in seen:
                seen.add(key)
                deduped.append((out, _SortScope(names, out, None)))
        pairs = deduped

    return pairs, names


def _exec_from(item, env, outer_ctx):
    """Returns (row contexts, [(alias, columns)] scope metadata)."""
    if isinstance(item, TableRef):
        relation = env.lookup_cte(item.name)
        if relation is not None:
            columns, rows = relation.columns, relation.rows
        else:
            columns, rows = env.instance.table(item.name)
        alias = (item.alias or item.name).lower()
        lowered = [c.lower() for c in columns]
        ctxs = [_Ctx([_Frame(alias, lowered, row)], outer=outer_ctx)
                for row in rows]
        return ctxs, [(alias, lowered)]

    if isinstance(item, DerivedTable):
        relation = _exec_stmt(item.query, env, outer_ctx)
        alias = (item.alias or "subquery").lower()
        lowered = [c.lower() for c in relation.columns]
        ctxs = [_Ctx([_Frame(alias, lowered, row)], outer=outer_ctx)
                for row in relation.rows]
        return ctxs, [(alias, lowered)]

    if isinstance(item, Join):
        lctxs, lrels = _exec_from(item.left, env, outer_ctx)
        rctxs, rrels = _exec_from(item.right, env, outer_ctx)
        relations = lrels + rrels
        seen = set()
        for alias, _cols in relations:
            if alias in seen:
                raise RuntimeExecError(f"duplicate relation alias {alias!r}")
            seen.add(alias)

        def match(lc, rc):
            merged = _Ctx(lc.frames + rc.frames, outer=outer_ctx)
            if item.kind == "cross" or item.condition is None:
                return merged
            return merged if _eval(item.condition, merged, env) is True \
                else None

        null_right = [_Frame(alias, cols, tuple([None] * len(cols)))
                      for alias, cols in rrels]
        null_left = [_Frame(alias, cols, tuple([None] * len(cols)))
                     for alias, cols in lrels]

        out = []
        matched_right = [False] * len(rctxs)
        for lc in lctxs:
            any_match = False
            for j, rc in enumerate(rctxs):
                merged = match(lc, rc)
                if merged is not None:
                    any_match = True
                    matched_right[j] = True
                    out.append(merged)
            if not any_match and item.kind in ("left", "full"):
                out.append(_Ctx(lc.frames + null_right, outer=outer_ctx))
        if item.kind in ("right", "full"):
            for j, rc in enumerate(rctxs):
                if not matched_right[j]:
                    out.append(_Ctx(null_left + rc.frames, outer=outer_ctx))
        return out, relations

    raise RuntimeExecError(f"cannot evaluate FROM item {item!r}")


def _expand_star_items(items, relations):
    from .ast_nodes import SelectItem
    expanded = []
    for item in items:
        if not isinstance(item, Star):
            expanded.append(item)
            continue
        targets = relations
        if item.qualifier:
            targets = [r for r in relations
                       if r[0] == item.qualifier.lower()]
            if not targets:
                raise RuntimeExecError(
                    f"unknown relation {item.qualifier!r} for star")
        if not targets:
            raise RuntimeExecError("star projection requires a FROM clause")
        for alias, columns in targets:
            for column in columns:
                expanded.append(SelectItem(
                    expr=ColumnRef(table=alias, column=column,
                                   raw=f"{alias}.{column}")))
    return expanded


def _group(ctxs, group_by, env, outer_ctx):
    """Group contexts in first-occurrence order; NULL keys group together."""
    if not group_by:
        rep_frames = ctxs[0].frames if ctxs else []
        return [_Ctx(rep_frames, outer=outer_ctx, group=list(ctxs))]
    buckets = {}
    order = []
    for ctx in ctxs:
        key = tuple(_canon(_eval(e, ctx, env)) for e in group_by)
        if key not in buckets:
            buckets[key] = []
            order.append(key)
        buckets[key].append(ctx)
    groups = []
    for key in order:
        members = buckets[key]
        groups.append(_Ctx(members[0].frames, outer=outer_ctx, group=members))
    return groups


def _sort_rows(pairs, order_items, names, env):
    if not pairs:
        return pairs
    lowered = [n.lower() if n else n for n in names]
    keyed = []
    for out, scope in pairs:
        keys = [sort_key(_order_value(item, out, scope, lowered, env))
                for item in order_items]
        keyed.append((keys, out, scope))
    for i in range(len(order_items) - 1, -1, -1):
        keyed.sort(key=lambda entry: entry[0][i],
                   reverse=order_items[i].descending)
    return [(out, scope) for _keys, out, scope in keyed]


def _order_value(item, out, scope, lowered_names, env):
    expr = item.expr
    if isinstance(expr, Literal) and isinstance(expr.value, int) and \
            not isinstance(expr.value, bool):
        if not 1 <= expr.value <= len(out):
            raise RuntimeExecError(f"ORDER BY position {expr.value} "
                                   f"out of range")
        return out[expr.value - 1]
    if isinstance(expr, ColumnRef) and expr.table is None and \
            lowered_names.count(expr.column.lower()) == 1:
        return out[lowered_names.index(expr.column.lower())]
    if scope.ctx is None:
        raise RuntimeExecError(
            "ORDER BY expression must name an output column here")
    return _eval(expr, scope.ctx, env)


def _apply_limit(rows, limit, env):
    offset = 0
    if limit.offset is not None:
        offset = _limit_value(limit.offset, env, "OFFSET")
    if limit.count == Literal(None):
        return rows[offset:]
    count = _limit_value(limit.count, env, "LIMIT")
    return rows[offset:offset + count]


def _limit_value(expr, env, what):
    value = _eval(expr, _Ctx([], outer=None), env)
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise RuntimeExecError(f"{what} requires a non-negative integer")
    return value


# --- expression evaluation ---

def _eval(expr, ctx, env):
    if isinstance(expr, Literal):
        return expr.value

    if isinstance(expr, ColumnRef):
        return _resolve_value(expr, ctx)

    if isinstance(expr, Unary):
        value = _eval(expr.operand, ctx, env)
        if expr.op == "NOT":
            return None if value is None else (not _truthy(value))
        if value is None:
            return None
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise RuntimeExecError(f"unary {expr.op} needs a number")
        return -value if expr.op == "-" else value

    if isinstance(expr, Binary):
        return _eval_binary(expr, ctx, env)

    if isinstance(expr, IsNull):
        is_null = _eval(expr.operand, ctx, env) is None
        return (not is_null) if expr.negated else is_null

    if isinstance(expr, InList):
        value = _eval(expr.operand, ctx, env)
        result = _in_values(value,
                            [_eval(i, ctx, env) for i in expr.items])
        return _negate3(result) if expr.negated else result

    if isinstance(expr, InSubquery):
        value = _eval(expr.operand, ctx, env)
        relation = _exec_stmt(expr.query, env, ctx)
        if len(relation.columns) != 1:
            raise RuntimeExecError("IN subquery must return one column")
        result = _in_values(value, [row[0] for row in relation.rows])
        return _negate3(result) if expr.negated else result

    if isinstance(expr, Between):
        value = _eval(expr.operand, ctx, env)
        low = _eval(expr.low, ctx, env)
        high = _eval(expr.high, ctx, env)
        result = _and3(_compare("<=", low, value), _compare("<=", value, high))
        return _negate3(result) if expr.negated else result

    if isinstance(expr, Like):
        value = _eval(expr.operand, ctx, env)
        pattern = _eval(expr.pattern, ctx, env)
        if value is None or pattern is None:
            return None
        if not isinstance(value, str) or not isinstance(pattern, str):
            raise RuntimeExecError("LIKE needs text operands")
        result = bool(re.fullmatch(_like_regex(pattern), value))
        return (not result) if expr.negated else result

    if isinstance(expr, Exists):
        relation = _exec_stmt(expr.query, env, ctx)
        return bool(relation.rows)

    if isinstance(expr, Subquery):
        relation = _exec_stmt(expr.query, env, ctx)
        if len(relation.columns) != 1:
            raise RuntimeExecError("scalar subquery must return one column")
        if len(relation.rows) > 1:
            raise RuntimeExecError("scalar subquery returned more than one row")
        return relation.rows[0][0] if relation.rows else None

    if isinstance(expr, Quantified):
        return _eval_quantified(expr, ctx, env)

    if isinstance(expr, Case):
        if expr.operand is not None:
            subject = _eval(expr.operand, ctx, env)
            for cond, result in expr.whens:
                if _compare("=", subject, _eval(cond, ctx, env)) is True:
                    return _eval(result, ctx, env)
        else:
            for cond, result in expr.whens:
                if _eval(cond, ctx, env) is True:
                    return _eval(result, ctx, env)
        return _eval(expr.else_, ctx, env) if expr.else_ is not None else None

    if isinstance(expr, FuncCall):
        return _eval_call(expr, ctx, env)

    if isinstance(expr, Cast):
        return _eval_cast(_eval(expr.operand, ctx, env), expr.type_name)

    if isinstance(expr, ArrayLit):
        return tuple(_eval(i, ctx, env) for i in expr.items)

    raise RuntimeExecError(f"cannot evaluate {type(expr).__name__}")


def _resolve_value(ref, ctx):
    name = ref.column.lower()
    current = ctx
    while current is not None:
        if ref.table:
            target = ref.table.lower()
            for frame in current.frames:
                if frame.alias == target:
                    if name not in frame.index:
                        raise RuntimeExecError(
                            f"no column {ref.table}.{ref.column}")
                    return frame.values[frame.index[name]]
        else:
            hits = [frame for frame in current.frames if name in frame.index]
            if len(hits) > 1:
                raise RuntimeExecError(f"ambiguous column {ref.column!r}")
            if hits:
                return hits[0].values[hits[0].index[name]]
        current = current.outer
    raise RuntimeExecError(f"cannot resolve column {ref.raw or ref.column!r}")


def _eval_binary(expr, ctx, env):
    op = expr.op
    if op == "AND":
        return _and3(_bool3(_eval(expr.left, ctx, env)),
                     _bool3(_eval(expr.right, ctx, env)))
    if op == "OR":
        return _or3(_bool3(_eval(expr.left, ctx, env)),
                    _bool3(_eval(expr.right, ctx, env)))

    left = _eval(expr.left, ctx, env)
    right = _eval(expr.right, ctx, env)

    if op in ("=", "<>", "<", "<=", ">", ">="):
        return _compare(op, left, right)

    if op == "||":
        if isinstance(left, tuple) or isinstance(right, tuple):
            lpart = left if isinstance(left, tuple) else (left,)
            rpart = right if isinstance(right, tuple) else (right,)
            return lpart + rpart
        if left is None or right is None:
            return None
        return _text(left) + _text(right)

    if left is None or right is None:
        return None
    if not _is_number(left) or not _is_number(right):
        raise RuntimeExecError(f"operator {op} needs numeric operands")
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        if right == 0:
            raise RuntimeExecError("division by zero")
        return left / right
    if op == "%":
        if right == 0:
            raise RuntimeExecError("modulo by zero")
        return left % right
    raise RuntimeExecError(f"unknown operator {op}")


def _eval_quantified(expr, ctx, env):
    left = _eval(expr.left, ctx, env)
    if isinstance(expr.operand, Subquery):
        relation = _exec_stmt(expr.operand.query, env, ctx)
        if len(relation.columns) != 1:
            raise RuntimeExecError("quantified subquery must return one column")
        values = [row[0] for row in relation.rows]
    else:
        operand = _eval(expr.operand, ctx, env)
        if operand is None:
            return None
        if not isinstance(operand, tuple):
            raise RuntimeExecError("ANY/ALL needs a subquery or array")
        values = list(operand)

    results = [_compare(expr.op, left, v) for v in values]
    if expr.quantifier == "ANY":
        if any(r is True for r in results):
            return True
        return None if any(r is None for r in results) else False
    if any(r is False for r in results):
        return False
    return None if any(r is None for r in results) else True


def _eval_call(call, ctx, env):
    name = call.name

    if call.is_aggregate:
        if ctx.group is None:
            raise RuntimeExecError(
                f"aggregate {name.upper()} outside a grouped context")
        return _eval_aggregate(call, ctx.group, env)

    args = [_eval(a, ctx, env) for a in call.args]

    if name == "coalesce":
        for value in args:
            if value is not None:
                return value
        return None
    if name == "nullif":
        if len(args) != 2:
            raise RuntimeExecError("NULLIF takes two arguments")
        return None if _compare("=", args[0], args[1]) is True else args[0]
    if name in ("upper", "lower", "length", "abs", "round", "lpad"):
        return _eval_scalar_builtin(name, args)
    raise RuntimeExecError(f"unknown function {name!r}")


def _eval_scalar_builtin(name, args):
    if any(a is None for a in args):
        return None
    if name == "upper":
        return str(args[0]).upper()
    if name == "lower":
        return str(args[0]).lower()
    if name == "length":
        return len(str(args[0]))
    if name == "abs":
        if not _is_number(args[0]):
            raise RuntimeExecError("ABS needs a number")
        return abs(args[0])
    if name == "round":
        if not _is_number(args[0]):
            raise RuntimeExecError("ROUND needs a number")
        digits = args[1] if len(args) > 1 else 0
        return round(args[0], digits) if digits else float(round(args[0]))
    if name == "lpad":
        if len(args) < 2:
            raise RuntimeExecError("LPAD needs a value and a width")
        text = _text(args[0])
        width = args[1]
        fill = _text(args[2]) if len(args) > 2 else " "
        if not isinstance(width, int) or isinstance(width, bool) or width < 0:
            raise RuntimeExecError("LPAD width must be a non-negative integer")
        if len(text) >= width:
            return text[:width]
        pad = (fill * width)[: width - len(text)]
        return pad + text
    raise RuntimeExecError(f"unknown function {name!r}")


def _eval_aggregate(call, members, env):
    if call.star:
        return len(members)

    if len(call.args) != 1:
        raise RuntimeExecError(
            f"{call.name.upper()} takes exactly one argument")
    values = [_eval(call.args[0], member, env) for member in members]
    values = [v for v in values if v is not None]
    if call.distinct:
        deduped = []
        seen = set()
        for v in values:
            key = _canon(v)
            if key not in seen:
                seen.add(key)
                deduped.append(v)
        values = deduped

    name = call.name
    if name == "count":
        return len(values)
    if not values:
        return None
    if name == "sum":
        _require_numbers(values, "SUM")
        return sum(values)
    if name == "avg":
        _require_numbers(values, "AVG")
        return sum(values) / len(values)
    if name == "min":
        return min(values, key=sort_key)
    if name == "max":
        return max(values, key=sort_key)
    raise RuntimeExecError(f"unknown aggregate {name!r}")


def _require_numbers(values, what):
    for v in values:
        if not _is_number(v):
            raise RuntimeExecError(f"{what} needs numeric values")


def _eval_cast(value, type_name):
    base = type_name.split("(")[0].strip().lower()
    if value is None:
        return None
    try:
        if base in ("int", "integer", "bigint", "smallint"):
            if isinstance(value, bool):
                return int(value)
            if isinstance(value, float):
                return int(value)
            return int(str(value).strip())
        if base in ("real", "float", "double precision", "numeric", "decimal"):
            if isinstance(value, bool):
                return float(value)
            return float(value)
        if base in ("text", "varchar", "char", "character"):
            return _text(value)
        if base in ("boolean", "bool"):
            if isinstance(value, bool):
                return value
            if isinstance(value, (int, float)):
                return value != 0
            lowered = str(value).strip().lower()
            if lowered in ("t", "true", "1", "yes"):
                return True
            if lowered in ("f", "false", "0", "no"):
                return False
            raise ValueError(value)
    except (TypeError, ValueError) as exc:
        raise RuntimeExecError(f"cannot cast {value!r} to {base}") from exc
    raise RuntimeExecError(f"unsupported cast target {type_name!r}")


# --- value helpers ---

def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _text(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _truthy(value):
    if isinstance(value, bool):
        return value
    raise RuntimeExecError("NOT needs a boolean operand")


def _bool3(value):
    if value is None or isinstance(value, bool):
        return value
    raise RuntimeExecError("AND/OR need boolean operands")


def _and3(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _or3(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _negate3(value):
    return None if value is None else (not value)


def _compare(op, left, right):
    """Three-valued comparison with the documented cross-family order."""
    if left is None or right is None:
        return None
    if op == "=":
        return _values_equal(left, right)
    if op == "<>":
        return not _values_equal(left, right)
    lk, rk = sort_key(left), sort_key(right)
    if op == "<":
        return lk < rk
    if op == "<=":
        return lk <= rk
    if op == ">":
        return lk > rk
    if op == ">=":
        return lk >= rk
    raise RuntimeExecError(f"unknown comparison {op}")


def _values_equal(left, right):
    if isinstance(left, bool) or isinstance(right, bool):
        return isinstance(left, bool) and isinstance(right, bool) and \
            left == right
    if _is_number(left) and _is_number(right):
        return left == right
    if isinstance(left, tuple) and isinstance(right, tuple):
        return len(left) == len(right) and all(
            _values_equal(a, b) for a, b in zip(left, right))
    if type(left) is type(right):
        return left == right
    return False


def _in_values(value, candidates):
    """`value IN candidates` under three-valued logic."""
    saw_null = value is None
    for candidate in candidates:
        if candidate is None:
            saw_null = True
            continue
        if value is not None and _values_equal(value, candidate):
            return True
    return None if saw_null else False


def sort_key(value):
    """Total order over cells: null < booleans < numbers < text < arrays."""
    if value is None:
        return (0, False)
    if isinstance(value, bool):
        return (1, value)
    if isinstance(value, (int, float)):
        return (2, value)
    if isinstance(value, str):
        return (3, value)
    if isinstance(value, tuple):
        return (4, tuple(sort_key(v) for v in value))
    raise RuntimeExecError(f"cannot order value {value!r}")


def _canon(value):
    """Canonical key for grouping/dedup: NULLs equal, 1 == 1.0."""
    if value is None:
        return ("null",)
    if isinstance(value, bool):
        return ("bool", value)
    if isinstance(value, (int, float)):
        return ("num", float(value))
    if isinstance(value, str):
        return ("txt", value)
    if isinstance(value, tuple):
        return ("arr", tuple(_canon(v) for v in value))
    raise RuntimeExecError(f"cannot hash value {value!r}")


def _canon_row(row):
    return tuple(_canon(v) for v in row)


def _multiset(rows):
    counts = {}
    for row in rows:
        key = _canon_row(row)
        counts[key] = counts.get(key, 0) + 1
    return counts


def _dedupe_rows(rows):
    seen = set()
    out = []
    for row in rows:
        key = _canon_row(row)
        if key not in seen:
            seen.add(key)
            out.append(row)
    return out


def _find_aggregates(expr):
    calls = []
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, (Subquery, InSubquery, Exists)):
            if isinstance(node, InSubquery):
                stack.append(node.operand)
            continue
        if isinstance(node, FuncCall) and node.is_aggregate:
            calls.append(node)
            continue
        stack.extend(ast_children(node))
    return calls


def _like_regex(pattern):
    out = []
    for ch in pattern:
        if ch == "%":
            out.append(".*")
        elif ch == "_":
            out.append(".")
        else:
            out.append(re.escape(ch))
    return "".join(out)

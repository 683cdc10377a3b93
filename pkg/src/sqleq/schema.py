"""Database schema model and its prompt-text serialization.

Schema JSON format:

    {
      "tables": [{"name": "t", "columns": ["a", "b"]}, ...],
      "foreign_keys": [["t1.x", "t2.y"], ...],
      "primary_keys": ["t.a", ...]
    }
"""

import json
from dataclasses import dataclass, field

from .errors import SchemaError


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple

    def has_column(self, column):
        lowered = column.lower()
        return any(c.lower() == lowered for c in self.columns)


@dataclass(frozen=True)
class SchemaDef:
    tables: tuple
    foreign_keys: tuple = field(default_factory=tuple)  # (("t.c", "t.c"), ...)
    primary_keys: tuple = field(default_factory=tuple)  # ("t.c", ...)

    def __post_init__(self):
        seen = set()
        for table in self.tables:
            lowered = table.name.lower()
            if lowered in seen:
                raise SchemaError(f"duplicate table name {table.name!r}")
            seen.add(lowered)
            if not table.columns:
                raise SchemaError(f"table {table.name!r} has no columns")
        for left, right in self.foreign_keys:
            self._check_ref(left, "foreign key")
            self._check_ref(right, "foreign key")
        for ref in self.primary_keys:
            self._check_ref(ref, "primary key")

    def _check_ref(self, ref, what):
        table_name, _, column = ref.partition(".")
        if not column:
            raise SchemaError(f"{what} {ref!r} is not of the form table.column")
        table = self.find_table(table_name)
        if table is None:
            raise SchemaError(f"{what} {ref!r} names unknown table")
        if not table.has_column(column):
            raise SchemaError(f"{what} {ref!r} names unknown column")

    def find_table(self, name):
        lowered = name.lower()
        for table in self.tables:
            if table.name.lower() == lowered:
                return table
        return None


def schema_from_dict(data):
    tables = tuple(
        TableDef(name=t["name"], columns=tuple(t["columns"]))
        for t in data.get("tables", [])
    )
    foreign_keys = tuple(tuple(fk) for fk in data.get("foreign_keys", []))
    primary_keys = tuple(data.get("primary_keys", []))
    return SchemaDef(tables=tables, foreign_keys=foreign_keys,
                     primary_keys=primary_keys)


def load_schema(path):
    with open(path, encoding="utf-8") as f:
        return schema_from_dict(json.load(f))


def load_schemas(path):
    """Load a {schema_name: schema} file used by benchmark datasets."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    return {name: schema_from_dict(spec) for name, spec in data.items()}


def serialize_schema(schema):
    """Render the schema block inserted into prompts.

    One line per table in schema order, a blank line, then the key lists.
    Empty lists keep their brackets: `Foreign_keys = [  ]`.
    """
    lines = [
        f"Table {t.name}, columns = [ {', '.join(('*',) + t.columns)} ]"
        for t in schema.tables
    ]
    fks = ", ".join(f"{left} = {right}" for left, right in schema.foreign_keys)
    pks = ", ".join(schema.primary_keys)
    return (
        "\n".join(lines)
        + f"\n\nForeign_keys = [ {fks} ]"
        + f"\nPrimary_keys = [ {pks} ]"
    )

"""The twelve-table relational layout and the in-memory Batch.

The layout is process-agnostic: event/object types and attribute definitions
live in rows, never in table or column names, so ingesting a new process
changes row counts only. Every table has a text primary key ``id``; foreign
keys are ``<referenced table singular>_id`` columns. Attribute and qualifier
values are stored as text, with the declared datatype kept as metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field

TABLES = (
    "event_types",
    "event_attributes",
    "events",
    "event_attribute_values",
    "object_types",
    "object_attributes",
    "objects",
    "object_attribute_values",
    "relation_qualifiers",
    "object_to_object",
    "event_to_object",
    "event_to_object_attribute_value",
)

TABLE_COLUMNS = {
    "event_types": ("id", "description"),
    "event_attributes": ("id", "event_type_id", "description", "datatype"),
    "events": ("id", "event_type_id", "timestamp", "description"),
    "event_attribute_values": (
        "id",
        "event_id",
        "event_attribute_id",
        "attribute_value",
    ),
    "object_types": ("id", "description"),
    "object_attributes": ("id", "object_type_id", "description", "datatype"),
    "objects": ("id", "object_type_id", "description"),
    "object_attribute_values": (
        "id",
        "object_id",
        "object_attribute_id",
        "timestamp",
        "attribute_value",
    ),
    "relation_qualifiers": ("id", "description", "datatype"),
    "object_to_object": (
        "id",
        "source_object_id",
        "target_object_id",
        "timestamp",
        "qualifier_id",
        "qualifier_value",
    ),
    "event_to_object": (
        "id",
        "event_id",
        "object_id",
        "qualifier_id",
        "qualifier_value",
    ),
    "event_to_object_attribute_value": (
        "id",
        "event_id",
        "object_attribute_value_id",
        "qualifier_id",
        "qualifier_value",
    ),
}

# (table, column) -> referenced table. Checked at quality checkpoints, not at
# write time: late-arriving references are a feature of batch ingestion.
FOREIGN_KEYS = {
    ("event_attributes", "event_type_id"): "event_types",
    ("events", "event_type_id"): "event_types",
    ("event_attribute_values", "event_id"): "events",
    ("event_attribute_values", "event_attribute_id"): "event_attributes",
    ("object_attributes", "object_type_id"): "object_types",
    ("objects", "object_type_id"): "object_types",
    ("object_attribute_values", "object_id"): "objects",
    ("object_attribute_values", "object_attribute_id"): "object_attributes",
    ("object_to_object", "source_object_id"): "objects",
    ("object_to_object", "target_object_id"): "objects",
    ("object_to_object", "qualifier_id"): "relation_qualifiers",
    ("event_to_object", "event_id"): "events",
    ("event_to_object", "object_id"): "objects",
    ("event_to_object", "qualifier_id"): "relation_qualifiers",
    ("event_to_object_attribute_value", "event_id"): "events",
    (
        "event_to_object_attribute_value",
        "object_attribute_value_id",
    ): "object_attribute_values",
    ("event_to_object_attribute_value", "qualifier_id"): "relation_qualifiers",
}

TIMESTAMP_COLUMNS = (
    ("events", "timestamp"),
    ("object_attribute_values", "timestamp"),
    ("object_to_object", "timestamp"),
)

DATATYPES = ("string", "integer", "float", "boolean", "timestamp")


def _empty_rows() -> dict:
    return {table: [] for table in TABLES}


@dataclass
class Batch:
    """An in-memory set of rows for any subset of the twelve tables.

    The unit of ingestion. Construction is permissive (duplicate ids and
    dangling references are caught by the staging checkpoint or by
    append_batch, not here).
    """

    rows: dict = field(default_factory=_empty_rows)

    def add(self, table: str, **columns) -> dict:
        """Append one row; missing columns become None."""
        cols = TABLE_COLUMNS.get(table)
        if cols is None:
            raise KeyError(f"unknown table: {table}")
        unknown = set(columns) - set(cols)
        if unknown:
            raise KeyError(
                f"unknown columns for {table}: {', '.join(sorted(unknown))}"
            )
        row = {col: columns.get(col) for col in cols}
        self.rows[table].append(row)
        return row

    def counts(self) -> dict:
        return {table: len(rows) for table, rows in self.rows.items() if rows}

    def total_rows(self) -> int:
        return sum(len(rows) for rows in self.rows.values())

    def is_empty(self) -> bool:
        return self.total_rows() == 0

    def canonicalize(self) -> "Batch":
        """Sort rows by id within each table and drop exact duplicates,
        in place. Rows sharing an id with different content are kept for
        the quality checks to flag. Returns self."""
        for table in TABLES:
            seen = set()
            unique = []
            for row in self.rows[table]:
                key = tuple(sorted((k, v) for k, v in row.items()))
                if key in seen:
                    continue
                seen.add(key)
                unique.append(row)
            unique.sort(
                key=lambda row: (
                    row.get("id") or "",
                    tuple(str(v) for v in row.values()),
                )
            )
            self.rows[table] = unique
        return self

    def merge(self, other: "Batch") -> "Batch":
        """Append all rows of other into this batch. Returns self."""
        for table in TABLES:
            self.rows[table].extend(dict(row) for row in other.rows[table])
        return self

    def copy(self) -> "Batch":
        clone = Batch()
        for table in TABLES:
            clone.rows[table] = [dict(row) for row in self.rows[table]]
        return clone

"""Durable hub store: append-only ingestion and the ordered queries.

Backed by a single SQLite file holding the twelve tables plus a small meta
table (layout version, batch clock). All columns are text; referential
integrity is deliberately NOT enforced at write time so that tables can be
ingested in any order across batches. Rows are never updated or deleted.
"""

from __future__ import annotations

import os
import sqlite3
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ochub.schema import TABLES, TABLE_COLUMNS, TIMESTAMP_COLUMNS
from ochub.util import TimestampError, normalize_timestamp

LAYOUT_VERSION = "1"

_TS_COLS = {table: col for table, col in TIMESTAMP_COLUMNS}

_INDEXES = (
    ("idx_e2o_object", "event_to_object", "object_id"),
    ("idx_e2o_event", "event_to_object", "event_id"),
    ("idx_oav_object", "object_attribute_values", "object_id"),
    ("idx_eav_event", "event_attribute_values", "event_id"),
    ("idx_o2o_source", "object_to_object", "source_object_id"),
    ("idx_e2oav_event", "event_to_object_attribute_value", "event_id"),
)


class StoreError(Exception):
    """Base class for store failures."""


class StoreNotFoundError(StoreError):
    """No store exists at the given path and create_if_missing is off."""


class StoreLayoutError(StoreError):
    """Existing file is not a hub store or has an unsupported layout."""


class UnknownIdError(StoreError):
    """A query referenced an id that does not exist in the store."""


class AppendConflictError(StoreError):
    """A batch row's id already exists with different content.

    Signals an upstream pipeline bug; the whole batch is rolled back.
    """

    def __init__(self, conflicts):
        self.conflicts = conflicts
        first = conflicts[0]
        suffix = f" (+{len(conflicts) - 1} more)" if len(conflicts) > 1 else ""
        super().__init__(
            f"id {first[1]!r} already exists in {first[0]} "
            f"with different content{suffix}"
        )


@dataclass(frozen=True)
class TimelineEntry:
    """One step in an object's history: an event participation or a
    standalone attribute update. Updates sharing a timestamp with a related
    event are merged into the event entries at that timestamp."""

    kind: str  # "event" | "update"
    timestamp: str
    event_id: Optional[str] = None
    event_type_id: Optional[str] = None
    updated_attribute_ids: tuple = ()
    value_ids: tuple = ()


@dataclass
class StatsReport:
    """Row counts broken down the way analysts ask for them."""

    table_counts: dict = field(default_factory=dict)
    events_per_type: dict = field(default_factory=dict)
    objects_per_type: dict = field(default_factory=dict)
    e2o_per_qualifier: dict = field(default_factory=dict)
    o2o_per_qualifier: dict = field(default_factory=dict)
    e2oav_per_qualifier: dict = field(default_factory=dict)
    e2o_per_type_pair: dict = field(default_factory=dict)
    event_values_per_attribute: dict = field(default_factory=dict)
    object_values_per_attribute: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "table_counts": dict(self.table_counts),
            "events_per_type": dict(self.events_per_type),
            "objects_per_type": dict(self.objects_per_type),
            "e2o_per_qualifier": dict(self.e2o_per_qualifier),
            "o2o_per_qualifier": dict(self.o2o_per_qualifier),
            "e2oav_per_qualifier": dict(self.e2oav_per_qualifier),
            "e2o_per_type_pair": [
                {"event_type_id": et, "object_type_id": ot, "count": n}
                for (et, ot), n in sorted(self.e2o_per_type_pair.items())
            ],
            "event_values_per_attribute": dict(self.event_values_per_attribute),
            "object_values_per_attribute": dict(self.object_values_per_attribute),
        }


def _db_path(path: str) -> str:
    if os.path.isdir(path):
        return os.path.join(path, "hub.db")
    return path


def open_store(path: str, create_if_missing: bool = True) -> "HubStore":
    """Open (or create) a hub store at a filesystem location.

    ``path`` is the database file; an existing directory is also accepted,
    in which case ``hub.db`` inside it is used.
    """
    db_file = _db_path(path)
    exists = os.path.exists(db_file)
    if not exists and not create_if_missing:
        raise StoreNotFoundError(f"store not found: {path}")
    try:
        conn = sqlite3.connect(db_file)
    except sqlite3.Error as exc:
        raise StoreError(f"cannot open store at {path}: {exc}") from exc
    conn.row_factory = sqlite3.Row
    try:
        if exists:
            _check_layout(conn, db_file)
        else:
            _create_layout(conn)
    except Exception:
        conn.close()
        raise
    return HubStore(db_file, conn)


def _create_layout(conn: sqlite3.Connection) -> None:
    with conn:
        for table, cols in TABLE_COLUMNS.items():
            defs = ", ".join(
                f"{col} TEXT PRIMARY KEY" if col == "id" else f"{col} TEXT"
                for col in cols
            )
            conn.execute(f"CREATE TABLE {table} ({defs})")
        for name, table, col in _INDEXES:
            conn.execute(f"CREATE INDEX {name} ON {table} ({col})")
        conn.execute("CREATE TABLE hub_meta (key TEXT PRIMARY KEY, value TEXT)")
        conn.execute(
            "INSERT INTO hub_meta VALUES ('layout_version', ?), ('batch_clock', '0')",
            (LAYOUT_VERSION,),
        )


def _check_layout(conn: sqlite3.Connection, db_file: str) -> None:
    try:
        row = conn.execute(
            "SELECT value FROM hub_meta WHERE key = 'layout_version'"
        ).fetchone()
    except sqlite3.Error as exc:
        raise StoreLayoutError(f"not a hub store: {db_file}") from exc
    if row is None or row["value"] != LAYOUT_VERSION:
        found = None if row is None else row["value"]
        raise StoreLayoutError(
            f"unrecognized layout version {found!r} in {db_file}"
        )


class HubStore:
    """Handle on a durable twelve-table store.

    Single writer, multiple readers: write calls must be externally
    serialized, reads opened after append_batch returns see the new rows.
    """

    def __init__(self, path: str, conn: sqlite3.Connection):
        self.path = path
        self._conn = conn

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "HubStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- reads ----------------------------------------------------------

    def row_count(self, table: str) -> int:
        self._require_table(table)
        return self._conn.execute(f"SELECT COUNT(*) FROM {table}").fetchone()[0]

    def table_rows(self, table: str) -> Iterator[dict]:
        """All rows of a table as dicts, ordered by id."""
        self._require_table(table)
        cursor = self._conn.execute(f"SELECT * FROM {table} ORDER BY id")
        for row in cursor:
            yield dict(row)

    def get_row(self, table: str, row_id: str) -> Optional[dict]:
        self._require_table(table)
        row = self._conn.execute(
            f"SELECT * FROM {table} WHERE id = ?", (row_id,)
        ).fetchone()
        return dict(row) if row is not None else None

    def has_id(self, table: str, row_id: str) -> bool:
        return self.get_row(table, row_id) is not None

    def id_set(self, table: str) -> set:
        self._require_table(table)
        return {r[0] for r in self._conn.execute(f"SELECT id FROM {table}")}

    def table_inventory(self) -> dict:
        """Physical table/column layout, for schema-immutability checks."""
        inventory = {}
        for table in TABLES:
            cols = self._conn.execute(f"PRAGMA table_info({table})").fetchall()
            inventory[table] = tuple(c["name"] for c in cols)
        return inventory

    def batch_clock(self) -> int:
        row = self._conn.execute(
            "SELECT value FROM hub_meta WHERE key = 'batch_clock'"
        ).fetchone()
        return int(row["value"])

    def connection(self) -> sqlite3.Connection:
        """Read-only use by sibling modules (queries, exports)."""
        return self._conn

    # -- append-only ingestion -------------------------------------------

    def append_batch(self, batch) -> dict:
        """Append a batch atomically; returns rows-added counts per table.

        Re-appending rows whose ids already exist with identical content is
        a no-op. An id that exists (in the store or earlier in the batch)
        with different content aborts the whole batch.
        """
        prepared = {}
        conflicts = []
        for table in TABLES:
            rows = batch.rows.get(table) or []
            if not rows:
                continue
            cols = TABLE_COLUMNS[table]
            ts_col = _TS_COLS.get(table)
            seen = {}
            fresh = []
            for raw in rows:
                row = {col: raw.get(col) for col in cols}
                if ts_col and row[ts_col] is not None:
                    try:
                        row[ts_col] = normalize_timestamp(row[ts_col])
                    except TimestampError:
                        pass  # kept verbatim; the quality checkpoint flags it
                key = row["id"]
                content = tuple(row[col] for col in cols)
                if key in seen:
                    if seen[key] != content:
                        conflicts.append((table, key))
                    continue
                seen[key] = content
                fresh.append(row)
            if fresh:
                existing = self._existing_rows(table, [r["id"] for r in fresh])
                to_insert = []
                for row in fresh:
                    current = existing.get(row["id"])
                    if current is None:
                        to_insert.append(row)
                    elif current != tuple(row[col] for col in cols):
                        conflicts.append((table, row["id"]))
                if to_insert:
                    prepared[table] = to_insert
        if conflicts:
            raise AppendConflictError(conflicts)

        summary = {table: 0 for table in TABLES}
        with self._conn:
            for table, rows in prepared.items():
                cols = TABLE_COLUMNS[table]
                placeholders = ", ".join("?" for _ in cols)
                self._conn.executemany(
                    f"INSERT INTO {table} ({', '.join(cols)}) VALUES ({placeholders})",
                    [tuple(row[col] for col in cols) for row in rows],
                )
                summary[table] = len(rows)
            self._conn.execute(
                "UPDATE hub_meta SET value = CAST(value AS INTEGER) + 1 "
                "WHERE key = 'batch_clock'"
            )
        return summary

    def _existing_rows(self, table: str, ids: list) -> dict:
        cols = TABLE_COLUMNS[table]
        out = {}
        for start in range(0, len(ids), 500):
            chunk = ids[start : start + 500]
            placeholders = ", ".join("?" for _ in chunk)
            for row in self._conn.execute(
                f"SELECT * FROM {table} WHERE id IN ({placeholders})", chunk
            ):
                out[row["id"]] = tuple(row[col] for col in cols)
        return out

    # -- ordered queries --------------------------------------------------

    def object_timeline(self, object_id: str) -> list:
        """Ordered history of one object: event participations plus
        attribute-value updates.

        Events are sorted by (timestamp, event_type_id, event_id); the
        type/id tie-break serializes simultaneous events. Attribute updates
        sharing a timestamp with a related event are merged into the event
        entries at that timestamp; the rest become standalone entries.
        """
        if not self.has_id("objects", object_id):
            raise UnknownIdError(f"unknown object id: {object_id}")
        events = self._conn.execute(
            "SELECT DISTINCT e.id, e.event_type_id, e.timestamp "
            "FROM events e JOIN event_to_object r ON r.event_id = e.id "
            "WHERE r.object_id = ?",
            (object_id,),
        ).fetchall()
        updates = self._conn.execute(
            "SELECT id, object_attribute_id, timestamp "
            "FROM object_attribute_values WHERE object_id = ?",
            (object_id,),
        ).fetchall()

        by_ts: dict = {}
        for row in updates:
            slot = by_ts.setdefault(row["timestamp"], ([], []))
            slot[0].append(row["object_attribute_id"])
            slot[1].append(row["id"])

        event_ts = {row["timestamp"] for row in events}
        entries = []
        for row in sorted(
            events, key=lambda r: (r["timestamp"], r["event_type_id"], r["id"])
        ):
            attrs, value_ids = by_ts.get(row["timestamp"], ((), ()))
            entries.append(
                TimelineEntry(
                    kind="event",
                    timestamp=row["timestamp"],
                    event_id=row["id"],
                    event_type_id=row["event_type_id"],
                    updated_attribute_ids=tuple(sorted(set(attrs))),
                    value_ids=tuple(sorted(value_ids)),
                )
            )
        for ts, (attrs, value_ids) in by_ts.items():
            if ts in event_ts:
                continue
            entries.append(
                TimelineEntry(
                    kind="update",
                    timestamp=ts,
                    updated_attribute_ids=tuple(sorted(set(attrs))),
                    value_ids=tuple(sorted(value_ids)),
                )
            )
        entries.sort(
            key=lambda e: (e.timestamp, e.event_type_id or "", e.event_id or "")
        )
        return entries

    def o2o_valid_at(
        self,
        source_object_id: str,
        target_object_id: str,
        qualifier_id: str,
        at,
    ) -> Optional[str]:
        """Qualifier value of the relation in force at the given instant.

        Returns None when no relation row exists at or before the instant,
        or when the latest such row carries a NULL value (termination).
        """
        for table, row_id in (
            ("objects", source_object_id),
            ("objects", target_object_id),
            ("relation_qualifiers", qualifier_id),
        ):
            if not self.has_id(table, row_id):
                raise UnknownIdError(f"unknown {table} id: {row_id}")
        instant = normalize_timestamp(at)
        row = self._conn.execute(
            "SELECT qualifier_value FROM object_to_object "
            "WHERE source_object_id = ? AND target_object_id = ? "
            "AND qualifier_id = ? AND timestamp <= ? "
            "ORDER BY timestamp DESC, id DESC LIMIT 1",
            (source_object_id, target_object_id, qualifier_id, instant),
        ).fetchone()
        if row is None:
            return None
        return row["qualifier_value"]

    def summary_stats(self) -> StatsReport:
        report = StatsReport()
        for table in TABLES:
            report.table_counts[table] = self.row_count(table)
        queries = (
            (
                "events_per_type",
                "SELECT event_type_id AS k, COUNT(*) AS n FROM events GROUP BY 1",
            ),
            (
                "objects_per_type",
                "SELECT object_type_id AS k, COUNT(*) AS n FROM objects GROUP BY 1",
            ),
            (
                "e2o_per_qualifier",
                "SELECT qualifier_id AS k, COUNT(*) AS n FROM event_to_object GROUP BY 1",
            ),
            (
                "o2o_per_qualifier",
                "SELECT qualifier_id AS k, COUNT(*) AS n FROM object_to_object GROUP BY 1",
            ),
            (
                "e2oav_per_qualifier",
                "SELECT qualifier_id AS k, COUNT(*) AS n "
                "FROM event_to_object_attribute_value GROUP BY 1",
            ),
            (
                "event_values_per_attribute",
                "SELECT event_attribute_id AS k, COUNT(*) AS n "
                "FROM event_attribute_values GROUP BY 1",
            ),
            (
                "object_values_per_attribute",
                "SELECT object_attribute_id AS k, COUNT(*) AS n "
                "FROM object_attribute_values GROUP BY 1",
            ),
        )
        for attr, sql in queries:
            getattr(report, attr).update(
                {row["k"]: row["n"] for row in self._conn.execute(sql)}
            )
        pair_sql = (
            "SELECT e.event_type_id AS et, o.object_type_id AS ot, COUNT(*) AS n "
            "FROM event_to_object r "
            "JOIN events e ON e.id = r.event_id "
            "JOIN objects o ON o.id = r.object_id "
            "GROUP BY 1, 2"
        )
        report.e2o_per_type_pair = {
            (row["et"], row["ot"]): row["n"]
            for row in self._conn.execute(pair_sql)
        }
        return report

    # -- misc -------------------------------------------------------------

    @staticmethod
    def _require_table(table: str) -> None:
        if table not in TABLE_COLUMNS:
            raise KeyError(f"unknown table: {table}")

    def dump(self) -> dict:
        """Full contents as {table: sorted row list}; used for equality
        checks in tests and pipelines."""
        return {table: list(self.table_rows(table)) for table in TABLES}

"""Importer for the hub-CSV interchange format.

A hub-CSV directory contains up to twelve UTF-8 CSV files named exactly
after the schema tables, each with a header row carrying the exact column
names. Timestamps are RFC 3339; an empty ``qualifier_value`` in
``object_to_object.csv`` encodes NULL (relation termination).
"""

from __future__ import annotations

import csv
from pathlib import Path

from ochub.importers import AppendableBatch, ImportError_
from ochub.schema import Batch, TABLE_COLUMNS, TIMESTAMP_COLUMNS

_TS_COLS = {table: col for table, col in TIMESTAMP_COLUMNS}


def import_hub_csv(directory) -> AppendableBatch:
    """Load a hub-CSV directory into a batch mirroring the files exactly."""
    root = Path(directory)
    if not root.is_dir():
        raise ImportError_(f"not a directory: {root}")

    expected = {f"{table}.csv": table for table in TABLE_COLUMNS}
    batch = Batch()
    provenance = {}

    for path in sorted(root.glob("*.csv")):
        table = expected.get(path.name)
        if table is None:
            raise ImportError_(f"unknown file name: {path.name}")
        columns = TABLE_COLUMNS[table]
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            header = reader.fieldnames or []
            missing = [c for c in columns if c not in header]
            extra = [c for c in header if c not in columns]
            if missing or extra:
                problem = (missing + extra)[0]
                raise ImportError_(
                    f"{path.name}: header mismatch on column {problem!r}"
                )
            for line_no, raw in enumerate(reader, start=2):
                row = {col: raw.get(col) for col in columns}
                if table == "object_to_object" and row["qualifier_value"] == "":
                    row["qualifier_value"] = None
                ts_col = _TS_COLS.get(table)
                if ts_col:
                    from ochub.util import TimestampError, normalize_timestamp

                    try:
                        row[ts_col] = normalize_timestamp(row[ts_col] or "")
                    except TimestampError as exc:
                        raise ImportError_(
                            f"{path.name} line {line_no}: {exc}"
                        ) from exc
                batch.rows[table].append(row)
                if row.get("id"):
                    provenance[(table, row["id"])] = (path.name, line_no)

    return AppendableBatch(
        batch=batch, format="hubcsv", source=str(root), provenance=provenance
    )


def export_hub_csv(store, out_dir) -> dict:
    """Write a store's contents as a hub-CSV directory (the inverse of
    import_hub_csv). Only non-empty tables produce files. Returns row
    counts per file."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    counts = {}
    for table, columns in TABLE_COLUMNS.items():
        rows = list(store.table_rows(table))
        if not rows:
            continue
        path = root / f"{table}.csv"
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(columns)
            for row in rows:
                writer.writerow(
                    ["" if row[col] is None else row[col] for col in columns]
                )
        counts[path.name] = len(rows)
    return counts

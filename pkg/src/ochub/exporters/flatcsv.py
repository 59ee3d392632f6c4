"""Flat (single case notion) CSV extractor.

Flattens the store onto one chosen object type: one output row per
(event, related object of that type), with the object id as the case id and
the event type description as the activity. Events touching several case
objects are duplicated across cases (classical convergence); the summary
reports the duplication factor so the distortion is visible.
"""

from __future__ import annotations

import csv
from pathlib import Path

from ochub.exporters import ExportError, ExportSummary
from ochub.store import HubStore
from ochub.util import dedupe_name


def export_flat_csv(store: HubStore, case_object_type: str, out) -> ExportSummary:
    if not store.has_id("object_types", case_object_type):
        raise ExportError(f"unknown object type: {case_object_type}")
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    summary = ExportSummary(format="flat", path=str(out_path))

    case_objects = {
        row["id"]
        for row in store.table_rows("objects")
        if row["object_type_id"] == case_object_type
    }
    event_type_names = {
        row["id"]: row["description"] or row["id"]
        for row in store.table_rows("event_types")
    }
    attr_columns = []
    seen = {"case_id", "activity", "timestamp"}
    for attr in sorted(
        store.table_rows("event_attributes"),
        key=lambda a: (a["description"] or a["id"], a["id"]),
    ):
        attr_columns.append(
            (dedupe_name(attr["description"] or attr["id"], seen), attr["id"])
        )
    values_by_event: dict = {}
    for row in store.table_rows("event_attribute_values"):
        values_by_event.setdefault(row["event_id"], {})[
            row["event_attribute_id"]
        ] = row["attribute_value"]
    events = {row["id"]: row for row in store.table_rows("events")}

    pairs = set()
    for relation in store.table_rows("event_to_object"):
        if relation["object_id"] in case_objects:
            pairs.add((relation["object_id"], relation["event_id"]))

    def sort_key(pair):
        case_id, event_id = pair
        event = events.get(event_id)
        if event is None:
            return (case_id, "", "", event_id)
        return (case_id, event["timestamp"], event["event_type_id"], event_id)

    rows = []
    for case_id, event_id in sorted(pairs, key=sort_key):
        event = events.get(event_id)
        if event is None:
            continue  # dangling relation; the transform checkpoint owns this
        rows.append(
            [
                case_id,
                event_type_names.get(event["event_type_id"], event["event_type_id"]),
                event["timestamp"],
            ]
            + [
                values_by_event.get(event_id, {}).get(attr_id)
                for _, attr_id in attr_columns
            ]
        )

    with open(out_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["case_id", "activity", "timestamp"]
            + [name for name, _ in attr_columns]
        )
        for row in rows:
            writer.writerow(["" if cell is None else cell for cell in row])

    summary.counts[out_path.name] = len(rows)
    distinct_events = len({event_id for _, event_id in pairs})
    if distinct_events:
        factor = len(rows) / distinct_events
        summary.notes.append(
            f"convergence duplication factor: {factor:.3f} "
            f"({len(rows)} rows from {distinct_events} events)"
        )
    return summary

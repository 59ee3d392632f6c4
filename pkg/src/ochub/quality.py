"""Automated data-quality checks and the three pipeline checkpoints.

Four structural checks guard the store and incoming batches (unique primary
keys, non-null foreign keys, referential integrity, timestamp validity); two
more guard graph exports (node id uniqueness, edge endpoints). Checks are
read-only and report every violation instead of failing fast. Repairing
missing objects is a separate, explicit operation that produces a normal
batch, so the audit trail stays append-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ochub.schema import (
    Batch,
    FOREIGN_KEYS,
    TABLES,
    TIMESTAMP_COLUMNS,
)
from ochub.store import HubStore
from ochub.util import is_valid_timestamp

CHECKPOINTS = ("staging", "transform", "graph")

STORE_CHECKS = (
    "unique_primary_keys",
    "foreign_keys_not_null",
    "referential_integrity",
    "timestamp_validity",
)
GRAPH_CHECKS = ("graph_node_uniqueness", "graph_edge_endpoints")


@dataclass(frozen=True)
class Violation:
    check: str
    table: str  # table or file name
    key: str  # row id / duplicated id / missing id
    detail: str
    ref_table: Optional[str] = None  # referenced table, for integrity misses
    ref_id: Optional[str] = None  # missing referenced id


@dataclass
class QualityReport:
    checkpoint: str
    check_status: dict = field(default_factory=dict)  # check -> bool (passed)
    violations: list = field(default_factory=list)
    scanned: dict = field(default_factory=dict)  # table/file -> rows scanned

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_records(self) -> list:
        return [
            {
                "checkpoint": self.checkpoint,
                "check": v.check,
                "table": v.table,
                "key": v.key,
                "detail": v.detail,
            }
            for v in self.violations
        ]

    def write_json(self, path) -> None:
        Path(path).write_text(
            json.dumps(
                {
                    "checkpoint": self.checkpoint,
                    "passed": self.passed,
                    "checks": self.check_status,
                    "scanned": self.scanned,
                    "violations": self.to_records(),
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )

    def summary(self) -> str:
        lines = [f"checkpoint {self.checkpoint}: "
                 f"{'PASSED' if self.passed else 'FAILED'}"]
        for check, ok in sorted(self.check_status.items()):
            n = sum(1 for v in self.violations if v.check == check)
            lines.append(f"  {check}: {'ok' if ok else f'{n} violation(s)'}")
        for v in self.violations[:20]:
            lines.append(f"    [{v.check}] {v.table} key={v.key}: {v.detail}")
        if len(self.violations) > 20:
            lines.append(f"    ... {len(self.violations) - 20} more")
        return "\n".join(lines)


class _TableView:
    """Uniform row access over a batch (with optional store context for
    resolving references) or over a whole store."""

    def __init__(self, batch: Optional[Batch] = None, store: Optional[HubStore] = None):
        if batch is None and store is None:
            raise ValueError("need a batch, a store, or both")
        self.batch = batch
        self.store = store

    def rows(self, table: str):
        """Rows to be scanned: the batch's if present, else the store's."""
        if self.batch is not None:
            return list(self.batch.rows.get(table) or [])
        return list(self.store.table_rows(table))

    def known_ids(self, table: str) -> set:
        """Ids a reference may resolve against: batch union store."""
        ids = set()
        if self.batch is not None:
            for row in self.batch.rows.get(table) or []:
                if row.get("id"):
                    ids.add(row["id"])
        if self.store is not None:
            ids |= self.store.id_set(table)
        return ids


def check_unique_primary_keys(view: _TableView) -> list:
    """Ids must be non-null, non-empty, and unique within each table.

    One violation per offending id (not per extra row)."""
    violations = []
    for table in TABLES:
        counts: dict = {}
        for row in view.rows(table):
            row_id = row.get("id")
            if not row_id:
                violations.append(
                    Violation(
                        check="unique_primary_keys",
                        table=table,
                        key="",
                        detail="null or empty primary key",
                    )
                )
                continue
            counts[row_id] = counts.get(row_id, 0) + 1
        for row_id, n in counts.items():
            if n > 1:
                violations.append(
                    Violation(
                        check="unique_primary_keys",
                        table=table,
                        key=row_id,
                        detail=f"primary key appears {n} times",
                    )
                )
    return violations


def check_foreign_keys_not_null(view: _TableView) -> list:
    violations = []
    for (table, column), _ in FOREIGN_KEYS.items():
        for row in view.rows(table):
            value = row.get(column)
            if value is None or value == "":
                violations.append(
                    Violation(
                        check="foreign_keys_not_null",
                        table=table,
                        key=row.get("id") or "",
                        detail=f"{column} is null",
                    )
                )
    return violations


def check_referential_integrity(view: _TableView) -> list:
    """Every non-null foreign key must resolve against the union of the
    scanned rows and the store context.

    Grouped per missing id: N rows referencing the same absent id yield one
    violation whose detail carries the reference count."""
    violations = []
    for (table, column), ref_table in sorted(FOREIGN_KEYS.items()):
        rows = view.rows(table)
        if not rows:
            continue
        known = view.known_ids(ref_table)
        missing: dict = {}
        for row in rows:
            value = row.get(column)
            if value in (None, ""):
                continue  # nullness is a separate check
            if value not in known:
                missing.setdefault(value, []).append(row.get("id") or "")
        for ref_id, row_ids in missing.items():
            violations.append(
                Violation(
                    check="referential_integrity",
                    table=table,
                    key=ref_id,
                    detail=(
                        f"{column} -> {ref_table}.{ref_id} does not resolve "
                        f"({len(row_ids)} row(s), e.g. {row_ids[0]})"
                    ),
                    ref_table=ref_table,
                    ref_id=ref_id,
                )
            )
    return violations


def check_timestamp_validity(view: _TableView) -> list:
    """Timestamps must be non-null and parseable RFC 3339 text."""
    violations = []
    for table, column in TIMESTAMP_COLUMNS:
        for row in view.rows(table):
            value = row.get(column)
            if value is None or value == "" or not is_valid_timestamp(value):
                violations.append(
                    Violation(
                        check="timestamp_validity",
                        table=table,
                        key=row.get("id") or "",
                        detail=f"invalid {column}: {value!r}",
                    )
                )
    return violations


def _graph_tables(target):
    """Extract (nodes, edges, node_file, edge_file) from a graph object or
    a directory of bulk-import CSVs."""
    from ochub import graph as graph_mod  # local import, avoids a cycle

    if isinstance(target, (str, Path)):
        import csv

        directory = Path(target)
        nodes, edges = [], []
        nodes_file = directory / "nodes.csv"
        edges_file = directory / "edges.csv"
        if nodes_file.exists():
            with open(nodes_file, newline="", encoding="utf-8") as handle:
                nodes = [(row.get("id:ID") or "",) for row in csv.DictReader(handle)]
        if edges_file.exists():
            with open(edges_file, newline="", encoding="utf-8") as handle:
                edges = [
                    (row.get(":START_ID") or "", row.get(":END_ID") or "")
                    for row in csv.DictReader(handle)
                ]
        return [n[0] for n in nodes], edges
    if isinstance(target, graph_mod.SnapshotGraph):
        node_ids = [n.node_id for n in target.event_nodes] + [
            n.node_id for n in target.snapshot_nodes
        ]
        return node_ids, [(e.start, e.end) for e in target.edges]
    if isinstance(target, graph_mod.OverviewGraph):
        return (
            [n.node_id for n in target.nodes],
            [(e.start, e.end) for e in target.edges],
        )
    raise TypeError(f"not a graph export target: {type(target).__name__}")


def check_graph_node_uniqueness(node_ids) -> list:
    violations = []
    counts: dict = {}
    for node_id in node_ids:
        counts[node_id] = counts.get(node_id, 0) + 1
    for node_id, n in counts.items():
        if not node_id:
            violations.append(
                Violation(
                    check="graph_node_uniqueness",
                    table="nodes.csv",
                    key="",
                    detail="empty node id",
                )
            )
        elif n > 1:
            violations.append(
                Violation(
                    check="graph_node_uniqueness",
                    table="nodes.csv",
                    key=node_id,
                    detail=f"node id appears {n} times",
                )
            )
    return violations


def check_graph_edge_endpoints(node_ids, edges) -> list:
    known = set(node_ids)
    violations = []
    for start, end in edges:
        for endpoint in (start, end):
            if endpoint not in known:
                violations.append(
                    Violation(
                        check="graph_edge_endpoints",
                        table="edges.csv",
                        key=endpoint,
                        detail=f"edge ({start} -> {end}) references missing node",
                    )
                )
    return violations


def run_checkpoint(target, checkpoint: str, store: Optional[HubStore] = None) -> QualityReport:
    """Run every check applicable to a pipeline checkpoint.

    staging   -- target is a Batch, validated against the union of the batch
                 and the (optional) destination store.
    transform -- target is a HubStore; the four checks rerun store-wide.
    graph     -- target is a built graph or a directory with nodes.csv and
                 edges.csv.
    """
    if checkpoint not in CHECKPOINTS:
        raise ValueError(f"unknown checkpoint: {checkpoint}")
    report = QualityReport(checkpoint=checkpoint)

    if checkpoint in ("staging", "transform"):
        if checkpoint == "staging":
            if not isinstance(target, Batch):
                raise TypeError("staging checkpoint expects a Batch")
            view = _TableView(batch=target, store=store)
        else:
            if not isinstance(target, HubStore):
                raise TypeError("transform checkpoint expects a HubStore")
            view = _TableView(store=target)
        for table in TABLES:
            report.scanned[table] = len(view.rows(table))
        for check, fn in (
            ("unique_primary_keys", check_unique_primary_keys),
            ("foreign_keys_not_null", check_foreign_keys_not_null),
            ("referential_integrity", check_referential_integrity),
            ("timestamp_validity", check_timestamp_validity),
        ):
            found = fn(view)
            report.check_status[check] = not found
            report.violations.extend(found)
        return report

    node_ids, edges = _graph_tables(target)
    report.scanned["nodes.csv"] = len(node_ids)
    report.scanned["edges.csv"] = len(edges)
    node_violations = check_graph_node_uniqueness(node_ids)
    edge_violations = check_graph_edge_endpoints(node_ids, edges)
    report.check_status["graph_node_uniqueness"] = not node_violations
    report.check_status["graph_edge_endpoints"] = not edge_violations
    report.violations.extend(node_violations)
    report.violations.extend(edge_violations)
    return report


UNKNOWN_OBJECT_TYPE_ID = "ot:unknown"


def synthesize_missing_objects(store: HubStore, violations) -> Batch:
    """Build a repair batch of placeholder objects for referential-integrity
    misses on object ids.

    Each missing object becomes a row of object type ``ot:unknown`` whose
    description is the missing id, so the provenance of the repair stays
    visible. Violations of any other kind are rejected.
    """
    batch = Batch()
    missing = []
    for violation in violations:
        if violation.check != "referential_integrity" or violation.ref_table != "objects":
            raise ValueError(
                f"unsupported repair: {violation.check} on "
                f"{violation.ref_table or violation.table}"
            )
        missing.append(violation.ref_id)
    if not missing:
        return batch
    if not store.has_id("object_types", UNKNOWN_OBJECT_TYPE_ID):
        batch.add(
            "object_types", id=UNKNOWN_OBJECT_TYPE_ID, description="unknown"
        )
    for object_id in sorted(set(missing)):
        batch.add(
            "objects",
            id=object_id,
            object_type_id=UNKNOWN_OBJECT_TYPE_ID,
            description=object_id,
        )
    return batch

"""Case-level snapshot graphs, overview aggregation, and bulk-import CSVs.

A case-level graph renders each object's timeline as an alternating chain of
event nodes and object-snapshot nodes connected by directly-follows edges:
every event points at the object's snapshot at its position, and every
snapshot points at the object's next timeline event. A snapshot exists per
(object, timestamp) whenever the object participates in an event or has an
attribute update at that instant; standalone update snapshots are spliced
into the chain at their timestamp. Object-to-object edges are added between
same-timestamp snapshots whose relation is valid at that instant.
Simultaneous events are serialized by (event_type_id, event_id), never
modeled as parallel.

The overview graph merges cases: events map to their event type, snapshots
map to groups keyed by (object type, event type of the previous event or
START, set of updated attributes), and edge frequencies count the case-level
edges behind each overview edge.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ochub.store import HubStore, UnknownIdError

DF_EVENT_TO_SNAPSHOT = "DF_EVENT_TO_SNAPSHOT"
DF_SNAPSHOT_TO_EVENT = "DF_SNAPSHOT_TO_EVENT"
O2O = "O2O"

START = "START"

NODES_HEADER = ("id:ID", "kind", ":LABEL", "timestamp", "detail")
EDGES_HEADER = (":START_ID", ":END_ID", ":TYPE", "object", "qualifier", "frequency")


@dataclass(frozen=True)
class EventNode:
    node_id: str
    event_id: str
    event_type_id: str
    timestamp: str


@dataclass(frozen=True)
class SnapshotNode:
    node_id: str
    object_id: str
    object_type_id: str
    timestamp: str
    updated_attributes: frozenset
    prev_event_type_id: str  # START when no event precedes the snapshot


@dataclass(frozen=True)
class GraphEdge:
    kind: str  # DF_EVENT_TO_SNAPSHOT | DF_SNAPSHOT_TO_EVENT | O2O
    start: str
    end: str
    object_id: Optional[str] = None  # set for DF kinds
    qualifier: Optional[str] = None  # set for O2O


@dataclass
class SnapshotGraph:
    event_nodes: list = field(default_factory=list)
    snapshot_nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def node_ids(self) -> set:
        return {n.node_id for n in self.event_nodes} | {
            n.node_id for n in self.snapshot_nodes
        }


@dataclass(frozen=True)
class OverviewNode:
    node_id: str
    kind: str  # "event_type" | "snapshot_group"
    detail: str
    frequency: int  # case-level nodes mapped onto this node


@dataclass(frozen=True)
class OverviewEdge:
    kind: str
    start: str
    end: str
    qualifier: Optional[str]
    frequency: int


@dataclass
class OverviewGraph:
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)


class GraphExportError(Exception):
    """The graph checkpoint failed; nothing was written."""

    def __init__(self, report):
        self.report = report
        super().__init__(
            f"graph checkpoint failed with {len(report.violations)} violation(s)"
        )


def _snapshot_id(object_id: str, timestamp: str) -> str:
    return f"s:{object_id}@{timestamp}"


def build_case_graph(store: HubStore, object_ids=None) -> SnapshotGraph:
    """Build the case-level graph for the selected objects (all by default)."""
    if object_ids is None:
        selection = sorted(store.id_set("objects"))
    else:
        selection = sorted(set(object_ids))
        for object_id in selection:
            if not store.has_id("objects", object_id):
                raise UnknownIdError(f"unknown object id: {object_id}")

    object_type_of = {
        row["id"]: row["object_type_id"] for row in store.table_rows("objects")
    }
    qualifier_names = {
        row["id"]: row["description"] or row["id"]
        for row in store.table_rows("relation_qualifiers")
    }

    event_nodes: dict = {}
    snapshot_nodes: dict = {}
    edges: set = set()
    snapshots_by_ts: dict = {}

    for object_id in selection:
        timeline = store.object_timeline(object_id)
        if not timeline:
            continue
        last_event_type = START
        for position, entry in enumerate(timeline):
            if entry.kind == "event":
                last_event_type = entry.event_type_id
                node_id = f"e:{entry.event_id}"
                event_nodes.setdefault(
                    node_id,
                    EventNode(
                        node_id=node_id,
                        event_id=entry.event_id,
                        event_type_id=entry.event_type_id,
                        timestamp=entry.timestamp,
                    ),
                )
            snap_id = _snapshot_id(object_id, entry.timestamp)
            # later event entries at the same timestamp overwrite the
            # snapshot's previous-event type (ties are serialized)
            snapshot_nodes[snap_id] = SnapshotNode(
                node_id=snap_id,
                object_id=object_id,
                object_type_id=object_type_of[object_id],
                timestamp=entry.timestamp,
                updated_attributes=frozenset(entry.updated_attribute_ids),
                prev_event_type_id=last_event_type,
            )
            snapshots_by_ts.setdefault(entry.timestamp, set()).add(object_id)

            if entry.kind == "event":
                edges.add(
                    GraphEdge(
                        kind=DF_EVENT_TO_SNAPSHOT,
                        start=f"e:{entry.event_id}",
                        end=snap_id,
                        object_id=object_id,
                    )
                )
            next_event = next(
                (e for e in timeline[position + 1 :] if e.kind == "event"),
                None,
            )
            if next_event is not None:
                edges.add(
                    GraphEdge(
                        kind=DF_SNAPSHOT_TO_EVENT,
                        start=snap_id,
                        end=f"e:{next_event.event_id}",
                        object_id=object_id,
                    )
                )

    # same-timestamp object-to-object edges, checked for validity then
    triples = {
        (
            row["source_object_id"],
            row["target_object_id"],
            row["qualifier_id"],
        )
        for row in store.table_rows("object_to_object")
    }
    in_scope = set(selection)
    for source_id, target_id, qualifier_id in sorted(triples):
        if source_id not in in_scope or target_id not in in_scope:
            continue
        for timestamp, present in snapshots_by_ts.items():
            if source_id not in present or target_id not in present:
                continue
            try:
                value = store.o2o_valid_at(
                    source_id, target_id, qualifier_id, timestamp
                )
            except UnknownIdError:
                continue  # dangling qualifier; the transform checkpoint owns it
            if value is None:
                continue
            edges.add(
                GraphEdge(
                    kind=O2O,
                    start=_snapshot_id(source_id, timestamp),
                    end=_snapshot_id(target_id, timestamp),
                    qualifier=qualifier_names.get(qualifier_id, qualifier_id),
                )
            )

    graph = SnapshotGraph(
        event_nodes=sorted(event_nodes.values(), key=lambda n: n.node_id),
        snapshot_nodes=sorted(snapshot_nodes.values(), key=lambda n: n.node_id),
        edges=sorted(
            edges,
            key=lambda e: (e.start, e.end, e.kind, e.object_id or "", e.qualifier or ""),
        ),
    )
    return graph


def _group_id(node: SnapshotNode) -> str:
    attrs = ",".join(sorted(node.updated_attributes))
    return f"g:{node.object_type_id}|{node.prev_event_type_id}|{attrs}"


def build_overview_graph(case_graph: SnapshotGraph) -> OverviewGraph:
    """Aggregate a case-level graph into the overview graph."""
    mapping: dict = {}
    node_freq: dict = {}
    node_meta: dict = {}

    for node in case_graph.event_nodes:
        target = f"et:{node.event_type_id}"
        mapping[node.node_id] = target
        node_freq[target] = node_freq.get(target, 0) + 1
        node_meta[target] = ("event_type", node.event_type_id)
    for node in case_graph.snapshot_nodes:
        target = _group_id(node)
        mapping[node.node_id] = target
        node_freq[target] = node_freq.get(target, 0) + 1
        attrs = ",".join(sorted(node.updated_attributes))
        node_meta[target] = (
            "snapshot_group",
            f"{node.object_type_id}|{node.prev_event_type_id}|{attrs}",
        )

    edge_freq: dict = {}
    for edge in case_graph.edges:
        key = (
            edge.kind,
            mapping[edge.start],
            mapping[edge.end],
            edge.qualifier,
        )
        edge_freq[key] = edge_freq.get(key, 0) + 1

    nodes = [
        OverviewNode(node_id=node_id, kind=kind, detail=detail, frequency=node_freq[node_id])
        for node_id, (kind, detail) in sorted(node_meta.items())
    ]
    edges = [
        OverviewEdge(kind=kind, start=start, end=end, qualifier=qualifier, frequency=n)
        for (kind, start, end, qualifier), n in sorted(
            edge_freq.items(), key=lambda item: (item[0][1], item[0][2], item[0][0], item[0][3] or "")
        )
    ]
    return OverviewGraph(nodes=nodes, edges=edges)


def export_graph_csv(graph, out_dir) -> "ExportSummary":
    """Write nodes.csv and edges.csv for the external bulk importer.

    The graph checkpoint (node uniqueness, edge endpoints) runs first; any
    violation aborts the export before files are written.
    """
    from ochub.exporters import ExportSummary
    from ochub.quality import run_checkpoint

    report = run_checkpoint(graph, "graph")
    if not report.passed:
        raise GraphExportError(report)

    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)

    if isinstance(graph, SnapshotGraph):
        node_rows = [
            (n.node_id, "event", "Event", n.timestamp, n.event_type_id)
            for n in graph.event_nodes
        ] + [
            (
                n.node_id,
                "snapshot",
                "Snapshot",
                n.timestamp,
                ",".join(sorted(n.updated_attributes)),
            )
            for n in graph.snapshot_nodes
        ]
        edge_rows = [
            (
                e.start,
                e.end,
                "O2O" if e.kind == O2O else "DF",
                e.object_id or "",
                e.qualifier or "",
                1,
            )
            for e in graph.edges
        ]
    elif isinstance(graph, OverviewGraph):
        node_rows = [
            (n.node_id, n.kind, "EventType" if n.kind == "event_type" else "SnapshotGroup", "", n.detail)
            for n in graph.nodes
        ]
        edge_rows = [
            (
                e.start,
                e.end,
                "O2O" if e.kind == O2O else "DF",
                "",
                e.qualifier or "",
                e.frequency,
            )
            for e in graph.edges
        ]
    else:
        raise TypeError(f"not an exportable graph: {type(graph).__name__}")

    node_rows.sort(key=lambda r: r[0])
    edge_rows.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4]))

    summary = ExportSummary(format="graph-csv", path=str(root))
    with open(root / "nodes.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(NODES_HEADER)
        writer.writerows(node_rows)
    with open(root / "edges.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(EDGES_HEADER)
        writer.writerows(edge_rows)
    summary.counts["nodes.csv"] = len(node_rows)
    summary.counts["edges.csv"] = len(edge_rows)
    return summary

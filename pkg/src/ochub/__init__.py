"""ochub: an append-only storage hub for object-centric process-event data.

The hub stores events, objects, their attributes, and qualified relations in
a fixed twelve-table relational layout that never changes when new processes,
types, or attributes show up. On top of the store sit quality checkpoints,
importers/exporters for common object-centric log formats, and a builder for
case-level and overview process graphs.
"""

from ochub.schema import Batch, TABLES, TABLE_COLUMNS
from ochub.store import (
    HubStore,
    open_store,
    AppendConflictError,
    StoreError,
    StoreNotFoundError,
    UnknownIdError,
)

__all__ = [
    "Batch",
    "TABLES",
    "TABLE_COLUMNS",
    "HubStore",
    "open_store",
    "AppendConflictError",
    "StoreError",
    "StoreNotFoundError",
    "UnknownIdError",
]

__version__ = "0.1.0"

"""Tree document warehouse: collections, schemas, snapshots."""

from liststand.warehouse.docs import (
    FACT_SCHEMA,
    MESSAGE_SCHEMA,
    fact_to_tree,
    message_to_tree,
    tree_to_fact,
    tree_to_message,
)
from liststand.warehouse.schema import (
    ElementDef,
    SchemaDef,
    SchemaError,
    Violation,
    infer_trivial_schema,
    type_error,
    validate,
)
from liststand.warehouse.store import (
    CollectionBusy,
    DocumentId,
    Snapshot,
    StoreRejected,
    UnknownCollection,
    Warehouse,
    WarehouseError,
    valid_collection_name,
)
from liststand.warehouse.tree import (
    TreeError,
    TreeNode,
    parse_tree,
    sanitize_text,
    serialize_tree,
)

__all__ = [
    "CollectionBusy",
    "DocumentId",
    "FACT_SCHEMA",
    "MESSAGE_SCHEMA",
    "ElementDef",
    "SchemaDef",
    "SchemaError",
    "Snapshot",
    "StoreRejected",
    "TreeError",
    "TreeNode",
    "UnknownCollection",
    "Violation",
    "Warehouse",
    "WarehouseError",
    "fact_to_tree",
    "infer_trivial_schema",
    "message_to_tree",
    "parse_tree",
    "sanitize_text",
    "serialize_tree",
    "tree_to_fact",
    "tree_to_message",
    "type_error",
    "valid_collection_name",
    "validate",
]

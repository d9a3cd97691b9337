"""Named collections of tree documents with snapshot reads.

A warehouse owns one directory, one file per collection.  Line one of a
collection file is a JSON header (version, next sequence number, document
ids, schema); each further line is one document in canonical form.  Every
mutation rewrites the file through a temp file and an atomic rename.

Readers work from snapshots and never block.  Writers take a
per-collection lock; `block=False` fails fast instead of waiting.  A bulk
store counts as a single mutation, so the version counts mutations, not
documents.
"""

from __future__ import annotations

import json
import os
import re
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

from liststand.errors import ListstandError
from liststand.warehouse.schema import SchemaDef, Violation, validate
from liststand.warehouse.tree import TreeNode, parse_tree, serialize_tree

_COLLECTION_NAME_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.-]*$")


def valid_collection_name(name: str) -> bool:
    """True when the name is safe to use as a collection file stem."""
    return bool(_COLLECTION_NAME_RE.match(name))


class WarehouseError(ListstandError):
    pass


class UnknownCollection(WarehouseError):
    pass


class CollectionBusy(WarehouseError):
    pass


class StoreRejected(WarehouseError):
    def __init__(self, message: str, violations: list[Violation]):
        super().__init__(message)
        self.violations = violations


class DocumentId(NamedTuple):
    collection: str
    seq: int


@dataclass(frozen=True)
class Snapshot:
    collection: str
    version: int
    ids: tuple[int, ...]
    documents: tuple[TreeNode, ...]
    schema: SchemaDef | None


class _Collection:
    def __init__(self, name: str, path: Path, schema: SchemaDef | None):
        self.name = name
        self.path = path
        self.schema = schema
        self.docs: list[TreeNode] = []
        self.ids: list[int] = []
        self.version = 0
        self.next_seq = 0
        self.lock = threading.Lock()


class Warehouse:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._collections: dict[str, _Collection] = {}
        self._registry_lock = threading.Lock()
        for path in sorted(self.root.glob("*.col")):
            col = _load_collection(path)
            self._collections[col.name] = col

    def collections(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._collections)

    def exists(self, name: str) -> bool:
        with self._registry_lock:
            return name in self._collections

    def create(self, name: str, schema: SchemaDef | None = None) -> None:
        if not valid_collection_name(name):
            raise WarehouseError(f"invalid collection name: {name!r}")
        with self._registry_lock:
            if name in self._collections:
                raise WarehouseError(f"collection already exists: {name}")
            col = _Collection(name, self.root / f"{name}.col", schema)
            _persist(col)
            self._collections[name] = col

    def schema(self, name: str) -> SchemaDef | None:
        return self._get(name).schema

    def store(self, name: str, doc: TreeNode, block: bool = True) -> DocumentId:
        return self.store_many(name, [doc], block=block)[0]

    def store_many(self, name: str, docs: Iterable[TreeNode], block: bool = True) -> list[DocumentId]:
        col = self._get(name)
        batch = list(docs)
        with _writer(col, block):
            _check_batch(col, batch)
            assigned = []
            for doc in batch:
                assigned.append(DocumentId(name, col.next_seq))
                col.ids.append(col.next_seq)
                col.docs.append(doc)
                col.next_seq += 1
            if batch:
                col.version += 1
                _persist(col)
        return assigned

    def replace(self, name: str, docs: Iterable[TreeNode], block: bool = True) -> list[DocumentId]:
        """Swap the whole document list; old ids are retired, never reused."""
        col = self._get(name)
        batch = list(docs)
        with _writer(col, block):
            _check_batch(col, batch)
            assigned = []
            ids = []
            for _ in batch:
                assigned.append(DocumentId(name, col.next_seq))
                ids.append(col.next_seq)
                col.next_seq += 1
            col.docs = batch
            col.ids = ids
            col.version += 1
            _persist(col)
        return assigned

    def snapshot(self, name: str) -> Snapshot:
        col = self._get(name)
        with col.lock:
            return Snapshot(name, col.version, tuple(col.ids), tuple(col.docs), col.schema)

    def _get(self, name: str) -> _Collection:
        with self._registry_lock:
            try:
                return self._collections[name]
            except KeyError:
                raise UnknownCollection(f"unknown collection: {name}") from None


@contextmanager
def _writer(col: _Collection, block: bool) -> Iterator[None]:
    if not col.lock.acquire(blocking=block):
        raise CollectionBusy(f"collection busy: {col.name}")
    try:
        yield
    finally:
        col.lock.release()


def _check_batch(col: _Collection, batch: list[TreeNode]) -> None:
    # all-or-nothing: nothing is stored unless every document validates
    if col.schema is None:
        return
    for index, doc in enumerate(batch):
        violations = validate(doc, col.schema)
        if violations:
            raise StoreRejected(
                f"document {index} fails validation for collection {col.name!r}", violations
            )


def _persist(col: _Collection) -> None:
    header = {
        "name": col.name,
        "version": col.version,
        "next_seq": col.next_seq,
        "ids": col.ids,
        "schema": col.schema.to_json_dict() if col.schema else None,
    }
    tmp = col.path.parent / (col.path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for doc in col.docs:
            fh.write(serialize_tree(doc) + "\n")
    os.replace(tmp, col.path)


def _load_collection(path: Path) -> _Collection:
    with path.open("r", encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise WarehouseError(f"corrupt collection file {path.name}: {exc}") from None
        schema = SchemaDef.from_json_dict(header["schema"]) if header.get("schema") else None
        col = _Collection(header.get("name") or path.stem, path, schema)
        col.version = int(header.get("version", 0))
        col.next_seq = int(header.get("next_seq", 0))
        ids = [int(value) for value in header.get("ids", [])]
        for line in fh:
            line = line.rstrip("\n")
            if line:
                col.docs.append(parse_tree(line))
    if len(ids) != len(col.docs):
        raise WarehouseError(f"corrupt collection file {path.name}: id and document counts differ")
    col.ids = ids
    return col

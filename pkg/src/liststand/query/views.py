"""Named queries over the warehouse: virtual and materialized views.

A view pairs a name with a query whose source is a collection or an
earlier view.  Virtual views evaluate on demand and are never stale.  A
materialized view evaluates at registration into a backing collection
and remembers the source version it was built from; when the source
moves on, the view reports stale until someone refreshes it.  Nothing
refreshes automatically.

The registry is the source resolver for evaluation, so views compose:
a view over a view works to any depth, and a view naming itself (or a
chain reaching back to itself) is rejected as cyclic.  Definitions
persist in a ``views.json`` file beside the collection files.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from liststand.query.evaluate import ResolvedSource, evaluate
from liststand.query.infer import infer_result_schema
from liststand.query.path import QueryError
from liststand.query.spec import QuerySpec, parse_query_spec
from liststand.warehouse.schema import SchemaDef
from liststand.warehouse.store import Warehouse, valid_collection_name


@dataclass
class ViewDef:
    name: str
    spec: QuerySpec
    materialized: bool
    result_schema: SchemaDef
    built_at_version: int | None  # source version at build time; None for virtual

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "spec": self.spec.to_json_dict(),
            "materialized": self.materialized,
            "result_schema": self.result_schema.to_json_dict(),
            "built_at_version": self.built_at_version,
        }


class _Pinned:
    """Resolver that answers one name from a fixed snapshot.

    Used while building a materialized view so the stamped version and
    the evaluated documents come from the same snapshot.
    """

    def __init__(self, base, name: str, source: ResolvedSource) -> None:
        self.base = base
        self.name = name
        self.source = source

    def resolve(self, name: str) -> ResolvedSource | None:
        if name == self.name:
            return self.source
        return self.base.resolve(name)


class ViewRegistry:
    def __init__(self, warehouse: Warehouse, path: str | Path | None = None) -> None:
        self.warehouse = warehouse
        self.path = Path(path) if path is not None else warehouse.root / "views.json"
        self._views: dict[str, ViewDef] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            self._load()

    # -- resolver protocol ------------------------------------------------

    def resolve(self, name: str) -> ResolvedSource | None:
        view = self._views.get(name)
        if view is None:
            if self.warehouse.exists(name):
                snap = self.warehouse.snapshot(name)
                return ResolvedSource(snap.documents, snap.schema, snap.version)
            return None
        if view.materialized:
            snap = self.warehouse.snapshot(name)
            return ResolvedSource(snap.documents, view.result_schema, snap.version)
        source = self.resolve(view.spec.source)
        if source is None:
            raise QueryError(f"view {name!r} lost its source {view.spec.source!r}")
        docs = tuple(evaluate(view.spec, self))
        return ResolvedSource(docs, view.result_schema, source.version)

    # -- registry ---------------------------------------------------------

    def views(self) -> list[ViewDef]:
        with self._lock:
            return [self._views[name] for name in sorted(self._views)]

    def get(self, name: str) -> ViewDef:
        view = self._views.get(name)
        if view is None:
            raise QueryError(f"unknown view {name!r}")
        return view

    def register(self, name: str, spec_data, materialized: bool = False) -> ViewDef:
        spec = spec_data if isinstance(spec_data, QuerySpec) else parse_query_spec(spec_data)
        if not valid_collection_name(name):
            raise QueryError(f"invalid view name: {name!r}")
        with self._lock:
            if name in self._views or self.warehouse.exists(name):
                raise QueryError(f"name {name!r} is already in use")
            self._check_acyclic(name, spec.source)
            source = self.resolve(spec.source)
            if source is None:
                raise QueryError(f"unknown source {spec.source!r}")
            result_schema = infer_result_schema(spec, source.schema)
            if materialized:
                docs = evaluate(spec, _Pinned(self, spec.source, source))
                self.warehouse.create(name, result_schema)
                if docs:
                    self.warehouse.store_many(name, docs)
                view = ViewDef(name, spec, True, result_schema, source.version)
            else:
                view = ViewDef(name, spec, False, result_schema, None)
            self._views[name] = view
            self._persist()
            return view

    def _check_acyclic(self, name: str, source: str) -> None:
        seen = {name}
        current = source
        while True:
            if current in seen:
                raise QueryError(f"cyclic view definition through {current!r}")
            seen.add(current)
            view = self._views.get(current)
            if view is None:
                return
            current = view.spec.source

    def stale(self, name: str) -> bool:
        view = self.get(name)
        if not view.materialized:
            return False
        source = self.resolve(view.spec.source)
        if source is None:
            return True
        return source.version != view.built_at_version

    def refresh(self, name: str) -> ViewDef:
        with self._lock:
            view = self.get(name)
            if not view.materialized:
                raise QueryError(f"view {name!r} is virtual; only materialized views refresh")
            source = self.resolve(view.spec.source)
            if source is None:
                raise QueryError(f"view {name!r} lost its source {view.spec.source!r}")
            docs = evaluate(view.spec, _Pinned(self, view.spec.source, source))
            self.warehouse.replace(name, docs)
            view.built_at_version = source.version
            self._persist()
            return view

    # -- persistence ------------------------------------------------------

    def _persist(self) -> None:
        entries = [self._views[name].to_json_dict() for name in sorted(self._views)]
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, self.path)

    def _load(self) -> None:
        try:
            entries = json.loads(self.path.read_text(encoding="utf-8"))
            for entry in entries:
                view = ViewDef(
                    name=entry["name"],
                    spec=parse_query_spec(entry["spec"]),
                    materialized=entry["materialized"],
                    result_schema=SchemaDef.from_json_dict(entry["result_schema"]),
                    built_at_version=entry["built_at_version"],
                )
                self._views[view.name] = view
        except (KeyError, TypeError, ValueError) as exc:
            raise QueryError(f"malformed view registry {self.path}: {exc}") from None

"""Process-wide state behind the HTTP service.

One AppState owns the warehouse directory, the view registry, the fact
store, parsed-corpus caches for the statistics endpoints, and a small
in-process job table for background ingests. Everything is safe to
share across request threads.

Facts live in memory and are replayed from data_dir/facts.jsonl on
startup; each accepted assertion is appended to that file. The optional
institution map is a CSV at data_dir/institutions.csv, re-read on
demand so edits through the API take effect immediately.
"""

from __future__ import annotations

import io
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from liststand.errors import ListstandError
from liststand.identity import EntityCatalog, InstitutionMap, resolve_entities
from liststand.ingest.model import MailboxSource, Message
from liststand.ingest.sources import load_sources
from liststand.provenance import FactStore, parse_assertion
from liststand.query.views import ViewRegistry
from liststand.threads import ThreadForest, build_threads
from liststand.warehouse import Warehouse
from liststand.warehouse.docs import MESSAGE_SCHEMA, message_to_tree, tree_to_message

DEFAULT_COLLECTION = "messages"
DATA_DIR_ENV = "LISTSTAND_DATA"


class StateError(ListstandError):
    """A service operation was asked to run against unusable state."""


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "liststand-data"))


@dataclass
class Job:
    job_id: str
    status: str = "pending"  # pending -> running -> done | failed
    detail: dict | None = None
    error: str | None = None


class JobManager:
    """Fire-and-forget background work; results stay until process exit."""

    def __init__(self) -> None:
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, fn: Callable[[], dict]) -> Job:
        job = Job(job_id=uuid.uuid4().hex)
        with self._lock:
            self._jobs[job.job_id] = job

        def run() -> None:
            job.status = "running"
            try:
                job.detail = fn()
                job.status = "done"
            except Exception as exc:  # noqa: BLE001 - a job must never kill the process
                job.error = str(exc)
                job.status = "failed"

        threading.Thread(target=run, daemon=True).start()
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)


@dataclass(frozen=True)
class AnalysisBundle:
    """Everything the statistics endpoints need, parsed once per version."""

    messages: tuple[Message, ...]
    catalog: EntityCatalog
    forest: ThreadForest
    version: int


@dataclass
class AppState:
    data_dir: Path
    warehouse: Warehouse = field(init=False)
    views: ViewRegistry = field(init=False)
    facts: FactStore = field(init=False)
    jobs: JobManager = field(init=False)

    def __post_init__(self) -> None:
        self.data_dir = Path(self.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.warehouse = Warehouse(self.data_dir / "warehouse")
        self.views = ViewRegistry(self.warehouse)
        self.facts = FactStore()
        self.jobs = JobManager()
        self._facts_path = self.data_dir / "facts.jsonl"
        self._institutions_path = self.data_dir / "institutions.csv"
        self._facts_lock = threading.Lock()
        self._analysis_lock = threading.Lock()
        self._analysis: dict[str, AnalysisBundle] = {}
        self._replay_facts()

    # -- ingest ---------------------------------------------------------

    def ingest(self, sources: list[MailboxSource], collection: str = DEFAULT_COLLECTION,
               list_tags: frozenset[str] | None = None) -> dict:
        """Load every source and append the messages to a collection."""
        result = load_sources(sources, list_tags=list_tags)
        if not self.warehouse.exists(collection):
            self.warehouse.create(collection, MESSAGE_SCHEMA)
        ids = self.warehouse.store_many(collection, [message_to_tree(m) for m in result.messages])
        snap = self.warehouse.snapshot(collection)
        return {
            "collection": collection,
            "stored": len(ids),
            "version": snap.version,
            "documents": len(snap.documents),
            "errors": [{"source_id": e.source_id, "error": e.error} for e in result.errors],
        }

    # -- analysis caches ------------------------------------------------

    def analysis(self, collection: str = DEFAULT_COLLECTION) -> AnalysisBundle:
        """Messages, catalog, and forest for a collection, cached by version."""
        snap = self.warehouse.snapshot(collection)
        with self._analysis_lock:
            bundle = self._analysis.get(collection)
            if bundle is not None and bundle.version == snap.version:
                return bundle
        try:
            messages = tuple(tree_to_message(doc) for doc in snap.documents)
        except (KeyError, AttributeError) as exc:
            raise StateError(f"collection {collection!r} does not hold messages") from exc
        bundle = AnalysisBundle(
            messages=messages,
            catalog=resolve_entities(list(messages)),
            forest=build_threads(list(messages)),
            version=snap.version,
        )
        with self._analysis_lock:
            self._analysis[collection] = bundle
        return bundle

    # -- institution map ------------------------------------------------

    def institution_map(self) -> InstitutionMap | None:
        if not self._institutions_path.exists():
            return None
        with self._institutions_path.open() as fp:
            return InstitutionMap.from_csv(fp)

    def set_institutions(self, text: str) -> InstitutionMap:
        imap = InstitutionMap.from_csv(io.StringIO(text))  # reject bad lines first
        tmp = self._institutions_path.with_suffix(".tmp")
        tmp.write_text(text)
        os.replace(tmp, self._institutions_path)
        return imap

    # -- facts ----------------------------------------------------------

    def assert_fact(self, data: dict) -> int:
        """One {"fact": …, "chain": …} assertion, persisted on success."""
        fact, chain = parse_assertion(data)
        with self._facts_lock:
            fact_id = self.facts.assert_fact(fact, chain)
            self._append_fact_line(json.dumps(data, sort_keys=True))
        return fact_id

    def assert_bulk(self, lines: list[str]) -> list[int]:
        with self._facts_lock:
            ids = self.facts.assert_bulk(lines)
            for line in lines:
                if line.strip():
                    self._append_fact_line(line.strip())
        return ids

    def _append_fact_line(self, line: str) -> None:
        with self._facts_path.open("a") as fp:
            fp.write(line + "\n")

    def _replay_facts(self) -> None:
        if not self._facts_path.exists():
            return
        for lineno, line in enumerate(self._facts_path.read_text().splitlines(), 1):
            if not line.strip():
                continue
            try:
                fact, chain = parse_assertion(json.loads(line))
            except (json.JSONDecodeError, ListstandError) as exc:
                raise StateError(f"facts journal line {lineno}: {exc}") from exc
            self.facts.assert_fact(fact, chain)

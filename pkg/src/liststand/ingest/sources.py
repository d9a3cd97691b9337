"""Multi-source corpus loading with per-source isolation.

Sources parse independently (one worker each, optionally in parallel);
a failing source is recorded and the rest proceed. The final merge
dedupes globally, single-threaded.
"""

from __future__ import annotations

import logging
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from liststand.ingest.mbox import iter_mbox_records
from liststand.ingest.model import MailboxSource, Message
from liststand.ingest.normalize import dedupe, normalize_message

log = logging.getLogger(__name__)

FETCH_TIMEOUT_SECONDS = 30


@dataclass
class SourceError:
    source_id: str
    error: str


@dataclass
class IngestResult:
    messages: list[Message] = field(default_factory=list)
    errors: list[SourceError] = field(default_factory=list)


def _parse_stream(data: bytes, source_id: str, list_tags: frozenset[str] | None) -> list[Message]:
    # records normalize one at a time so raw buffers can be collected early
    return [
        normalize_message(record, list_tags)
        for record in iter_mbox_records(data, source_id)
    ]


def _load_one(source: MailboxSource, list_tags: frozenset[str] | None) -> IngestResult:
    result = IngestResult()
    if source.kind == "mbox_file":
        data = Path(source.uri).read_bytes()
        result.messages = dedupe(_parse_stream(data, source.source_id, list_tags))
    elif source.kind == "archive_dir":
        root = Path(source.uri)
        if not root.is_dir():
            raise FileNotFoundError(f"not a directory: {source.uri}")
        collected: list[Message] = []
        for path in sorted(p for p in root.rglob("*") if p.is_file()):
            collected.extend(_parse_stream(path.read_bytes(), str(path), list_tags))
        result.messages = dedupe(collected)
    elif source.kind == "url_list":
        urls = [
            line.strip()
            for line in Path(source.uri).read_text().splitlines()
            if line.strip() and not line.strip().startswith("#")
        ]
        collected = []
        for url in urls:
            try:
                with urllib.request.urlopen(url, timeout=FETCH_TIMEOUT_SECONDS) as resp:
                    data = resp.read()
            except (urllib.error.URLError, OSError, ValueError) as exc:
                result.errors.append(SourceError(url, str(exc)))
                continue
            collected.extend(_parse_stream(data, url, list_tags))
        result.messages = dedupe(collected)
    return result


def load_sources(
    sources: list[MailboxSource],
    list_tags: frozenset[str] | None = None,
    max_workers: int | None = None,
) -> IngestResult:
    """Parse, normalize, and dedupe every source, then dedupe globally.

    Unreachable sources are recorded as errors; the rest still load.
    """
    if not sources:
        return IngestResult()

    workers = max_workers or min(4, len(sources))
    merged = IngestResult()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_load_one, src, list_tags) for src in sources]
        for source, future in zip(sources, futures):
            try:
                result = future.result()
            except Exception as exc:
                log.warning("source %s failed: %s", source.source_id, exc)
                merged.errors.append(SourceError(source.source_id, str(exc)))
                continue
            merged.messages.extend(result.messages)
            merged.errors.extend(result.errors)
    merged.messages = dedupe(merged.messages)
    return merged

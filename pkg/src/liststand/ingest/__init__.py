"""Email corpus ingestion: mbox parsing, cleaning, deduplication."""

from liststand.ingest.mbox import iter_mbox_records, parse_mbox, serialize_mbox
from liststand.ingest.model import (
    MailboxSource,
    Message,
    RawMessage,
    format_timestamp,
    parse_timestamp,
    read_messages_jsonl,
    write_messages_jsonl,
)
from liststand.ingest.normalize import dedupe, normalize_message, normalize_subject
from liststand.ingest.sources import IngestResult, SourceError, load_sources

__all__ = [
    "IngestResult",
    "MailboxSource",
    "Message",
    "RawMessage",
    "SourceError",
    "dedupe",
    "format_timestamp",
    "iter_mbox_records",
    "load_sources",
    "normalize_message",
    "normalize_subject",
    "parse_mbox",
    "parse_timestamp",
    "read_messages_jsonl",
    "serialize_mbox",
    "write_messages_jsonl",
]

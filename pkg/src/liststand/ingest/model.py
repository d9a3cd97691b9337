"""Message records and their JSON-lines serialization.

A corpus moves through two shapes: ``RawMessage`` (undecoded mbox record,
headers split but not interpreted) and ``Message`` (cleaned, normalized,
ready for threading and analytics). Messages serialize one-per-line to
JSON-lines dumps, the interchange format between pipeline stages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator

from liststand.errors import ListstandError

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

SOURCE_KINDS = ("mbox_file", "archive_dir", "url_list")


class IngestError(ListstandError):
    pass


def format_timestamp(dt: datetime) -> str:
    """Render a UTC timestamp as ISO-8601 with a Z suffix."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    """Parse ISO-8601 (Z or offset suffix); naive input is taken as UTC."""
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


@dataclass
class RawMessage:
    """One mbox record: split header lines plus the raw body bytes.

    ``from_line`` keeps the mbox "From " separator line; the date on it is
    the fallback when a record carries no parseable Date header.
    """

    source_id: str
    offset: int
    header_lines: list[tuple[str, str]]
    body_bytes: bytes
    from_line: str | None = None

    def header(self, name: str) -> str | None:
        """First header value with the given name, case-insensitive."""
        lowered = name.lower()
        for hname, value in self.header_lines:
            if hname.lower() == lowered:
                return value
        return None


@dataclass(slots=True)
class Message:
    """A cleaned email with identity, reply linkage, and body text."""

    message_id: str
    in_reply_to: str | None
    references: list[str]
    from_display: str | None
    from_address: str
    date: datetime
    subject_raw: str
    subject_norm: str
    body_text: str
    source_id: str
    offset: int
    flags: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "message_id": self.message_id,
            "in_reply_to": self.in_reply_to,
            "references": list(self.references),
            "from_display": self.from_display,
            "from_address": self.from_address,
            "date": format_timestamp(self.date),
            "subject_raw": self.subject_raw,
            "subject_norm": self.subject_norm,
            "body_text": self.body_text,
            "source_id": self.source_id,
            "offset": self.offset,
            "flags": list(self.flags),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Message":
        return cls(
            message_id=data["message_id"],
            in_reply_to=data.get("in_reply_to"),
            references=list(data.get("references") or []),
            from_display=data.get("from_display"),
            from_address=data["from_address"],
            date=parse_timestamp(data["date"]),
            subject_raw=data.get("subject_raw", ""),
            subject_norm=data.get("subject_norm", ""),
            body_text=data.get("body_text", ""),
            source_id=data.get("source_id", ""),
            offset=int(data.get("offset", 0)),
            flags=list(data.get("flags") or []),
        )


@dataclass
class MailboxSource:
    """A parseable origin of messages; ``kind`` selects the strategy."""

    source_id: str
    kind: str
    uri: str

    def __post_init__(self) -> None:
        if self.kind not in SOURCE_KINDS:
            raise IngestError(f"unknown source kind: {self.kind!r}")
        if not self.uri:
            raise IngestError("source uri must be non-empty")


def write_messages_jsonl(messages: Iterable[Message], fp: IO[str]) -> int:
    """Write one Message object per line; returns the number written."""
    count = 0
    for msg in messages:
        fp.write(json.dumps(msg.to_json_dict(), ensure_ascii=False))
        fp.write("\n")
        count += 1
    return count


def read_messages_jsonl(fp: IO[str]) -> Iterator[Message]:
    for line in fp:
        line = line.strip()
        if not line:
            continue
        yield Message.from_json_dict(json.loads(line))

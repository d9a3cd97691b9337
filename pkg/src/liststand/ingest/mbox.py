"""Mbox record splitting and reassembly.

Boundary convention is mboxrd: a record starts at a line beginning
``From `` that sits at the start of the file or directly after a blank
line. Body lines matching ``^>+From `` lose one ``>`` on read and regain
it on write. Header folding (continuation lines starting with space or
tab) is unfolded with the fold replaced by a single space. Line endings
are normalized to LF; a single trailing CR per line is dropped.

Records that cannot be parsed (no blank line terminating the header
block, a junk line among the headers, or no headers at all) are still
emitted, with an empty header list and the whole record content as body,
and a warning is logged with source and offset.
"""

from __future__ import annotations

import logging
import re
from typing import Iterable, Iterator

from liststand.ingest.model import RawMessage

log = logging.getLogger(__name__)

_HEADER_RE = re.compile(rb"^([^\s:]+):[ \t]?(.*)$")
_ESCAPED_FROM_RE = re.compile(rb"^(>+)From ")


def _is_blank(line: bytes) -> bool:
    return line == b"" or line == b"\r"


def _strip_cr(line: bytes) -> bytes:
    return line[:-1] if line.endswith(b"\r") else line


def _unescape_body_line(line: bytes) -> bytes:
    if _ESCAPED_FROM_RE.match(line):
        return line[1:]
    return line


def _parse_record(
    from_line: bytes | None, lines: list[bytes], offset: int, source_id: str
) -> RawMessage:
    headers: list[tuple[str, str]] = []
    body_start: int | None = None
    malformed = None

    for i, raw_line in enumerate(lines):
        line = _strip_cr(raw_line)
        if _is_blank(raw_line):
            body_start = i + 1
            break
        if line[:1] in (b" ", b"\t"):
            if not headers:
                malformed = "continuation line before any header"
                break
            name, value = headers[-1]
            headers[-1] = (name, value + " " + line.strip(b" \t").decode("latin-1"))
            continue
        match = _HEADER_RE.match(line)
        if match is None or not match.group(1):
            malformed = "non-header line in header block"
            break
        headers.append(
            (match.group(1).decode("latin-1"), match.group(2).strip().decode("latin-1"))
        )

    if malformed is None and body_start is None and lines:
        malformed = "no blank line after headers"

    if malformed is not None:
        log.warning("malformed mbox record (%s) at %s offset %d", malformed, source_id, offset)
        headers = []
        body_lines = lines
    else:
        body_lines = lines[body_start:] if body_start is not None else []

    body = b"\n".join(_unescape_body_line(_strip_cr(line)) for line in body_lines)
    return RawMessage(
        source_id=source_id,
        offset=offset,
        header_lines=headers,
        body_bytes=body,
        from_line=_strip_cr(from_line).decode("latin-1") if from_line is not None else None,
    )


def iter_mbox_records(data: bytes, source_id: str) -> Iterator[RawMessage]:
    """Split raw mbox bytes into records, lazily."""
    lines = data.split(b"\n")
    # data.split leaves a trailing empty element when data ends with \n
    if lines and lines[-1] == b"":
        lines.pop()

    current: list[bytes] | None = None
    current_from: bytes | None = None
    current_offset = 0
    offset = 0
    prev_blank = True  # start of file counts as a boundary position

    for line in lines:
        if line.startswith(b"From ") and prev_blank:
            if current is not None:
                yield _parse_record(current_from, current, current_offset, source_id)
            current = []
            current_from = line
            current_offset = offset
        elif current is None:
            # content before the first "From " line becomes one record
            # with no separator; _parse_record flags it as malformed
            current = [line]
            current_from = None
            current_offset = 0
        else:
            current.append(line)
        prev_blank = _is_blank(line)
        offset += len(line) + 1

    if current is not None:
        yield _parse_record(current_from, current, current_offset, source_id)


def parse_mbox(data: bytes, source_id: str) -> list[RawMessage]:
    """Split mbox bytes into records; every record appears once, in order."""
    return list(iter_mbox_records(data, source_id))


def serialize_mbox(records: Iterable[RawMessage]) -> bytes:
    """Reassemble records into mbox bytes (mboxrd escaping on write)."""
    chunks: list[bytes] = []
    for rec in records:
        from_line = rec.from_line or "From MAILER-DAEMON Thu Jan  1 00:00:00 1970"
        chunks.append(from_line.encode("latin-1") + b"\n")
        for name, value in rec.header_lines:
            chunks.append(f"{name}: {value}\n".encode("latin-1"))
        chunks.append(b"\n")
        if rec.body_bytes:
            body_lines = rec.body_bytes.split(b"\n")
            escaped = [
                b">" + line if re.match(rb"^>*From ", line) else line for line in body_lines
            ]
            chunks.append(b"\n".join(escaped))
            if not rec.body_bytes.endswith(b"\n"):
                chunks.append(b"\n")
        chunks.append(b"\n")
    return b"".join(chunks)

"""Raw record cleaning: identity, dates, subjects, bodies.

Charset policy throughout: declared charset first, then UTF-8, then
latin-1, which cannot fail. Decoding never raises; records that needed
a fallback or a synthesized value carry flags.
"""

from __future__ import annotations

import email
import email.header
import email.utils
import hashlib
import logging
import re
from datetime import datetime, timezone

from liststand.ingest.model import EPOCH, Message, RawMessage

log = logging.getLogger(__name__)

SENTINEL_ADDRESS = "unknown@unknown.invalid"

_REPLY_PREFIX_RE = re.compile(r"^(?:re|fwd|fw):", re.IGNORECASE)
_LIST_TAG_RE = re.compile(r"^\[([^\[\]]*)\]")
_ANGLE_TOKEN_RE = re.compile(r"<([^<>]*)>")

# inner tag text longer than this is assumed to be content, not a list tag
DEFAULT_MAX_TAG_LEN = 30


def normalize_subject(subject: str, list_tags: frozenset[str] | None = None) -> str:
    """Strip reply prefixes and a leading list tag, lowercase, collapse.

    Reply prefixes ("re:", "fwd:", "fw:", any repetition, any case) are
    removed. With ``list_tags`` given, every leading bracketed tag in the
    set is removed; without it, a single leading bracketed token of up to
    30 characters is removed. Idempotent.
    """
    s = subject
    default_tag_stripped = False
    while True:
        s = s.lstrip()
        m = _REPLY_PREFIX_RE.match(s)
        if m:
            s = s[m.end():]
            continue
        m = _LIST_TAG_RE.match(s)
        if m:
            tag = m.group(1).strip().lower()
            if list_tags is not None:
                if tag in list_tags:
                    s = s[m.end():]
                    continue
            elif not default_tag_stripped and len(tag) <= DEFAULT_MAX_TAG_LEN:
                default_tag_stripped = True
                s = s[m.end():]
                continue
        break
    return " ".join(s.split()).lower()


def decode_header_text(value: str) -> str:
    """Decode MIME encoded-word fragments (=?charset?Q/B?...?=)."""
    try:
        parts = email.header.decode_header(value)
    except Exception:
        return value
    out: list[str] = []
    for data, charset in parts:
        if isinstance(data, str):
            out.append(data)
            continue
        for encoding in filter(None, (charset, "utf-8", "latin-1")):
            try:
                out.append(data.decode(encoding))
                break
            except (LookupError, UnicodeDecodeError):
                continue
        else:
            out.append(data.decode("latin-1", errors="replace"))
    return "".join(out)


def _angle_tokens(value: str | None) -> list[str]:
    if not value:
        return []
    return [tok.strip() for tok in _ANGLE_TOKEN_RE.findall(value) if tok.strip()]


def _message_identity(raw: RawMessage, flags: list[str]) -> str:
    header = raw.header("Message-ID") or raw.header("Message-Id")
    if header:
        tokens = _angle_tokens(header)
        if tokens:
            return tokens[0]
        stripped = header.strip().strip("<>").strip()
        if stripped:
            return stripped
    digest = hashlib.sha1()
    for name, value in raw.header_lines:
        digest.update(f"{name}: {value}\n".encode("latin-1"))
    digest.update(b"\n")
    digest.update(raw.body_bytes)
    flags.append("synthetic_message_id")
    return f"sha1:{digest.hexdigest()}@synthetic"


def _parse_from_line_date(from_line: str) -> datetime | None:
    # "From addr Mon Apr  1 12:00:00 2002" with optional trailing zone
    parts = from_line.split(None, 2)
    if len(parts) < 3:
        return None
    rest = " ".join(parts[2].split())
    for fmt in ("%a %b %d %H:%M:%S %Y", "%a %b %d %H:%M:%S %Y %z"):
        try:
            dt = datetime.strptime(rest, fmt)
        except ValueError:
            continue
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.astimezone(timezone.utc)
    return None


def _message_date(raw: RawMessage, flags: list[str]) -> datetime:
    header = raw.header("Date")
    if header:
        try:
            dt = email.utils.parsedate_to_datetime(header)
            if dt is not None:
                if dt.tzinfo is None:
                    dt = dt.replace(tzinfo=timezone.utc)
                return dt.astimezone(timezone.utc)
        except (ValueError, TypeError, OverflowError):
            pass
    if raw.from_line:
        dt = _parse_from_line_date(raw.from_line)
        if dt is not None:
            flags.append("date_from_mbox_line")
            return dt
    flags.append("date_epoch_fallback")
    return EPOCH


def _sender(raw: RawMessage, flags: list[str]) -> tuple[str | None, str]:
    header = raw.header("From")
    display: str | None = None
    address = ""
    if header:
        decoded = decode_header_text(header)
        name, addr = email.utils.parseaddr(decoded)
        display = name.strip() or None
        address = addr.strip().strip("<>").lower()
    if address.count("@") != 1:
        flags.append("from_unparseable")
        address = SENTINEL_ADDRESS
    return display, address


def _decode_part_payload(part, raw_fallback: bytes) -> str:
    try:
        payload = part.get_payload(decode=True)
    except Exception:
        payload = None
    if payload is None:
        payload = raw_fallback
    for encoding in filter(None, (part.get_content_charset(), "utf-8")):
        try:
            return payload.decode(encoding)
        except (LookupError, UnicodeDecodeError):
            continue
    return payload.decode("latin-1")


def _body_text(raw: RawMessage) -> str:
    header_bytes = b"".join(
        f"{name}: {value}\n".encode("latin-1") for name, value in raw.header_lines
    )
    try:
        parsed = email.message_from_bytes(header_bytes + b"\n" + raw.body_bytes)
        if parsed.is_multipart():
            for part in parsed.walk():
                if part.is_multipart():
                    continue
                if part.get_content_type() == "text/plain":
                    return _decode_part_payload(part, raw.body_bytes)
            return raw.body_bytes.decode("latin-1")
        return _decode_part_payload(parsed, raw.body_bytes)
    except Exception:
        return raw.body_bytes.decode("latin-1")


def normalize_message(
    raw: RawMessage, list_tags: frozenset[str] | None = None
) -> Message:
    """Turn one raw record into a cleaned Message. Never raises.

    Missing identity, unparseable dates, and unparseable senders fall
    back to synthesized values and are flagged.
    """
    flags: list[str] = []
    message_id = _message_identity(raw, flags)
    date = _message_date(raw, flags)
    display, address = _sender(raw, flags)

    subject_raw = decode_header_text(raw.header("Subject") or "")
    in_reply_tokens = _angle_tokens(raw.header("In-Reply-To"))

    return Message(
        message_id=message_id,
        in_reply_to=in_reply_tokens[0] if in_reply_tokens else None,
        references=_angle_tokens(raw.header("References")),
        from_display=display,
        from_address=address,
        date=date,
        subject_raw=subject_raw,
        subject_norm=normalize_subject(subject_raw, list_tags),
        body_text=_body_text(raw),
        source_id=raw.source_id,
        offset=raw.offset,
        flags=flags,
    )


def dedupe(messages: list[Message]) -> list[Message]:
    """Keep one message per message_id; idempotent.

    The survivor is the copy with the smallest (source_id, offset);
    output preserves the input order of the surviving copies.
    """
    best: dict[str, tuple[tuple[str, int], int]] = {}
    for index, msg in enumerate(messages):
        key = (msg.source_id, msg.offset)
        kept = best.get(msg.message_id)
        if kept is None or key < kept[0]:
            best[msg.message_id] = (key, index)
    survivor_indexes = sorted(index for _, index in best.values())
    dropped = len(messages) - len(survivor_indexes)
    if dropped:
        log.info("dedupe dropped %d duplicate message(s)", dropped)
    return [messages[i] for i in survivor_indexes]

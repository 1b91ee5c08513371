"""Mbox framing and RFC 5322 message decoding."""

from __future__ import annotations

import email
import email.header
import email.policy
import email.utils
import gzip
import hashlib
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

from patchvet.errors import MboxFramingError

log = logging.getLogger(__name__)

_ID_RE = re.compile(r"<([^<>\s]+)>")
_ESCAPED_FROM = re.compile(rb"^>(>*From )")
GZIP_MAGIC = b"\x1f\x8b"


@dataclass(frozen=True)
class EmailMessage:
    message_id: str
    in_reply_to: str | None
    references: tuple[str, ...]
    author: str
    date: datetime | None
    subject: str
    body: str
    raw_headers: dict[str, tuple[str, ...]] = field(default_factory=dict, compare=False, repr=False)
    synthetic_id: bool = False

    @property
    def address(self) -> str:
        return email.utils.parseaddr(self.author)[1].lower()

    @property
    def parent_candidates(self) -> tuple[str, ...]:
        """In-Reply-To first, then References from last to first."""
        out = []
        if self.in_reply_to:
            out.append(self.in_reply_to)
        out.extend(r for r in reversed(self.references) if r not in out)
        return tuple(out)


@dataclass(frozen=True)
class DecodeFailure:
    offset: int
    reason: str


def normalize_msgid(value: str | None) -> str | None:
    if not value:
        return None
    m = _ID_RE.search(value)
    if m:
        return m.group(1)
    value = value.strip()
    return value or None


def _ids(value: str | None) -> tuple[str, ...]:
    if not value:
        return ()
    found = _ID_RE.findall(value)
    if not found:
        found = value.split()
    return tuple(found)


def maybe_gunzip(data: bytes) -> bytes:
    if data[:2] == GZIP_MAGIC:
        return gzip.decompress(data)
    return data


def split_mbox(data: bytes) -> list[tuple[int, bytes]]:
    """Split an mbox byte stream into (offset, raw message) pairs.

    A separator is a line starting with ``From `` that is either the first
    line or follows a blank line. ``>From `` escapes (mboxrd) are undone.
    """
    data = maybe_gunzip(data)
    if not data.strip():
        return []
    start = len(data) - len(data.lstrip(b"\r\n"))
    if not data.startswith(b"From ", start):
        raise MboxFramingError("mbox does not begin with a 'From ' separator line", start)

    chunks: list[tuple[int, bytes]] = []
    current: list[bytes] = []
    current_offset = start
    prev_blank = True
    offset = start
    for line in data[start:].splitlines(keepends=True):
        if line.startswith(b"From ") and prev_blank:
            if current:
                chunks.append((current_offset, b"".join(current)))
            current = []
            current_offset = offset
        else:
            current.append(_ESCAPED_FROM.sub(rb"\1", line))
        prev_blank = line.strip() == b""
        offset += len(line)
    chunks.append((current_offset, b"".join(current)))
    return chunks


def _decode_payload(part: email.message.Message) -> str:
    payload = part.get_payload(decode=True) or b""
    charset = part.get_content_charset() or "utf-8"
    try:
        return payload.decode(charset, errors="replace")
    except LookupError:
        return payload.decode("utf-8", errors="replace")


def _text_body(msg: email.message.Message) -> str:
    parts = []
    for part in msg.walk():
        if part.is_multipart():
            continue
        if part.get_content_maintype() != "text" or part.get_content_subtype() == "html":
            continue
        parts.append(_decode_payload(part))
    return "\n".join(parts).replace("\r\n", "\n")


def _decode_header(value) -> str:
    """RFC 2047 decoding; raw 8-bit bytes are read as UTF-8 with replacement."""
    try:
        chunks = email.header.decode_header(value)
    except (email.errors.HeaderParseError, ValueError):
        return str(value)
    out = []
    for chunk, charset in chunks:
        if isinstance(chunk, str):
            out.append(chunk)
            continue
        if charset in (None, "unknown-8bit"):
            charset = "utf-8"
        try:
            out.append(chunk.decode(charset, errors="replace"))
        except LookupError:
            out.append(chunk.decode("utf-8", errors="replace"))
    # decode_header drops the whitespace between encoded and plain words
    return "".join(out) if len(chunks) > 1 else (out[0] if out else "")


def _header(msg: email.message.Message, name: str) -> str | None:
    value = msg.get(name)
    return None if value is None else _decode_header(value)


def _parse_date(value: str | None) -> datetime | None:
    if not value:
        return None
    try:
        dt = email.utils.parsedate_to_datetime(value)
    except (TypeError, ValueError, IndexError):
        return None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def parse_message(raw: bytes) -> EmailMessage:
    # compat32 parsing is lazy about header structure, which keeps large
    # archives fast; headers are decoded explicitly below
    msg = email.message_from_bytes(raw, policy=email.policy.compat32)
    if not msg.keys():
        raise ValueError("message has no headers")

    headers: dict[str, list[str]] = {}
    for key, value in msg.items():
        headers.setdefault(key.lower(), []).append(_decode_header(value))

    message_id = normalize_msgid(_header(msg, "Message-ID"))
    synthetic = message_id is None
    if synthetic:
        message_id = f"synthetic-{hashlib.sha256(raw).hexdigest()[:24]}@patchvet.invalid"

    name, addr = email.utils.parseaddr(_header(msg, "From") or "")
    # formataddr would RFC 2047-encode non-ASCII names; keep them readable
    author = f"{name} <{addr}>" if name and addr else (addr or name)

    return EmailMessage(
        message_id=message_id,
        in_reply_to=normalize_msgid(_header(msg, "In-Reply-To")),
        references=_ids(_header(msg, "References")),
        author=author,
        date=_parse_date(_header(msg, "Date")),
        subject=" ".join((_header(msg, "Subject") or "").split()),
        body=_text_body(msg),
        raw_headers={k: tuple(v) for k, v in headers.items()},
        synthetic_id=synthetic,
    )


def parse_mbox(data: bytes, failures: list[DecodeFailure] | None = None) -> list[EmailMessage]:
    """Parse an mbox archive (optionally gzip-compressed) into messages.

    Framing errors raise :class:`MboxFramingError`. A message that cannot be
    decoded is skipped and, when *failures* is given, recorded there.
    """
    out = []
    for offset, raw in split_mbox(data):
        try:
            out.append(parse_message(raw))
        except Exception as exc:  # one bad message must not abort the archive
            log.warning("skipping undecodable message at offset %d: %s", offset, exc)
            if failures is not None:
                failures.append(DecodeFailure(offset, str(exc)))
    return out


def references_consistent(msg: EmailMessage) -> bool:
    if msg.references and msg.in_reply_to:
        return msg.references[-1] == msg.in_reply_to
    return True

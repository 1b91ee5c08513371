"""On-disk corpus store: one file per message plus a manifest."""

from __future__ import annotations

import json
import logging
import urllib.parse
from pathlib import Path
from typing import Iterator

from patchvet.corpus.messages import DecodeFailure, EmailMessage, parse_message, split_mbox

log = logging.getLogger(__name__)

MANIFEST = "manifest.jsonl"


def message_filename(message_id: str) -> str:
    return urllib.parse.quote(message_id, safe="@.-_+=") + ".eml"


class CorpusStore:
    """Messages keyed by percent-encoded message-id under ``root/messages``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._manifest: dict[str, dict] | None = None

    @property
    def message_dir(self) -> Path:
        return self.root / "messages"

    def _load_manifest(self) -> dict[str, dict]:
        if self._manifest is None:
            self._manifest = {}
            path = self.root / MANIFEST
            if path.exists():
                for line in path.read_text(encoding="utf-8").splitlines():
                    if line.strip():
                        entry = json.loads(line)
                        self._manifest[entry["message_id"]] = entry
        return self._manifest

    def _write_manifest(self) -> None:
        manifest = self._load_manifest()
        lines = [json.dumps(manifest[k], sort_keys=True) for k in sorted(manifest)]
        (self.root / MANIFEST).write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    def __contains__(self, message_id: str) -> bool:
        return message_id in self._load_manifest()

    def __len__(self) -> int:
        return len(self._load_manifest())

    def ingest(self, archive: bytes, failures: list[DecodeFailure] | None = None) -> int:
        """Add every message of an mbox archive; returns the number of new messages."""
        self.message_dir.mkdir(parents=True, exist_ok=True)
        manifest = self._load_manifest()
        added = 0
        for offset, raw in split_mbox(archive):
            try:
                msg = parse_message(raw)
            except Exception as exc:
                log.warning("skipping undecodable message at offset %d: %s", offset, exc)
                if failures is not None:
                    failures.append(DecodeFailure(offset, str(exc)))
                continue
            if msg.message_id in manifest:
                continue
            name = message_filename(msg.message_id)
            (self.message_dir / name).write_bytes(raw)
            manifest[msg.message_id] = {
                "message_id": msg.message_id,
                "file": name,
                "date": msg.date.isoformat() if msg.date else None,
                "subject": msg.subject,
                "synthetic": msg.synthetic_id,
            }
            added += 1
        self._write_manifest()
        return added

    def get(self, message_id: str) -> EmailMessage:
        entry = self._load_manifest().get(message_id)
        if entry is None:
            raise KeyError(message_id)
        return parse_message((self.message_dir / entry["file"]).read_bytes())

    def __iter__(self) -> Iterator[EmailMessage]:
        for mid in sorted(self._load_manifest()):
            yield self.get(mid)

    def messages(self) -> list[EmailMessage]:
        return list(self)


"""Optional HTTP client for public-inbox style archives."""

from __future__ import annotations

import logging
import urllib.error
import urllib.parse
import urllib.request
from typing import Callable

from patchvet.corpus.messages import maybe_gunzip

log = logging.getLogger(__name__)

Opener = Callable[[str, float], bytes]


def _urlopen(url: str, timeout: float) -> bytes:
    req = urllib.request.Request(url, headers={"User-Agent": "patchvet/0.1"})
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        return resp.read()


class ArchiveClient:
    """Fetches ``<base>/<message-id>/t.mbox.gz`` thread exports.

    Any network or HTTP failure returns None so callers fall back to the
    local corpus.
    """

    def __init__(self, base_url: str, opener: Opener | None = None, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.opener = opener or _urlopen
        self.timeout = timeout

    def thread_url(self, message_id: str) -> str:
        return f"{self.base_url}/{urllib.parse.quote(message_id, safe='@.-_+=')}/t.mbox.gz"

    def fetch_thread(self, message_id: str) -> bytes | None:
        url = self.thread_url(message_id)
        try:
            return maybe_gunzip(self.opener(url, self.timeout))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            log.warning("archive fetch failed for %s: %s", url, exc)
            return None

"""Line-delimited audit log of stage decisions."""

from __future__ import annotations

import json
import threading
from pathlib import Path


class AuditLog:
    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.events: list[dict] = []
        self._lock = threading.Lock()

    def record(self, stage: str, event: str, **data) -> None:
        with self._lock:
            entry = {"seq": len(self.events), "stage": stage, "event": event, **data}
            self.events.append(entry)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False, default=str) + "\n")

    def of(self, stage: str, event: str | None = None) -> list[dict]:
        return [e for e in self.events if e["stage"] == stage and (event is None or e["event"] == event)]

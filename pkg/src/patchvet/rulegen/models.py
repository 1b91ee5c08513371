"""Rules distilled from review discussions."""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field

MERGE_THRESHOLD = 30.0


class Category(str, enum.Enum):
    LOGIC = "Logic"
    CONVENTION = "Convention"


@dataclass(frozen=True, order=True)
class Source:
    message_id: str
    author: str


def compute_diversity_level(nr_authors: int, nr_msgid: int) -> float:
    """sqrt(nr_authors * nr_msgid) * 10."""
    if nr_authors < 1 or nr_msgid < 1:
        raise ValueError(f"diversity needs positive counts, got ({nr_authors}, {nr_msgid})")
    return math.sqrt(nr_authors * nr_msgid) * 10.0


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


@dataclass(frozen=True)
class RawRule:
    content: str
    sources: frozenset[Source]

    def __post_init__(self):
        if not normalize_ws(self.content):
            raise ValueError("rule content is empty")
        if not self.sources:
            raise ValueError("rule has no sources")

    @property
    def source_message_ids(self) -> frozenset[str]:
        return frozenset(s.message_id for s in self.sources)

    @property
    def source_authors(self) -> frozenset[str]:
        return frozenset(s.author for s in self.sources)


@dataclass(frozen=True)
class Rule:
    content: str
    category: Category
    sources: frozenset[Source]
    history: tuple[str, ...] = field(default=())

    @property
    def nr_authors(self) -> int:
        return len({s.author for s in self.sources})

    @property
    def nr_msgid(self) -> int:
        return len({s.message_id for s in self.sources})

    @property
    def diversity_level(self) -> float:
        return compute_diversity_level(self.nr_authors, self.nr_msgid)

    @property
    def rule_id(self) -> str:
        h = hashlib.sha256(f"{self.category.value}\0{self.content}".encode())
        return "R" + h.hexdigest()[:10]

    def mergeable(self, threshold: float = MERGE_THRESHOLD) -> bool:
        return self.diversity_level < threshold

    def problems(self) -> list[str]:
        out = []
        if not normalize_ws(self.content):
            out.append("empty content")
        if not isinstance(self.category, Category):
            out.append(f"bad category {self.category!r}")
        if not self.sources:
            out.append("no sources")
        elif any(not s.message_id or not s.author for s in self.sources):
            out.append("source with empty message-id or author")
        return out

    @classmethod
    def from_raw(cls, raw: RawRule, category: Category) -> "Rule":
        return cls(raw.content.strip(), category, raw.sources)

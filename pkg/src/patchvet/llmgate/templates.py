"""Versioned prompt templates shipped as package data."""

from __future__ import annotations

import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from patchvet.errors import PatchvetError

FREE_TEXT = "free_text"
STRUCTURED = "structured_document"


class TemplateError(PatchvetError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    version: int
    body: str
    expected_output_kind: str = FREE_TEXT

    @property
    def placeholders(self) -> set[str]:
        names = set()
        for m in string.Template.pattern.finditer(self.body):
            name = m.group("named") or m.group("braced")
            if name:
                names.add(name)
        return names

    def render(self, variables: dict[str, object]) -> str:
        missing = sorted(self.placeholders - set(variables))
        if missing:
            raise TemplateError(f"template {self.template_id} v{self.version}: unbound {', '.join(missing)}")
        return string.Template(self.body).substitute({k: str(v) for k, v in variables.items()})


def parse_template_file(text: str) -> PromptTemplate:
    """Header lines ``key: value`` up to the first blank line, then the body."""
    head, _, body = text.partition("\n\n")
    meta = {}
    for line in head.splitlines():
        key, sep, value = line.partition(":")
        if not sep:
            raise TemplateError(f"bad template header line {line!r}")
        meta[key.strip()] = value.strip()
    try:
        return PromptTemplate(
            template_id=meta["id"],
            version=int(meta["version"]),
            body=body,
            expected_output_kind=meta.get("output", FREE_TEXT),
        )
    except KeyError as exc:
        raise TemplateError(f"template header missing {exc}") from None


class TemplateRegistry:
    def __init__(self, templates: list[PromptTemplate] = ()):
        self._by_key: dict[tuple[str, int], PromptTemplate] = {}
        for t in templates:
            self.add(t)

    def add(self, template: PromptTemplate) -> None:
        self._by_key[(template.template_id, template.version)] = template

    def get(self, template_id: str, version: int | None = None) -> PromptTemplate:
        if version is None:
            versions = [v for (tid, v) in self._by_key if tid == template_id]
            if not versions:
                raise TemplateError(f"unknown template {template_id!r}")
            version = max(versions)
        try:
            return self._by_key[(template_id, version)]
        except KeyError:
            raise TemplateError(f"unknown template {template_id!r} v{version}") from None

    def ids(self) -> list[str]:
        return sorted({tid for tid, _ in self._by_key})

    @classmethod
    def from_directory(cls, path: str | Path) -> "TemplateRegistry":
        return cls([parse_template_file(p.read_text(encoding="utf-8")) for p in sorted(Path(path).glob("*.txt"))])

    @classmethod
    def builtin(cls) -> "TemplateRegistry":
        root = resources.files("patchvet.llmgate") / "prompts"
        items = [
            parse_template_file(entry.read_text(encoding="utf-8"))
            for entry in sorted(root.iterdir(), key=lambda e: e.name)
            if entry.name.endswith(".txt")
        ]
        return cls(items)

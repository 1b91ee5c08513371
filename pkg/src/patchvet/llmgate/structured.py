"""JSON document extraction and shallow schema checks for model output."""

from __future__ import annotations

import json
import re

from patchvet.errors import PatchvetError

_FENCE = re.compile(r"^\s*```[\w-]*\s*\n(.*?)\n\s*```\s*$", re.S)

_KINDS = {
    "str": (str,),
    "int": (int,),
    "float": (int, float),
    "number": (int, float),
    "bool": (bool,),
    "list": (list,),
    "dict": (dict,),
}


class StructuredOutputError(PatchvetError):
    def __init__(self, message: str, problems: list[str] = (), raw_candidates: list[str] = ()):
        super().__init__(message)
        self.problems = list(problems)
        self.raw_candidates = list(raw_candidates)


def strip_fences(text: str) -> str:
    m = _FENCE.match(text)
    return m.group(1) if m else text


def parse_document(text: str) -> dict:
    body = strip_fences(text.strip())
    try:
        doc = json.loads(body)
    except json.JSONDecodeError:
        start, end = body.find("{"), body.rfind("}")
        if start == -1 or end <= start:
            raise ValueError("no JSON object found") from None
        try:
            doc = json.loads(body[start : end + 1])
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError("top-level JSON value is not an object")
    return doc


def schema_problems(doc: dict, schema: dict[str, str]) -> list[str]:
    """Check required fields and their kinds. A kind ending in '?' is optional."""
    problems = []
    for name, kind in schema.items():
        optional = kind.endswith("?")
        kind = kind.rstrip("?")
        if name not in doc or doc[name] is None:
            if not optional:
                problems.append(f"missing required field '{name}'")
            continue
        value = doc[name]
        allowed = _KINDS[kind]
        if isinstance(value, bool) and bool not in allowed:
            problems.append(f"field '{name}' must be {kind}")
        elif not isinstance(value, allowed):
            problems.append(f"field '{name}' must be {kind}")
    return problems

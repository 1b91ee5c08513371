"""Lexical symbol index over a C source tree.

The scanner tracks braces, comments, strings and preprocessor lines; it
does not parse C. It finds function definitions, struct/union/enum
definitions and #define macros, and remembers the comment block right
before each one. Excerpts are always verbatim slices of the source files.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import logging
import os
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from patchvet.corpus.patches import Patch

log = logging.getLogger(__name__)

FUNCTION, TYPE, MACRO = "function", "type", "macro"
DEFAULT_SUFFIXES = (".c", ".h")
DEFAULT_BUDGET = 24_000
INDEX_VERSION = 1

C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern float for goto if
    inline int long register restrict return short signed sizeof static struct switch typedef union
    unsigned void volatile while _Bool _Complex _Imaginary _Alignas _Alignof _Atomic _Generic
    _Noreturn _Static_assert _Thread_local bool true false NULL typeof __typeof__ asm __asm__
    __attribute__ __inline__ __volatile__ __restrict__ defined include define undef ifdef ifndef
    endif elif pragma""".split()
)

_IDENT = re.compile(r"\b[A-Za-z_]\w*")
_AGGREGATES = {"struct", "union", "enum"}


@dataclass(frozen=True)
class Definition:
    symbol: str
    path: str
    kind: str
    start_line: int
    end_line: int
    start: int
    end: int
    comment_start: int | None = None
    body_identifiers: frozenset[str] = frozenset()

    @property
    def excerpt_start(self) -> int:
        return self.start if self.comment_start is None else self.comment_start


# scanning


@dataclass
class _Tok:
    kind: str  # ident, punct, comment, pp
    text: str
    start: int
    end: int


def _tokens(src: str) -> Iterable[_Tok]:
    i, n = 0, len(src)
    line_start = True
    while i < n:
        c = src[i]
        if c == "\n":
            line_start = True
            i += 1
            continue
        if c in " \t\r\f\v":
            i += 1
            continue
        if c == "/" and src.startswith("/*", i):
            j = src.find("*/", i + 2)
            j = n if j < 0 else j + 2
            yield _Tok("comment", src[i:j], i, j)
            i = j
            continue
        if c == "/" and src.startswith("//", i):
            j = src.find("\n", i)
            j = n if j < 0 else j
            yield _Tok("comment", src[i:j], i, j)
            i = j
            continue
        if c == "#" and line_start:
            j = i
            while True:
                k = src.find("\n", j)
                if k < 0:
                    j = n
                    break
                if src[k - 1] == "\\" or (src[k - 1] == "\r" and src[k - 2] == "\\"):
                    j = k + 1
                    continue
                j = k
                break
            yield _Tok("pp", src[i:j], i, j)
            i = j
            continue
        line_start = False
        if c in "\"'":
            j = i + 1
            while j < n and src[j] != c and src[j] != "\n":
                j += 2 if src[j] == "\\" else 1
            j = min(n, j + 1)
            yield _Tok("punct", "str", i, j)
            i = j
            continue
        if c.isalpha() or c == "_":
            m = _IDENT.match(src, i)
            yield _Tok("ident", m.group(), i, m.end())
            i = m.end()
            continue
        if c.isdigit():
            j = i + 1
            while j < n and (src[j].isalnum() or src[j] in "._"):
                j += 1
            yield _Tok("punct", "num", i, j)
            i = j
            continue
        yield _Tok("punct", c, i, i + 1)
        i += 1


_DEFINE = re.compile(r"#\s*define\s+([A-Za-z_]\w*)")


def _identifiers(tokens: Sequence[_Tok]) -> frozenset[str]:
    return frozenset(t.text for t in tokens if t.kind == "ident" and t.text not in C_KEYWORDS)


def _pp_identifiers(text: str, name: str) -> frozenset[str]:
    body = text[text.find(name) + len(name) :]
    body = re.sub(r"/\*.*?\*/|//[^\n]*|\"(?:\\.|[^\"\\])*\"", " ", body, flags=re.S)
    return frozenset(i for i in _IDENT.findall(body) if i not in C_KEYWORDS)


def _line_of(line_starts: list[int], offset: int) -> int:
    return bisect.bisect_right(line_starts, offset)


def scan_source(src: str, path: str) -> list[Definition]:
    """All definitions found in *src*; *path* is recorded verbatim."""
    toks = list(_tokens(src))
    line_starts = [0] + [m.end() for m in re.finditer("\n", src)]
    defs: list[Definition] = []

    def comment_before(start: int, stmt_idx: int) -> int | None:
        # contiguous comment tokens directly before the statement, separated only by whitespace
        j = stmt_idx - 1
        first = None
        boundary = start
        while j >= 0 and toks[j].kind == "comment" and not src[toks[j].end : boundary].strip():
            if src.count("\n", toks[j].end, boundary) > 1:
                break
            first = toks[j].start
            boundary = toks[j].start
            j -= 1
        return first

    def add(symbol, kind, s_idx, start, end, body_ids):
        defs.append(
            Definition(
                symbol,
                path,
                kind,
                _line_of(line_starts, start),
                _line_of(line_starts, max(start, end - 1)),
                start,
                end,
                comment_before(start, s_idx),
                body_ids,
            )
        )

    def match_brace(i: int) -> int:
        depth = 0
        while i < len(toks):
            t = toks[i]
            if t.kind == "punct":
                if t.text == "{":
                    depth += 1
                elif t.text == "}":
                    depth -= 1
                    if depth == 0:
                        return i
            i += 1
        return len(toks) - 1

    stmt: list[int] = []  # token indexes of the current top-level statement
    i = 0
    while i < len(toks):
        t = toks[i]
        if t.kind == "comment":
            i += 1
            continue
        if t.kind == "pp":
            m = _DEFINE.match(t.text)
            if m:
                add(m.group(1), MACRO, i, t.start, t.end, _pp_identifiers(t.text, m.group(1)))
            i += 1
            continue
        if t.kind == "punct" and t.text == ";":
            stmt = []
            i += 1
            continue
        if t.kind == "punct" and t.text == "{":
            close = match_brace(i)
            head = [toks[k] for k in stmt]
            body = toks[i + 1 : close]
            s_idx = stmt[0] if stmt else i
            start = toks[s_idx].start
            words = [h.text for h in head if h.kind == "ident"]
            agg = next((w for w in words[:3] if w in _AGGREGATES), None)
            if "=" in [h.text for h in head]:
                # initializer, not a definition we index
                i = close + 1
                continue
            if agg is not None and "(" not in [h.text for h in head]:
                # aggregate: optional tag name, optional trailing declarator or typedef name
                after = words.index(agg) + 1
                tag = words[after] if after < len(words) else None
                j = close + 1
                tail = []
                while j < len(toks) and not (toks[j].kind == "punct" and toks[j].text == ";"):
                    if toks[j].kind == "punct" and toks[j].text == "{":
                        break
                    tail.append(toks[j])
                    j += 1
                end = toks[j].end if j < len(toks) and toks[j].text == ";" else toks[close].end
                ids = _identifiers(body)
                if tag:
                    add(tag, TYPE, s_idx, start, end, ids)
                if "typedef" in words:
                    names = [x.text for x in tail if x.kind == "ident" and x.text not in C_KEYWORDS]
                    if names and names[-1] != tag:
                        add(names[-1], TYPE, s_idx, start, end, ids)
                i = j + 1 if j < len(toks) and toks[j].text == ";" else close + 1
                stmt = []
                continue
            name = _function_name(head)
            if name is not None:
                add(name, FUNCTION, s_idx, start, toks[close].end, _identifiers(body))
            i = close + 1
            stmt = []
            continue
        stmt.append(i)
        i += 1
    return defs


def _function_name(head: list[_Tok]) -> str | None:
    texts = [h.text for h in head]
    if "(" not in texts or "=" in texts or "typedef" in texts:
        return None
    if texts and texts[-1] != ")" and head[-1].kind != "ident":
        return None
    k = texts.index("(")
    if k == 0 or head[k - 1].kind != "ident" or head[k - 1].text in C_KEYWORDS:
        return None
    return head[k - 1].text


# index


def _read_text(path: Path) -> str:
    data = path.read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        return data.decode("latin-1")


@dataclass
class SymbolIndex:
    root: Path
    definitions: dict[str, tuple[Definition, ...]] = field(default_factory=dict)
    tree_digest: str = ""
    skipped: int = 0
    _cache: dict[str, str] = field(default_factory=dict, repr=False, compare=False)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self.definitions

    def __len__(self) -> int:
        return len(self.definitions)

    def get(self, symbol: str) -> tuple[Definition, ...]:
        return self.definitions.get(symbol, ())

    def source(self, rel_path: str) -> str:
        text = self._cache.get(rel_path)
        if text is None:
            text = self._cache[rel_path] = _read_text(self.root / rel_path)
        return text

    def excerpt_text(self, d: Definition) -> str:
        return self.source(d.path)[d.excerpt_start : d.end]

    def callees(self, symbol: str) -> list[str]:
        ids: set[str] = set()
        for d in self.get(symbol):
            ids |= d.body_identifiers
        return sorted(s for s in ids if s in self.definitions)

    # persistence

    def save(self, path: str | Path) -> None:
        head = {"version": INDEX_VERSION, "tree_digest": self.tree_digest, "skipped": self.skipped}
        lines = [json.dumps(head, sort_keys=True)]
        for symbol in sorted(self.definitions):
            for d in self.definitions[symbol]:
                doc = {
                    "symbol": d.symbol,
                    "kind": d.kind,
                    "path": d.path,
                    "span": [d.start_line, d.end_line],
                    "offsets": [d.start, d.end],
                    "comment_offset": d.comment_start,
                    "identifiers": sorted(d.body_identifiers),
                }
                lines.append(json.dumps(doc, sort_keys=True, ensure_ascii=False))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, root: str | Path) -> "SymbolIndex":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        head = json.loads(lines[0])
        if head.get("version") != INDEX_VERSION:
            raise ValueError(f"unsupported index version {head.get('version')!r}")
        grouped: dict[str, list[Definition]] = {}
        for line in lines[1:]:
            doc = json.loads(line)
            d = Definition(
                doc["symbol"],
                doc["path"],
                doc["kind"],
                doc["span"][0],
                doc["span"][1],
                doc["offsets"][0],
                doc["offsets"][1],
                doc["comment_offset"],
                frozenset(doc["identifiers"]),
            )
            grouped.setdefault(d.symbol, []).append(d)
        return cls(Path(root), {k: tuple(v) for k, v in grouped.items()}, head["tree_digest"], head["skipped"])


def _source_files(root: Path, suffixes: Sequence[str]) -> list[Path]:
    out = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if not d.startswith("."))
        out.extend(Path(dirpath) / f for f in sorted(filenames) if f.endswith(tuple(suffixes)))
    return sorted(out, key=lambda p: p.relative_to(root).as_posix())


def tree_digest(root: str | Path, suffixes: Sequence[str] = DEFAULT_SUFFIXES) -> str:
    root = Path(root)
    h = hashlib.sha256()
    for p in _source_files(root, suffixes):
        h.update(p.relative_to(root).as_posix().encode())
        h.update(b"\0")
        try:
            h.update(hashlib.sha256(p.read_bytes()).digest())
        except OSError:
            h.update(b"unreadable")
    return h.hexdigest()


def build_index(
    source_root: str | Path, suffixes: Sequence[str] = DEFAULT_SUFFIXES, workers: int | None = None
) -> SymbolIndex:
    root = Path(source_root)
    files = _source_files(root, suffixes)

    def scan(p: Path):
        rel = p.relative_to(root).as_posix()
        try:
            data = p.read_bytes()
        except OSError as exc:
            log.warning("skipping %s: %s", rel, exc)
            return rel, None, None
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            text = data.decode("latin-1")
        return rel, hashlib.sha256(data).digest(), scan_source(text, rel)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(scan, files))

    h = hashlib.sha256()
    grouped: dict[str, list[Definition]] = {}
    skipped = 0
    for rel, digest, defs in results:
        h.update(rel.encode())
        h.update(b"\0")
        if defs is None:
            skipped += 1
            h.update(b"unreadable")
            continue
        h.update(digest)
        for d in defs:
            grouped.setdefault(d.symbol, []).append(d)
    return SymbolIndex(root, {k: tuple(v) for k, v in sorted(grouped.items())}, h.hexdigest(), skipped)


def load_or_build(source_root: str | Path, index_path: str | Path) -> SymbolIndex:
    """Reuse a persisted index unless the tree changed since it was written."""
    index_path = Path(index_path)
    if index_path.exists():
        try:
            cached = SymbolIndex.load(index_path, source_root)
        except (ValueError, KeyError, IndexError, json.JSONDecodeError) as exc:
            log.info("rebuilding unreadable index %s: %s", index_path, exc)
        else:
            if cached.tree_digest == tree_digest(source_root):
                return cached
            log.info("source tree changed, rebuilding %s", index_path)
    index = build_index(source_root)
    index.save(index_path)
    return index


# patch symbols and context


def _strip_line(text: str) -> str:
    return re.sub(r"/\*.*?(\*/|$)|//.*$|\"(?:\\.|[^\"\\])*\"|'(?:\\.|[^'\\])*'", " ", text)


def _heading_symbol(heading: str) -> str | None:
    heading = _strip_line(heading)
    k = heading.find("(")
    ids = [i for i in _IDENT.findall(heading[:k] if k >= 0 else heading) if i not in C_KEYWORDS]
    return ids[-1] if ids else None


def extract_symbols(patch: Patch) -> list[str]:
    """Symbols from hunk headings and changed lines, most frequent first."""
    counts: Counter[str] = Counter()
    first: dict[str, int] = {}

    def see(name: str):
        if len(name) < 2 or name in C_KEYWORDS:
            return
        counts[name] += 1
        first.setdefault(name, len(first))

    for hunk in patch.diff:
        name = _heading_symbol(hunk.section_heading or "")
        if name:
            see(name)
        for line in hunk.removed + hunk.added:
            for ident in _IDENT.findall(_strip_line(line)):
                see(ident)
    return sorted(counts, key=lambda s: (-counts[s], first[s]))


@dataclass(frozen=True)
class CodeExcerpt:
    symbol: str
    path: str
    text: str
    truncated: bool = False
    start_line: int = 0
    end_line: int = 0


@dataclass(frozen=True)
class PatchContext:
    excerpts: tuple[CodeExcerpt, ...]
    misses: tuple[str, ...]
    dropped: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return sum(len(e.text) for e in self.excerpts)

    def render(self) -> str:
        if not self.excerpts:
            return "(no source context)"
        blocks = []
        for e in self.excerpts:
            tag = " (truncated)" if e.truncated else ""
            blocks.append(f"/* {e.path}:{e.start_line}-{e.end_line} {e.symbol}{tag} */\n{e.text}")
        return "\n\n".join(blocks)


def fetch_context(symbols: Sequence[str], index: SymbolIndex, budget: int = DEFAULT_BUDGET) -> PatchContext:
    """Definitions of *symbols* in priority order until *budget* characters
    are used. Symbols without a definition are returned as misses."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    excerpts: list[CodeExcerpt] = []
    misses: list[str] = []
    dropped: list[str] = []
    left = budget
    for symbol in symbols:
        defs = index.get(symbol)
        if not defs:
            misses.append(symbol)
            continue
        if left == 0:
            dropped.append(symbol)
            continue
        for d in defs:
            if left == 0:
                break
            text = index.excerpt_text(d)
            clipped = len(text) > left
            if clipped:
                text = text[:left]
            excerpts.append(CodeExcerpt(symbol, d.path, text, clipped, d.start_line, d.end_line))
            left -= len(text)
    return PatchContext(tuple(excerpts), tuple(misses), tuple(dropped))


@dataclass(frozen=True)
class CallPaths:
    chains: tuple[tuple[str, ...], ...]
    depth_cuts: tuple[tuple[str, ...], ...] = ()
    cycle_cuts: tuple[tuple[str, ...], ...] = ()


def call_paths(symbol: str, index: SymbolIndex, max_depth: int = 3, max_chains: int = 200) -> CallPaths:
    """Callee chains from *symbol*. A chain stops at a leaf, at *max_depth*
    symbols (a depth cut) or before revisiting a symbol (a cycle cut, recorded
    as the chain plus the revisited symbol)."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if symbol not in index:
        return CallPaths(())
    chains: list[tuple[str, ...]] = []
    depth_cuts: list[tuple[str, ...]] = []
    cycle_cuts: list[tuple[str, ...]] = []

    def walk(chain: tuple[str, ...]):
        if len(chains) >= max_chains:
            return
        callees = index.callees(chain[-1])
        onward = [c for c in callees if c not in chain]
        cycle_cuts.extend(chain + (c,) for c in callees if c in chain)
        if not onward:
            chains.append(chain)
        elif len(chain) >= max_depth:
            chains.append(chain)
            depth_cuts.append(chain)
        else:
            for c in onward:
                walk(chain + (c,))

    walk((symbol,))
    return CallPaths(tuple(chains), tuple(depth_cuts), tuple(cycle_cuts))

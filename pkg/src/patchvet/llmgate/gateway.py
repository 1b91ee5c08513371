"""Completion gateway with deterministic record/replay."""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from patchvet.errors import PatchvetError
from patchvet.llmgate.providers import Candidate, Provider, ProviderError, RenderedPrompt, RetryableError
from patchvet.llmgate.structured import StructuredOutputError, parse_document, schema_problems
from patchvet.llmgate.templates import TemplateRegistry

log = logging.getLogger(__name__)

REPLAY, LIVE, RECORD = "replay", "live", "record"
TRUNCATED = {"length", "max_tokens", "content_filter", "refusal"}

REPAIR_SUFFIX = (
    "\n\n---\nYour previous answer could not be used: {problems}\n"
    "Previous answer:\n{answer}\n"
    "Reply again with only the corrected JSON document."
)


class GatewayError(PatchvetError):
    pass


class FixtureMissingError(PatchvetError):
    """Not a GatewayError: stages that tolerate model failures must not
    mistake a missing replay fixture for one."""

    def __init__(self, template_id: str, version: int, digest: str, path: Path):
        super().__init__(f"replay fixture missing for {template_id} v{version}: digest {digest} ({path})")
        self.digest = digest


@dataclass(frozen=True)
class CompletionRequest:
    template_id: str
    variables: dict = field(default_factory=dict)
    temperature: float = 0.0
    candidate_count: int = 1
    max_output_tokens: int = 4096
    version: int | None = None

    def __post_init__(self):
        if self.candidate_count < 1:
            raise ValueError("candidate_count must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResponse:
    candidates: tuple[Candidate, ...]
    provider_name: str
    latency_ms: float
    request_digest: str
    retries: int = 0

    @property
    def text(self) -> str:
        return self.candidates[0].text

    @property
    def truncated(self) -> bool:
        return any(c.finish_reason in TRUNCATED for c in self.candidates)


def canonical_prompt(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def request_digest(template_id: str, version: int, prompt_text: str) -> str:
    h = hashlib.sha256()
    h.update(f"{template_id}\n{version}\n".encode())
    h.update(canonical_prompt(prompt_text).encode("utf-8"))
    return h.hexdigest()


class Gateway:
    """Renders templates and routes requests to a provider or to fixtures.

    In ``replay`` mode responses come from
    ``fixtures/<template_id>/<version>/<digest>.response`` (candidate 0) and
    ``<digest>.<i>.response`` for further candidates. ``record`` mode calls
    the provider and writes those files plus a ``.request`` sidecar.
    """

    def __init__(
        self,
        provider: Provider | None = None,
        *,
        mode: str = LIVE,
        fixtures_dir: str | Path | None = None,
        registry: TemplateRegistry | None = None,
        concurrency: int = 4,
        max_retries: int = 5,
        backoff_base: float = 0.5,
        backoff_cap: float = 30.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if mode not in (REPLAY, LIVE, RECORD):
            raise ValueError(f"unknown gateway mode {mode!r}")
        if mode != REPLAY and provider is None:
            raise GatewayError(f"mode {mode!r} needs a provider")
        if mode in (REPLAY, RECORD) and fixtures_dir is None:
            raise GatewayError(f"mode {mode!r} needs a fixture directory")
        self.provider = provider
        self.mode = mode
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir is not None else None
        self.registry = registry or TemplateRegistry.builtin()
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.sleep = sleep
        self._slots = threading.BoundedSemaphore(concurrency)
        self._write_lock = threading.Lock()

    @property
    def provider_name(self) -> str:
        return "replay" if self.mode == REPLAY else self.provider.name

    def render(self, request: CompletionRequest) -> RenderedPrompt:
        template = self.registry.get(request.template_id, request.version)
        return RenderedPrompt(
            template.template_id,
            template.version,
            canonical_prompt(template.render(request.variables)),
            request.temperature,
            request.max_output_tokens,
            dict(request.variables),
        )

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        return self._complete_prompt(self.render(request), request.candidate_count)

    # fixtures

    def _fixture_paths(self, prompt: RenderedPrompt, digest: str, n: int) -> list[Path]:
        base = self.fixtures_dir / prompt.template_id / str(prompt.version)
        return [base / (f"{digest}.response" if i == 0 else f"{digest}.{i}.response") for i in range(n)]

    def _replay(self, prompt: RenderedPrompt, digest: str, n: int) -> CompletionResponse:
        cands = []
        for path in self._fixture_paths(prompt, digest, n):
            if not path.exists():
                raise FixtureMissingError(prompt.template_id, prompt.version, digest, path)
            cands.append(Candidate(path.read_bytes().decode("utf-8")))
        return CompletionResponse(tuple(cands), "replay", 0.0, digest)

    def _record(self, prompt: RenderedPrompt, digest: str, cands: list[Candidate]) -> None:
        paths = self._fixture_paths(prompt, digest, len(cands))
        with self._write_lock:
            paths[0].parent.mkdir(parents=True, exist_ok=True)
            for path, cand in zip(paths, cands):
                path.write_bytes(cand.text.encode("utf-8"))
            sidecar = {
                "template_id": prompt.template_id,
                "version": prompt.version,
                "temperature": prompt.temperature,
                "candidate_count": len(cands),
                "max_output_tokens": prompt.max_output_tokens,
                "prompt": prompt.text,
            }
            (paths[0].parent / f"{digest}.request").write_text(
                json.dumps(sidecar, indent=1, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
            )

    # live

    def _call_with_retries(self, prompt: RenderedPrompt, n: int) -> tuple[list[Candidate], int]:
        retries = 0
        while True:
            try:
                with self._slots:
                    return self.provider.generate(prompt, n), retries
            except RetryableError as exc:
                if retries >= self.max_retries:
                    raise GatewayError(f"giving up after {retries} retries: {exc}") from exc
                delay = min(self.backoff_cap, self.backoff_base * 2**retries)
                log.info("retrying %s in %.2fs (%s)", prompt.template_id, delay, exc)
                retries += 1
                self.sleep(delay)

    def _complete_prompt(self, prompt: RenderedPrompt, n: int) -> CompletionResponse:
        digest = request_digest(prompt.template_id, prompt.version, prompt.text)
        if self.mode == REPLAY:
            return self._replay(prompt, digest, n)

        start = time.perf_counter()
        try:
            if self.provider.supports_n or n == 1:
                cands, retries = self._call_with_retries(prompt, n)
            else:
                if prompt.temperature == 0:
                    log.warning("sequential sampling of %d candidates at temperature 0", n)
                cands, retries = [], 0
                for _ in range(n):
                    got, r = self._call_with_retries(prompt, 1)
                    cands.extend(got[:1])
                    retries += r
        except ProviderError as exc:
            raise GatewayError(str(exc)) from exc
        latency = (time.perf_counter() - start) * 1000.0

        if len(cands) != n and not any(c.finish_reason in TRUNCATED for c in cands):
            raise GatewayError(f"provider returned {len(cands)} candidates, expected {n}")
        if self.mode == RECORD:
            self._record(prompt, digest, cands)
        return CompletionResponse(tuple(cands), self.provider.name, latency, digest, retries)

    # structured output

    def complete_structured(
        self,
        request: CompletionRequest,
        schema: dict[str, str],
        validator: Callable[[dict], list[str]] | None = None,
        repairs: int = 2,
    ) -> dict:
        return self.complete_structured_candidates(request, schema, validator, repairs)[0]

    def complete_structured_candidates(
        self,
        request: CompletionRequest,
        schema: dict[str, str],
        validator: Callable[[dict], list[str]] | None = None,
        repairs: int = 2,
    ) -> list[dict]:
        """Parse every candidate as a JSON document checked against *schema*.

        A candidate that fails is re-asked up to *repairs* times with the
        problems appended to the prompt. Remaining failures raise
        :class:`StructuredOutputError` carrying all raw candidates.
        """
        template = self.registry.get(request.template_id, request.version)
        if template.expected_output_kind != "structured_document":
            raise GatewayError(f"template {template.template_id} does not produce structured output")
        prompt = self.render(request)
        response = self._complete_prompt(prompt, request.candidate_count)
        docs = []
        for cand in response.candidates:
            docs.append(self._parse_with_repairs(prompt, cand.text, schema, validator, repairs))
        return docs

    def _parse_with_repairs(self, prompt, text, schema, validator, repairs) -> dict:
        raws = [text]
        problems: list[str] = []
        for attempt in range(repairs + 1):
            try:
                doc = parse_document(text)
                problems = schema_problems(doc, schema)
                if not problems and validator is not None:
                    problems = list(validator(doc))
            except ValueError as exc:
                problems = [str(exc)]
            if not problems:
                return doc
            if attempt == repairs:
                break
            repair = RenderedPrompt(
                prompt.template_id,
                prompt.version,
                prompt.text + REPAIR_SUFFIX.format(problems="; ".join(problems), answer=text),
                prompt.temperature,
                prompt.max_output_tokens,
                prompt.variables,
            )
            text = self._complete_prompt(repair, 1).text
            raws.append(text)
        raise StructuredOutputError(
            f"{prompt.template_id}: unusable structured output ({'; '.join(problems)})", problems, raws
        )

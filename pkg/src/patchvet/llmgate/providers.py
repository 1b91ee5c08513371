"""Completion providers: an HTTP adapter and an in-process scripted one."""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Callable, Protocol

from patchvet.errors import PatchvetError


class ProviderError(PatchvetError):
    """Non-retryable provider failure."""


class RetryableError(ProviderError):
    """Rate limiting or a transient transport failure."""


@dataclass(frozen=True)
class Candidate:
    text: str
    finish_reason: str = "stop"


@dataclass(frozen=True)
class RenderedPrompt:
    template_id: str
    version: int
    text: str
    temperature: float
    max_output_tokens: int
    variables: dict = field(default_factory=dict, compare=False)


class Provider(Protocol):
    name: str
    supports_n: bool

    def generate(self, prompt: RenderedPrompt, n: int) -> list[Candidate]: ...


Transport = Callable[[str, dict, bytes, float], tuple[int, bytes]]


def urllib_transport(url: str, headers: dict, body: bytes, timeout: float) -> tuple[int, bytes]:
    req = urllib.request.Request(url, data=body, headers=headers, method="POST")
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()
    except (urllib.error.URLError, OSError) as exc:
        raise RetryableError(f"transport failure: {exc}") from exc


class HTTPProvider:
    """Chat-completions style JSON endpoint.

    Sends ``{model, messages, temperature, n, max_tokens}`` and reads
    ``choices[].message.content``.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str | None = None,
        name: str = "http",
        supports_n: bool = True,
        timeout: float = 120.0,
        transport: Transport | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.name = name
        self.supports_n = supports_n
        self.timeout = timeout
        self.transport = transport or urllib_transport

    def payload(self, prompt: RenderedPrompt, n: int) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": prompt.temperature,
            "n": n,
            "max_tokens": prompt.max_output_tokens,
        }

    def generate(self, prompt: RenderedPrompt, n: int) -> list[Candidate]:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        body = json.dumps(self.payload(prompt, n)).encode()
        status, raw = self.transport(self.endpoint, headers, body, self.timeout)
        if status == 429 or status >= 500:
            raise RetryableError(f"provider returned HTTP {status}")
        if status >= 400:
            raise ProviderError(f"provider returned HTTP {status}: {raw[:200]!r}")
        try:
            doc = json.loads(raw)
            return [
                Candidate(c["message"]["content"] or "", c.get("finish_reason") or "stop")
                for c in doc["choices"]
            ]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(f"unexpected provider response: {exc}") from exc


class ScriptedProvider:
    """Answers from a Python callable; used for tests and fixture authoring.

    The script receives the rendered prompt and the candidate count and
    returns a list of strings (or a single string for n == 1).
    """

    def __init__(self, script: Callable[[RenderedPrompt, int], list[str] | str], name: str = "scripted"):
        self.script = script
        self.name = name
        self.supports_n = True
        self.calls: list[RenderedPrompt] = []

    def generate(self, prompt: RenderedPrompt, n: int) -> list[Candidate]:
        self.calls.append(prompt)
        out = self.script(prompt, n)
        if isinstance(out, str):
            out = [out]
        return [c if isinstance(c, Candidate) else Candidate(c) for c in out]

"""Provider configuration: a plain ``key = value`` text file."""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from patchvet.errors import ConfigError
from patchvet.llmgate.providers import HTTPProvider


@dataclass(frozen=True)
class ProviderConfig:
    provider: str = "http"
    endpoint: str = ""
    api_key_env: str = ""
    model: str = ""
    concurrency: int = 4
    max_retries: int = 5
    backoff_base: float = 0.5
    supports_n: bool = True
    timeout: float = 120.0

    def build(self) -> HTTPProvider:
        if not self.endpoint or not self.model:
            raise ConfigError("provider config needs 'endpoint' and 'model'")
        return HTTPProvider(
            self.endpoint,
            self.model,
            api_key_env=self.api_key_env or None,
            name=f"{self.provider}:{self.model}",
            supports_n=self.supports_n,
            timeout=self.timeout,
        )


def load_provider_config(path: str | Path) -> ProviderConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string("[provider]\n" + Path(path).read_text(encoding="utf-8"))
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read provider config {path}: {exc}") from exc
    sec = parser["provider"]
    known = ProviderConfig.__dataclass_fields__
    unknown = set(sec) - set(known)
    if unknown:
        raise ConfigError(f"unknown provider config keys: {', '.join(sorted(unknown))}")
    try:
        return ProviderConfig(
            provider=sec.get("provider", "http"),
            endpoint=sec.get("endpoint", ""),
            api_key_env=sec.get("api_key_env", ""),
            model=sec.get("model", ""),
            concurrency=sec.getint("concurrency", 4),
            max_retries=sec.getint("max_retries", 5),
            backoff_base=sec.getfloat("backoff_base", 0.5),
            supports_n=sec.getboolean("supports_n", True),
            timeout=sec.getfloat("timeout", 120.0),
        )
    except ValueError as exc:
        raise ConfigError(f"bad provider config value: {exc}") from exc

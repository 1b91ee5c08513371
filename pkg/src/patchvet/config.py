"""Run configuration: one INI file, overridden by command-line flags."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from patchvet.codectx import DEFAULT_BUDGET
from patchvet.errors import ConfigError
from patchvet.rulegen.models import MERGE_THRESHOLD
from patchvet.validate.models import RULE_BASED, RULE_FREE
from patchvet.validate.stages import DEFAULT_TOP_R

GATEWAY_MODES = ("live", "record", "replay")


@dataclass(frozen=True)
class RunConfig:
    store: str = "corpus"
    source_tree: str = ""
    rules: str = "rules.jsonl"
    provider_config: str = ""
    gateway: str = "live"
    fixtures: str = ""
    seed: int = 0
    mode: str = RULE_BASED
    # rule generation
    batch_size: int = 20
    merge_threshold: float = MERGE_THRESHOLD
    # validation
    top_r: int = DEFAULT_TOP_R
    context_budget: int = DEFAULT_BUDGET
    rank_with_context: bool = True
    # evaluation
    n: int = 10
    k: int = 3
    threshold: int | None = None
    weak_verifier: bool = False

    def __post_init__(self):
        if self.mode not in (RULE_BASED, RULE_FREE):
            raise ConfigError(f"mode must be {RULE_BASED} or {RULE_FREE}, got {self.mode!r}")
        if self.gateway not in GATEWAY_MODES:
            raise ConfigError(f"gateway must be one of {', '.join(GATEWAY_MODES)}, got {self.gateway!r}")
        if self.n < 1 or self.k < 1 or self.batch_size < 1 or self.top_r < 1 or self.context_budget < 1:
            raise ConfigError("n, k, batch_size, top_r and context_budget must be positive")
        if self.threshold is not None and not 0 <= self.threshold <= 100:
            raise ConfigError("threshold must be in [0, 100]")

    @property
    def effective_threshold(self) -> int:
        if self.threshold is not None:
            return self.threshold
        return 90 if self.weak_verifier else 0

    @property
    def digest(self) -> str:
        doc = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(doc.encode()).hexdigest()[:16]

    def merged(self, overrides: dict) -> "RunConfig":
        known = {f.name for f in fields(self)}
        values = asdict(self)
        values.update({k: v for k, v in overrides.items() if k in known and v is not None})
        return RunConfig(**values)


# section -> keys it may hold
SECTIONS = {
    "patchvet": ("store", "source_tree", "rules", "provider_config", "gateway", "fixtures", "seed", "mode"),
    "rules": ("batch_size", "merge_threshold"),
    "validate": ("top_r", "context_budget", "rank_with_context"),
    "eval": ("n", "k", "threshold", "weak_verifier"),
}


def _convert(name: str, raw: str, parser: configparser.ConfigParser):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    try:
        if kind == "bool":
            return parser.BOOLEAN_STATES[raw.strip().lower()]
        if kind in ("int", "int | None"):
            return int(raw)
        if kind == "float":
            return float(raw)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return raw.strip()


def load_run_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    base = Path(path).parent
    for section in parser.sections():
        allowed = SECTIONS.get(section)
        if allowed is None:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser[section].items():
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            value = _convert(key, raw, parser)
            if key in ("store", "source_tree", "rules", "provider_config", "fixtures") and value:
                value = str((base / value)) if not Path(value).is_absolute() else value
            values[key] = value
    return RunConfig().merged(values)

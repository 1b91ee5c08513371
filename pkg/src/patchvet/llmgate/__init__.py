from patchvet.llmgate.gateway import (
    LIVE,
    RECORD,
    REPLAY,
    CompletionRequest,
    CompletionResponse,
    FixtureMissingError,
    Gateway,
    GatewayError,
    request_digest,
)
from patchvet.llmgate.providers import Candidate, HTTPProvider, RenderedPrompt, ScriptedProvider
from patchvet.llmgate.structured import StructuredOutputError
from patchvet.llmgate.templates import PromptTemplate, TemplateError, TemplateRegistry

__all__ = [
    "LIVE",
    "RECORD",
    "REPLAY",
    "Candidate",
    "CompletionRequest",
    "CompletionResponse",
    "FixtureMissingError",
    "Gateway",
    "GatewayError",
    "HTTPProvider",
    "PromptTemplate",
    "RenderedPrompt",
    "ScriptedProvider",
    "StructuredOutputError",
    "TemplateError",
    "TemplateRegistry",
    "request_digest",
]

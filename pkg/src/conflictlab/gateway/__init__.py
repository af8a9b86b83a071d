"""Prompt construction, inference backends, and verdict parsing."""

from .prompts import P1, P2, PROMPTS, PromptTemplate, DEFAULT_LEXICON
from .request import (
    ChatRequest,
    ContentPart,
    GenerationParams,
    PartKind,
    RequestMode,
    build_request,
)
from .parsing import ModelVerdict, ParsedVerdict, parse_verdict
from .backends import (
    OracleBackend,
    RemoteBackend,
    RemoteConfig,
    ScriptedConfusionBackend,
    invoke,
    scripted_confusion_backend,
)

__all__ = [
    "P1",
    "P2",
    "PROMPTS",
    "PromptTemplate",
    "DEFAULT_LEXICON",
    "ChatRequest",
    "ContentPart",
    "GenerationParams",
    "PartKind",
    "RequestMode",
    "build_request",
    "ModelVerdict",
    "ParsedVerdict",
    "parse_verdict",
    "OracleBackend",
    "RemoteBackend",
    "RemoteConfig",
    "ScriptedConfusionBackend",
    "invoke",
    "scripted_confusion_backend",
]

"""Strict-but-recoverable parsing of model replies.

The contract the prompts impose is a closed lexicon: the reply should be
exactly ``yes`` or ``no``, lowercase, nothing else. Replies that honor
it parse as conformant. Anything else goes through one mechanical
normalization pass (take the ``verdict:`` line if the reply uses the
delimited rationale layout, else the first token of the first line;
lowercase it; shed surrounding quotes and terminal punctuation) and, if
a lexicon token emerges, parses as non-conformant. Everything else is
``Unparseable`` — recorded and excluded from the confusion matrix, never
silently coerced.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from ..errors import Unparseable
from ..model import ConflictLabel
from .prompts import DEFAULT_LEXICON

__all__ = ["ParsedVerdict", "ModelVerdict", "parse_verdict"]

# Characters shed from a candidate token during the recovery pass.
_TRIM_CHARS = "\"'`.,!?;:()[]"

_VERDICT_KEY = "verdict:"
_EXPLANATION_KEY = "explanation:"
_RECOMMENDATION_KEY = "recommendation:"


@dataclass(frozen=True)
class ParsedVerdict:
    """Outcome of parsing one raw reply."""

    label: ConflictLabel
    conformant: bool
    explanation: Optional[str] = None
    recommendation: Optional[str] = None


@dataclass(frozen=True)
class ModelVerdict:
    """One model answer tied back to its observation.

    ``conformant`` is true iff the raw reply was exactly a lexicon token —
    lowercase, no surrounding text. Non-conformant verdicts still carry a
    label (recovered mechanically); replies where no token is recoverable
    never become verdicts at all.
    """

    observation_id: str
    label: ConflictLabel
    raw_text: str
    conformant: bool
    latency_ms: int
    backend_id: str
    explanation: Optional[str] = None
    recommendation: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.observation_id:
            raise ValueError("observation_id must be non-empty")
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be >= 0")
        if not self.backend_id:
            raise ValueError("backend_id must be non-empty")

    def to_record(self) -> dict:
        return {
            "observation_id": self.observation_id,
            "label": self.label.wire,
            "raw_text": self.raw_text,
            "conformant": self.conformant,
            "latency_ms": self.latency_ms,
            "backend_id": self.backend_id,
            "explanation": self.explanation,
            "recommendation": self.recommendation,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ModelVerdict":
        return cls(
            observation_id=rec["observation_id"],
            label=ConflictLabel.from_wire(rec["label"]),
            raw_text=rec["raw_text"],
            conformant=rec["conformant"],
            latency_ms=rec["latency_ms"],
            backend_id=rec["backend_id"],
            explanation=rec.get("explanation"),
            recommendation=rec.get("recommendation"),
        )


def _normalize_token(token: str) -> str:
    return token.lower().strip(_TRIM_CHARS)


def _split_layout(raw: str) -> dict[str, str]:
    """Extract ``verdict:`` / ``explanation:`` / ``recommendation:`` fields.

    Key matching is case-insensitive and at line start; lines that open no
    new field continue the one before them, so wrapped text survives.
    """
    fields: dict[str, list[str]] = {}
    current: Optional[str] = None
    for line in raw.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        lowered = stripped.lower()
        matched = None
        for key in (_VERDICT_KEY, _EXPLANATION_KEY, _RECOMMENDATION_KEY):
            if lowered.startswith(key):
                matched = key
                fields[key] = [stripped[len(key):].strip()]
                break
        if matched is not None:
            current = matched
        elif current is not None:
            fields[current].append(stripped)
    return {key: " ".join(chunks).strip() for key, chunks in fields.items()}


def parse_verdict(
    raw: str,
    lexicon: Optional[Mapping[str, ConflictLabel]] = None,
) -> ParsedVerdict:
    """Parse one raw reply into a label plus conformance flag.

    Raises:
        Unparseable: no lexicon token is recoverable. Raised (not returned)
            so callers must decide explicitly how to account for the reply.
    """
    if not raw or not raw.strip():
        raise Unparseable("empty reply")
    lex = dict(DEFAULT_LEXICON if lexicon is None else lexicon)

    stripped = raw.strip()
    if stripped in lex:
        return ParsedVerdict(label=lex[stripped], conformant=True)

    layout = _split_layout(raw)
    explanation = layout.get(_EXPLANATION_KEY) or None
    recommendation = layout.get(_RECOMMENDATION_KEY) or None

    if _VERDICT_KEY in layout:
        candidate = layout[_VERDICT_KEY].split()[0] if layout[_VERDICT_KEY] else ""
    else:
        candidate = stripped.splitlines()[0].split()[0]

    token = _normalize_token(candidate)
    if token in lex:
        return ParsedVerdict(
            label=lex[token],
            conformant=False,
            explanation=explanation,
            recommendation=recommendation,
        )
    raise Unparseable(f"no lexicon token recoverable from reply {raw!r}")

"""Chat request construction from observations.

A request is the fully materialized payload for one observation: the
system prompt verbatim, the three frame images in index order, and —
when a rationale is wanted — a trailing text part that pins the reply
to a fixed three-line layout so extraction stays mechanical.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from ..errors import MissingFrame
from ..model import Observation
from .prompts import PromptTemplate

__all__ = [
    "PartKind",
    "RequestMode",
    "ContentPart",
    "GenerationParams",
    "ChatRequest",
    "RATIONALE_INSTRUCTION",
    "build_request",
]


class PartKind(Enum):
    TEXT = "text"
    IMAGE = "image"


class RequestMode(Enum):
    VERDICT_ONLY = "verdict_only"
    VERDICT_WITH_RATIONALE = "verdict_with_rationale"


#: Appended as the final user part in rationale mode. The layout is frozen:
#: parsing relies on the three lowercase key prefixes.
RATIONALE_INSTRUCTION = (
    "After analyzing the frames, reply in exactly three lines:\n"
    "verdict: yes or no (lowercase)\n"
    "explanation: one or two sentences naming the vehicles and movements "
    "behind your verdict\n"
    "recommendation: one concrete traffic-control action (for example a "
    "signal timing change or a rerouting), or none if no action is needed"
)


@dataclass(frozen=True)
class ContentPart:
    """One ordered element of the user message: text or an encoded image."""

    kind: PartKind
    text: Optional[str] = None
    image_bytes: Optional[bytes] = None

    def __post_init__(self) -> None:
        if self.kind is PartKind.TEXT:
            if not self.text or self.image_bytes is not None:
                raise ValueError("text part needs text and no image payload")
        else:
            if not self.image_bytes or self.text is not None:
                raise ValueError("image part needs image bytes and no text")


@dataclass(frozen=True)
class GenerationParams:
    """Decoding knobs. Temperature defaults to 0 so reruns are comparable."""

    temperature: float = 0.0
    max_answer_tokens: int = 16

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_answer_tokens <= 0:
            raise ValueError("max_answer_tokens must be positive")


#: Room for three delimited lines instead of a single token.
RATIONALE_PARAMS = GenerationParams(temperature=0.0, max_answer_tokens=256)


@dataclass(frozen=True)
class ChatRequest:
    """A ready-to-send inference payload for a single observation.

    ``user_parts`` preserves construction order; ``build_request`` always
    emits the three frame images at indices 0, 1, 2 in that order, with
    the rationale instruction (if any) appended last.
    """

    system: str
    user_parts: tuple[ContentPart, ...]
    model_id: str
    params: GenerationParams
    observation_id: str
    prompt_id: str
    mode: RequestMode

    def __post_init__(self) -> None:
        if not self.system:
            raise ValueError("system text must be non-empty")
        if not self.user_parts:
            raise ValueError("user_parts must be non-empty")
        if not self.observation_id:
            raise ValueError("observation_id must be non-empty")

    @property
    def image_parts(self) -> tuple[ContentPart, ...]:
        return tuple(p for p in self.user_parts if p.kind is PartKind.IMAGE)


def _frame_bytes(obs: Observation, index: int, image_root: Optional[Path]) -> bytes:
    frame = obs.frames[index]
    if frame.image_bytes is not None:
        return frame.image_bytes
    if frame.image_ref is None:
        raise MissingFrame(
            f"observation {obs.id} frame {index} has neither image bytes "
            "nor an image reference"
        )
    path = Path(frame.image_ref)
    if not path.is_absolute():
        if image_root is None:
            raise MissingFrame(
                f"observation {obs.id} frame {index} has relative reference "
                f"{frame.image_ref!r} but no image_root was given"
            )
        path = Path(image_root) / path
    try:
        return path.read_bytes()
    except OSError as exc:
        raise MissingFrame(
            f"observation {obs.id} frame {index}: cannot read {path}: {exc}"
        ) from exc


def build_request(
    template: PromptTemplate,
    obs: Observation,
    mode: RequestMode = RequestMode.VERDICT_ONLY,
    *,
    model_id: str = "local-oracle",
    params: Optional[GenerationParams] = None,
    image_root: Optional[Path | str] = None,
) -> ChatRequest:
    """Assemble the chat payload for one observation.

    Deterministic and side-effect free apart from reading frame images
    from disk when they are not already in memory. Image parts appear in
    frame-index order 0, 1, 2; rationale mode appends one text part with
    the fixed three-line reply layout.

    Raises:
        MissingFrame: a frame image is absent or unreadable.
    """
    root = None if image_root is None else Path(image_root)
    parts: list[ContentPart] = [
        ContentPart(kind=PartKind.IMAGE, image_bytes=_frame_bytes(obs, k, root))
        for k in range(3)
    ]
    if mode is RequestMode.VERDICT_WITH_RATIONALE:
        parts.append(ContentPart(kind=PartKind.TEXT, text=RATIONALE_INSTRUCTION))
        effective = params if params is not None else RATIONALE_PARAMS
    else:
        effective = params if params is not None else GenerationParams()
    return ChatRequest(
        system=template.system_text,
        user_parts=tuple(parts),
        model_id=model_id,
        params=effective,
        observation_id=obs.id,
        prompt_id=template.id,
        mode=mode,
    )

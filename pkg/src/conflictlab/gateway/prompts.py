"""System prompt templates used for conflict-detection inference.

Two templates ship with the package:

* ``p1`` — a terse instruction that names the camera viewpoint and the
  road hierarchy but gives the model no geometric detail.
* ``p2`` — a context-rich instruction that spells out the frame cadence,
  the priority rule, the lane layout, and the treatment of parked
  vehicles.

Both templates demand a bare lowercase ``yes`` / ``no`` answer; that
closed lexicon is what makes downstream verdict parsing deterministic.
The texts are frozen — they are part of the package's compatibility
surface (exported fine-tuning corpora and recorded evaluation runs both
embed them), so any edit is a breaking change.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..model import ConflictLabel

__all__ = ["P1", "P2", "PROMPTS", "PromptTemplate", "DEFAULT_LEXICON"]


P1_TEXT = (
    "You are a traffic control AI analyzing drone footage of a four-way "
    "intersection with two main roads and two sub-roads. Analyze frames "
    "showing moving vehicles before the intersection to detect potential "
    'conflicts. - Answer strictly only with "yes" or "no" in lowercase.'
)

P2_TEXT = (
    "Analyze three sequential overhead images of a four-leg intersection, "
    "0.5s apart. West-East (main) road has priority. Two lanes each way on "
    "main road, with dedicated turn lanes. North-South (sub) road has single "
    "lanes with shared turn/crossing. Ignore parked cars. Focus on moving "
    "vehicles intending to cross the intersection or turn. If, after all "
    "three frames, any unresolved conflict may occur (e.g., priority vehicle "
    "and another vehicle potentially entering the same space), answer 'yes' "
    "(lowercase); otherwise, answer 'no' (lowercase). - Answer strictly only "
    'with "yes" or "no" in lowercase to detect conflicts.'
)

#: Maps a conformant raw answer string to the label it encodes.
DEFAULT_LEXICON: dict[str, ConflictLabel] = {
    "yes": ConflictLabel.CONFLICT,
    "no": ConflictLabel.NO_CONFLICT,
}


@dataclass(frozen=True)
class PromptTemplate:
    """A named system prompt plus the closed answer vocabulary it demands.

    Attributes:
        id: Stable short identifier (``"p1"``, ``"p2"``); recorded in run
            artifacts and export sidecars so results stay attributable.
        system_text: The exact system-message text sent to the model.
        lexicon: Mapping from the only conformant raw answers to labels.
    """

    id: str
    system_text: str
    lexicon: tuple[tuple[str, ConflictLabel], ...] = tuple(
        sorted(DEFAULT_LEXICON.items())
    )

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("prompt template id must be non-empty")
        if not self.system_text:
            raise ValueError("prompt template system_text must be non-empty")
        if not self.lexicon:
            raise ValueError("prompt template lexicon must be non-empty")

    @property
    def lexicon_map(self) -> dict[str, ConflictLabel]:
        return dict(self.lexicon)


P1 = PromptTemplate(id="p1", system_text=P1_TEXT)
P2 = PromptTemplate(id="p2", system_text=P2_TEXT)

#: Registry of the built-in templates, keyed by id.
PROMPTS: dict[str, PromptTemplate] = {P1.id: P1, P2.id: P2}

"""Human-in-the-loop review: labeling, expert scoring, HTTP service."""

from .scoring import (
    LabelEvent,
    ReviewScore,
    ScoreTarget,
    aggregate_scores,
    resolve_labels,
)
from .store import EventStore, ReviewState

__all__ = [
    "LabelEvent",
    "ReviewScore",
    "ScoreTarget",
    "aggregate_scores",
    "resolve_labels",
    "EventStore",
    "ReviewState",
]

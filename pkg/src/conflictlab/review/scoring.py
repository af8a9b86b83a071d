"""Expert review scoring and label adjudication.

Pure domain logic: rubric scores for model-written explanations and
recommendations, human relabeling events, and the aggregation /
majority-vote rules that turn streams of either into final values.
Persistence lives in :mod:`conflictlab.review.store`; HTTP transport in
:mod:`conflictlab.review.service`.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from enum import Enum
from typing import Any

from ..errors import EmptyInput, NoScores, RangeViolation, UnknownObservation
from ..model import ConflictLabel, DatasetManifest, Observation

__all__ = [
    "CRITERIA",
    "SCORE_MIN",
    "SCORE_MAX",
    "ScoreTarget",
    "ReviewScore",
    "LabelEvent",
    "aggregate_scores",
    "resolve_labels",
]

#: Rubric criteria, in reporting order.
CRITERIA = ("clarity", "accuracy", "practical_relevance")

SCORE_MIN = 0
SCORE_MAX = 10


class ScoreTarget(str, Enum):
    """Which model-written text a rubric score applies to."""

    EXPLANATION = "explanation"
    RECOMMENDATION = "recommendation"


def _check_criterion(name: str, value: Any) -> int:
    """Validate a single rubric value: an integer in [0, 10]."""
    # bool is an int subclass; reject it explicitly so True/False can't
    # masquerade as 1/0 scores.
    if isinstance(value, bool) or not isinstance(value, int):
        raise RangeViolation(f"{name} must be an integer, got {value!r}")
    if not SCORE_MIN <= value <= SCORE_MAX:
        raise RangeViolation(
            f"{name} must be between {SCORE_MIN} and {SCORE_MAX}, got {value}"
        )
    return value


@dataclass(frozen=True)
class ReviewScore:
    """One reviewer's rubric scores for one run/observation/target triple.

    Later scores from the same reviewer for the same (run, observation,
    target) replace earlier ones; that latest-wins rule is applied by the
    event store, not here.
    """

    reviewer_id: str
    run_id: str
    observation_id: str
    target: ScoreTarget
    clarity: int
    accuracy: int
    practical_relevance: int
    submitted_at: str = ""

    def __post_init__(self) -> None:
        if not self.reviewer_id:
            raise ValueError("reviewer_id must be non-empty")
        if not self.run_id:
            raise ValueError("run_id must be non-empty")
        if not self.observation_id:
            raise ValueError("observation_id must be non-empty")
        if not isinstance(self.target, ScoreTarget):
            object.__setattr__(self, "target", ScoreTarget(self.target))
        for name in CRITERIA:
            _check_criterion(name, getattr(self, name))

    @property
    def key(self) -> tuple[str, str, str, str]:
        """Identity for latest-wins replacement."""
        return (self.reviewer_id, self.run_id, self.observation_id, self.target.value)

    @property
    def item_mean(self) -> float:
        """Mean of the three criteria for this single score."""
        return (self.clarity + self.accuracy + self.practical_relevance) / 3.0

    def to_record(self) -> dict:
        return {
            "reviewer_id": self.reviewer_id,
            "run_id": self.run_id,
            "observation_id": self.observation_id,
            "target": self.target.value,
            "clarity": self.clarity,
            "accuracy": self.accuracy,
            "practical_relevance": self.practical_relevance,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "ReviewScore":
        return cls(
            reviewer_id=record["reviewer_id"],
            run_id=record["run_id"],
            observation_id=record["observation_id"],
            target=ScoreTarget(record["target"]),
            clarity=record["clarity"],
            accuracy=record["accuracy"],
            practical_relevance=record["practical_relevance"],
            submitted_at=record.get("submitted_at", ""),
        )


@dataclass(frozen=True)
class LabelEvent:
    """One annotator's label for one observation.

    A later event from the same annotator for the same observation
    replaces the earlier one (latest-wins, applied by the event store).
    """

    annotator_id: str
    observation_id: str
    label: ConflictLabel
    submitted_at: str = ""

    def __post_init__(self) -> None:
        if not self.annotator_id:
            raise ValueError("annotator_id must be non-empty")
        if not self.observation_id:
            raise ValueError("observation_id must be non-empty")
        if not isinstance(self.label, ConflictLabel):
            object.__setattr__(self, "label", ConflictLabel.from_wire(self.label))

    @property
    def key(self) -> tuple[str, str]:
        """Identity for latest-wins replacement."""
        return (self.annotator_id, self.observation_id)

    def to_record(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "observation_id": self.observation_id,
            "label": self.label.wire,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "LabelEvent":
        return cls(
            annotator_id=record["annotator_id"],
            observation_id=record["observation_id"],
            label=ConflictLabel.from_wire(record["label"]),
            submitted_at=record.get("submitted_at", ""),
        )


def aggregate_scores(scores: Iterable[ReviewScore]) -> dict:
    """Aggregate rubric scores: per-item mean of criteria, then overall mean.

    Each score contributes one item value — the mean of its three
    criteria — and the aggregate is the unweighted mean of those item
    values across every (reviewer, observation) pairing present.  The
    caller is responsible for passing latest-wins-deduplicated scores
    (the event store's accessors already do).

    Returns a dict with the overall ``mean``, ``per_criterion`` means,
    and the contributing counts.  Raises :class:`NoScores` when the
    input is empty.
    """
    collected = list(scores)
    if not collected:
        raise NoScores("no scores to aggregate")
    item_means = [s.item_mean for s in collected]
    per_criterion = {
        name: sum(getattr(s, name) for s in collected) / len(collected)
        for name in CRITERIA
    }
    return {
        "mean": sum(item_means) / len(item_means),
        "per_criterion": per_criterion,
        "n_scores": len(collected),
        "n_items": len({s.observation_id for s in collected}),
        "n_reviewers": len({s.reviewer_id for s in collected}),
    }


def _latest_labels(events: Iterable[LabelEvent]) -> dict[tuple[str, str], LabelEvent]:
    """Collapse an ordered event stream to the last event per (annotator, observation)."""
    latest: dict[tuple[str, str], LabelEvent] = {}
    for event in events:
        latest[event.key] = event
    return latest


def resolve_labels(
    manifest: DatasetManifest, events: Iterable[LabelEvent]
) -> tuple[DatasetManifest, dict]:
    """Adjudicate annotator label events into manifest ground truth.

    For every observation with at least one label event, the latest
    event per annotator is kept and the majority label wins.  An exact
    tie leaves the observation unlabeled — and removes it from its
    split, since splits admit only labeled observations — and is called
    out in the report.  Observations with no events pass through
    unchanged.

    Returns the updated manifest and a report dict.  Raises
    :class:`UnknownObservation` for events naming ids outside the
    manifest and :class:`EmptyInput` when there are no events at all.
    """
    event_list = list(events)
    if not event_list:
        raise EmptyInput("no label events to resolve")
    known = {obs.id for obs in manifest.observations}
    for event in event_list:
        if event.observation_id not in known:
            raise UnknownObservation(
                f"label event names unknown observation {event.observation_id!r}"
            )

    votes_by_obs: dict[str, list[ConflictLabel]] = {}
    annotators: set[str] = set()
    for event in _latest_labels(event_list).values():
        votes_by_obs.setdefault(event.observation_id, []).append(event.label)
        annotators.add(event.annotator_id)

    decided: dict[str, ConflictLabel] = {}
    ties: list[str] = []
    for obs_id, votes in votes_by_obs.items():
        counts = Counter(votes)
        ranked = counts.most_common()
        if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
            ties.append(obs_id)
        else:
            decided[obs_id] = ranked[0][0]

    changed = 0
    updated: list[Observation] = []
    for obs in manifest.observations:
        if obs.id in decided:
            label = decided[obs.id]
            if obs.ground_truth is not label:
                changed += 1
            updated.append(obs.with_label(label))
        elif obs.id in ties:
            updated.append(obs.with_split(None).with_label(None))
        else:
            updated.append(obs)

    # Adjudication can flip labels inside a split, so the original
    # imbalance tolerance may no longer hold; widen it to the gap the
    # adjudicated data actually has and surface that in the report.
    gaps = [0]
    buckets: dict[str, Counter] = {}
    for obs in updated:
        if obs.split is not None:
            buckets.setdefault(obs.split.value, Counter())[obs.ground_truth] += 1
    for counter in buckets.values():
        gaps.append(
            abs(counter[ConflictLabel.CONFLICT] - counter[ConflictLabel.NO_CONFLICT])
        )
    tolerance = max(manifest.imbalance_tolerance, max(gaps))

    report = {
        "events": len(event_list),
        "annotators": len(annotators),
        "observations_voted": len(votes_by_obs),
        "labeled": len(decided),
        "changed": changed,
        "ties": sorted(ties),
        "imbalance_tolerance": tolerance,
    }
    return (
        DatasetManifest(
            observations=updated,
            seed=manifest.seed,
            imbalance_tolerance=tolerance,
        ),
        report,
    )

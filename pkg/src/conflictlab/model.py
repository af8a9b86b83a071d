"""Domain types shared by every part of the harness.

The wire conventions live here: conflict labels serialize as the lowercase
tokens "yes"/"no", manifests are line-delimited JSON with one observation
per line, and image bytes are always referenced by relative path, never
inlined in a manifest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .errors import DuplicateId

MANIFEST_SCHEMA = "conflictlab/manifest.v1"

FRAME_INTERVAL_S = 0.5


class ConflictLabel(Enum):
    CONFLICT = "yes"
    NO_CONFLICT = "no"

    @property
    def wire(self) -> str:
        return self.value

    @classmethod
    def from_wire(cls, token: str) -> "ConflictLabel":
        for member in cls:
            if member.value == token:
                return member
        raise ValueError(f"not a conflict label token: {token!r}")


class Split(Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class Provenance(Enum):
    SYNTHETIC = "synthetic"
    INGESTED = "ingested"


@dataclass(frozen=True)
class Frame:
    """One bird's-eye image of a scenario at a fixed offset from triplet start."""

    index: int
    time_offset: float
    width_px: int
    height_px: int
    source_id: str
    image_ref: Optional[str] = None   # path relative to the manifest directory
    image_bytes: Optional[bytes] = None  # in-memory raster, pre-materialization

    def __post_init__(self):
        if self.index not in (0, 1, 2):
            raise ValueError(f"frame index must be 0, 1 or 2, got {self.index}")
        expected = FRAME_INTERVAL_S * self.index
        if abs(self.time_offset - expected) > 1e-9:
            raise ValueError(
                f"frame {self.index} must sit at {expected}s, got {self.time_offset}s"
            )
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError("frame dimensions must be positive")

    def to_record(self) -> dict:
        if self.image_ref is None:
            raise ValueError(
                f"frame {self.index} of {self.source_id} has no image_ref; "
                "manifests never inline image bytes"
            )
        return {
            "index": self.index,
            "time_offset": self.time_offset,
            "width_px": self.width_px,
            "height_px": self.height_px,
            "source_id": self.source_id,
            "image_ref": self.image_ref,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Frame":
        return cls(
            index=rec["index"],
            time_offset=rec["time_offset"],
            width_px=rec["width_px"],
            height_px=rec["height_px"],
            source_id=rec["source_id"],
            image_ref=rec["image_ref"],
        )


@dataclass(frozen=True)
class Observation:
    """A frame triplet plus its labeling / split state."""

    id: str
    frames: tuple[Frame, Frame, Frame]
    provenance: Provenance
    ground_truth: Optional[ConflictLabel] = None
    split: Optional[Split] = None
    scenario_ref: Optional[str] = None

    def __post_init__(self):
        if len(self.frames) != 3:
            raise ValueError(f"observation {self.id} needs exactly 3 frames")
        if [f.index for f in self.frames] != [0, 1, 2]:
            raise ValueError(f"observation {self.id} frames must be ordered 0,1,2")
        if self.split is not None and self.ground_truth is None:
            raise ValueError(
                f"observation {self.id} is in split {self.split.value} but unlabeled"
            )

    def with_split(self, split: Optional[Split]) -> "Observation":
        return replace(self, split=split)

    def with_label(self, label: Optional[ConflictLabel]) -> "Observation":
        return replace(self, ground_truth=label)

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "frames": [f.to_record() for f in self.frames],
            "provenance": self.provenance.value,
            "ground_truth": None if self.ground_truth is None else self.ground_truth.wire,
            "split": None if self.split is None else self.split.value,
            "scenario_ref": self.scenario_ref,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Observation":
        gt = rec.get("ground_truth")
        split = rec.get("split")
        return cls(
            id=rec["id"],
            frames=tuple(Frame.from_record(fr) for fr in rec["frames"]),
            provenance=Provenance(rec["provenance"]),
            ground_truth=None if gt is None else ConflictLabel.from_wire(gt),
            split=None if split is None else Split(split),
            scenario_ref=rec.get("scenario_ref"),
        )


@dataclass
class DatasetManifest:
    observations: list[Observation]
    seed: int
    imbalance_tolerance: int = 0
    split_counts: dict = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for obs in self.observations:
            if obs.id in seen:
                raise DuplicateId(f"duplicate observation id {obs.id!r}")
            seen.add(obs.id)
        self.split_counts = self.recount()
        self._check_balance()

    def recount(self) -> dict:
        counts: dict[str, dict[str, int]] = {}
        for obs in self.observations:
            if obs.split is None:
                continue
            bucket = counts.setdefault(
                obs.split.value, {"conflict_count": 0, "no_conflict_count": 0}
            )
            if obs.ground_truth is ConflictLabel.CONFLICT:
                bucket["conflict_count"] += 1
            else:
                bucket["no_conflict_count"] += 1
        return counts

    def _check_balance(self):
        for split, bucket in self.split_counts.items():
            gap = abs(bucket["conflict_count"] - bucket["no_conflict_count"])
            if gap > self.imbalance_tolerance:
                raise ValueError(
                    f"split {split} imbalance {gap} exceeds tolerance "
                    f"{self.imbalance_tolerance}"
                )

    def class_counts(self) -> dict:
        """Labeled-class totals over the whole manifest, split or not."""
        conflict = sum(
            1 for o in self.observations if o.ground_truth is ConflictLabel.CONFLICT
        )
        no_conflict = sum(
            1 for o in self.observations if o.ground_truth is ConflictLabel.NO_CONFLICT
        )
        return {"conflict_count": conflict, "no_conflict_count": no_conflict}

    def in_split(self, split: Split) -> list[Observation]:
        return [o for o in self.observations if o.split is split]

    def by_id(self) -> dict[str, Observation]:
        return {o.id: o for o in self.observations}


def write_manifest(manifest: DatasetManifest, path: Path | str) -> None:
    """Write a manifest as UTF-8 JSONL: a header line, then one observation per line."""
    path = Path(path)
    header = {"schema": MANIFEST_SCHEMA, "seed": manifest.seed,
              "imbalance_tolerance": manifest.imbalance_tolerance}
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for obs in manifest.observations:
            fh.write(json.dumps(obs.to_record(), sort_keys=True) + "\n")


def read_manifest(path: Path | str) -> DatasetManifest:
    path = Path(path)
    observations: list[Observation] = []
    seed = 0
    tolerance = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if lineno == 1 and rec.get("schema") == MANIFEST_SCHEMA:
                seed = rec.get("seed", 0)
                tolerance = rec.get("imbalance_tolerance", 0)
                continue
            observations.append(Observation.from_record(rec))
    return DatasetManifest(observations, seed=seed, imbalance_tolerance=tolerance)


def iter_manifest_records(path: Path | str) -> Iterable[dict]:
    """Stream raw observation records without building Observation objects."""
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if lineno == 1 and rec.get("schema") == MANIFEST_SCHEMA:
                continue
            yield rec

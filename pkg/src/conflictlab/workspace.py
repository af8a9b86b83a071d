"""On-disk workspace layout shared by the CLI and the review service.

A workspace is one directory holding everything a study produces::

    <root>/
      manifest.jsonl          observation manifest
      scenarios.jsonl         simulation scenario records
      frames/                 rendered PNG frames
      exports/                fine-tuning export files
      runs/                   evaluation run records (*.json)
      reports/                rendered reports
      review/events.jsonl     review event log
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import IoFailure, UnknownRun
from .evalrun import RunRecord, read_run
from .model import DatasetManifest, read_manifest

__all__ = ["Workspace"]


@dataclass(frozen=True)
class Workspace:
    root: Path

    def __post_init__(self) -> None:
        object.__setattr__(self, "root", Path(self.root))

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.jsonl"

    @property
    def scenarios_path(self) -> Path:
        return self.root / "scenarios.jsonl"

    @property
    def frames_dir(self) -> Path:
        return self.root / "frames"

    @property
    def exports_dir(self) -> Path:
        return self.root / "exports"

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    @property
    def review_dir(self) -> Path:
        return self.root / "review"

    @property
    def events_path(self) -> Path:
        return self.review_dir / "events.jsonl"

    def ensure_dirs(self) -> "Workspace":
        for path in (self.root, self.frames_dir, self.exports_dir,
                     self.runs_dir, self.reports_dir, self.review_dir):
            path.mkdir(parents=True, exist_ok=True)
        return self

    def run_path(self, run_id: str) -> Path:
        return self.runs_dir / f"{run_id}.json"

    def transcript_path(self, run_id: str) -> Path:
        return self.runs_dir / f"{run_id}.transcript.jsonl"

    def load_manifest(self) -> DatasetManifest:
        if not self.manifest_path.exists():
            raise IoFailure(f"no manifest at {self.manifest_path}")
        return read_manifest(self.manifest_path)

    def load_runs(self) -> dict[str, RunRecord]:
        """All persisted runs, keyed by run id.

        Skips the ``*.config.json`` sidecars that live beside run records.
        """
        runs: dict[str, RunRecord] = {}
        if self.runs_dir.exists():
            for path in sorted(self.runs_dir.glob("*.json")):
                if path.name.endswith(".config.json"):
                    continue
                run = read_run(path)
                runs[run.run_id] = run
        return runs

    def load_run(self, run_id: str) -> RunRecord:
        path = self.run_path(run_id)
        if not path.exists():
            raise UnknownRun(f"no run {run_id!r} in {self.runs_dir}")
        return read_run(path)

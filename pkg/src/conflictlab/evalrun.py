"""Evaluation runs: drive a backend over a split, tabulate, report, compare.

A run appends every outcome to a line-delimited transcript as it
happens, keyed by observation id. Interrupting and re-running with the
same transcript resumes where it left off without re-querying completed
observations — remote inference is costly and flaky, so partial work is
never thrown away. Unparseable replies (and per-observation remote
failures) land in an ``excluded`` bucket that is reported but kept out
of the confusion-matrix denominator: coercing them would fabricate
labels.

Reports deliberately contain no timestamps or latencies, so a resumed
run, an uninterrupted run, and a re-tabulation of a persisted run all
emit byte-identical report files.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from .errors import (
    BudgetExceeded,
    EmptyRun,
    IoFailure,
    MissingFrame,
    RemoteError,
    SplitMismatch,
    Timeout,
    UnlabeledObservation,
    Unparseable,
)
from .finetune import manifest_hash
from .gateway.backends import Backend, invoke
from .gateway.parsing import ModelVerdict, parse_verdict
from .gateway.prompts import PromptTemplate
from .gateway.request import RequestMode, build_request
from .metrics import (
    CONFLICT,
    NO_CONFLICT,
    ConfusionMatrix,
    MetricsReport,
    compute_metrics,
    confusion_from_pairs,
)
from .model import ConflictLabel, DatasetManifest, Split

__all__ = [
    "RUN_SCHEMA",
    "REPORT_SCHEMA",
    "CSV_HEADER",
    "ReportFormat",
    "RunRecord",
    "derive_run_id",
    "run_eval",
    "tabulate",
    "report_payload",
    "emit_report",
    "compare_runs",
    "write_run",
    "read_run",
]

RUN_SCHEMA = "conflictlab/run.v1"
REPORT_SCHEMA = "conflictlab/report.v1"


class ReportFormat(Enum):
    JSON = "json"
    CSV = "csv"
    MARKDOWN = "markdown"


@dataclass
class RunRecord:
    """Everything one evaluation run produced, in replayable form.

    ``truth_by_id`` snapshots the split's ground truth at run time, so
    tabulation is a pure function of the record alone — re-tabulating a
    persisted run reproduces its report bit for bit.
    """

    run_id: str
    backend_id: str
    prompt_id: str
    split: Split
    mode: RequestMode
    started_at: str
    finished_at: str
    verdicts: list[ModelVerdict]
    excluded: list[tuple[str, str]]
    truth_by_id: dict[str, ConflictLabel]
    config_hash: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for oid in [v.observation_id for v in self.verdicts] + [
            oid for oid, _ in self.excluded
        ]:
            if oid in seen:
                raise ValueError(f"observation {oid} appears twice in the run")
            seen.add(oid)
            if oid not in self.truth_by_id:
                raise ValueError(f"observation {oid} is not in the run's split")
        if seen != set(self.truth_by_id):
            missing = sorted(set(self.truth_by_id) - seen)
            raise ValueError(
                f"run does not cover the whole split; missing {missing[:5]}"
                f"{'...' if len(missing) > 5 else ''}"
            )

    @property
    def split_size(self) -> int:
        return len(self.truth_by_id)

    def to_record(self) -> dict:
        return {
            "schema": RUN_SCHEMA,
            "run_id": self.run_id,
            "backend_id": self.backend_id,
            "prompt_id": self.prompt_id,
            "split": self.split.value,
            "mode": self.mode.value,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "verdicts": [v.to_record() for v in self.verdicts],
            "excluded": [[oid, reason] for oid, reason in self.excluded],
            "truth_by_id": {
                oid: label.wire for oid, label in sorted(self.truth_by_id.items())
            },
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "RunRecord":
        return cls(
            run_id=rec["run_id"],
            backend_id=rec["backend_id"],
            prompt_id=rec["prompt_id"],
            split=Split(rec["split"]),
            mode=RequestMode(rec["mode"]),
            started_at=rec["started_at"],
            finished_at=rec["finished_at"],
            verdicts=[ModelVerdict.from_record(v) for v in rec["verdicts"]],
            excluded=[(oid, reason) for oid, reason in rec["excluded"]],
            truth_by_id={
                oid: ConflictLabel.from_wire(w)
                for oid, w in rec["truth_by_id"].items()
            },
            config_hash=rec.get("config_hash", ""),
        )


def write_run(run: RunRecord, path: Path | str) -> Path:
    path = Path(path)
    try:
        path.write_text(
            json.dumps(run.to_record(), sort_keys=True, indent=2), encoding="utf-8"
        )
    except OSError as exc:
        raise IoFailure(f"cannot write run record to {path}: {exc}") from exc
    return path


def read_run(path: Path | str) -> RunRecord:
    path = Path(path)
    try:
        rec = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read run record {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"run record {path} is not valid JSON: {exc}") from exc
    if rec.get("schema") != RUN_SCHEMA:
        raise IoFailure(f"{path} is not a run record (schema {rec.get('schema')!r})")
    return RunRecord.from_record(rec)


def derive_run_id(
    backend_id: str,
    prompt_id: str,
    split: Split,
    mode: RequestMode,
    config_hash: str,
    dataset_hash: str,
) -> str:
    """Deterministic run identity: same inputs, same id — resumes included."""
    import hashlib

    key = ":".join(
        [backend_id, prompt_id, split.value, mode.value, config_hash, dataset_hash]
    )
    return "run-" + hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


# -- transcript ---------------------------------------------------------------


def _load_transcript(path: Path) -> dict[str, dict]:
    """Completed entries keyed by observation id.

    A torn final line (interrupted mid-write) is dropped so the
    observation is simply re-evaluated; corruption anywhere else is an
    error worth stopping for.
    """
    entries: dict[str, dict] = {}
    if not path.exists():
        return entries
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.readlines()
    for i, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            if i == len(lines) - 1:
                break
            raise IoFailure(
                f"transcript {path} is corrupt at line {i + 1}: {exc}"
            ) from exc
        entries[rec["observation_id"]] = rec
    return entries


def _append_transcript(fh, rec: dict) -> None:
    fh.write(json.dumps(rec, sort_keys=True) + "\n")
    fh.flush()


# -- running ------------------------------------------------------------------


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_eval(
    backend: Backend,
    template: PromptTemplate,
    manifest: DatasetManifest,
    split: Split,
    mode: RequestMode = RequestMode.VERDICT_ONLY,
    *,
    transcript_path: Optional[Path | str] = None,
    config_hash: str = "",
    image_root: Optional[Path | str] = None,
    timer: Callable[[], float] = time.perf_counter,
) -> RunRecord:
    """Evaluate every observation of ``split`` exactly once.

    With a ``transcript_path``, outcomes stream to disk as they happen
    and observations already present in the transcript are skipped, so
    an interrupted run resumes without repeating work. Unparseable
    replies and per-observation remote failures are excluded (with a
    reason) rather than aborting; only ``BudgetExceeded`` and operator
    interrupts abort, and both leave the transcript intact.

    Raises:
        EmptyRun: the split has no observations.
        UnlabeledObservation: an observation lacks ground truth.
        IoFailure: the transcript belongs to a different observation set.
    """
    observations = sorted(manifest.in_split(split), key=lambda o: o.id)
    if not observations:
        raise EmptyRun(f"split {split.value!r} has no observations")
    truth_by_id: dict[str, ConflictLabel] = {}
    for obs in observations:
        if obs.ground_truth is None:
            raise UnlabeledObservation(f"observation {obs.id} has no ground truth")
        truth_by_id[obs.id] = obs.ground_truth

    started_at = _utcnow()
    run_id = derive_run_id(
        backend.backend_id,
        template.id,
        split,
        mode,
        config_hash,
        manifest_hash(manifest),
    )

    completed: dict[str, dict] = {}
    transcript = None
    if transcript_path is not None:
        transcript_path = Path(transcript_path)
        completed = _load_transcript(transcript_path)
        stray = sorted(set(completed) - set(truth_by_id))
        if stray:
            raise IoFailure(
                f"transcript {transcript_path} contains observations outside "
                f"the split: {stray[:5]}"
            )
        transcript = transcript_path.open("a", encoding="utf-8")

    try:
        for obs in observations:
            if obs.id in completed:
                continue
            t0 = timer()
            try:
                request = build_request(template, obs, mode, image_root=image_root)
                raw = invoke(backend, request)
            except (Timeout, RemoteError, MissingFrame) as exc:
                entry = {
                    "kind": "excluded",
                    "observation_id": obs.id,
                    "reason": f"{type(exc).__name__}: {exc}",
                }
                completed[obs.id] = entry
                if transcript is not None:
                    _append_transcript(transcript, entry)
                continue
            latency_ms = max(0, int(round((timer() - t0) * 1000.0)))
            try:
                parsed = parse_verdict(raw, template.lexicon_map)
            except Unparseable:
                entry = {
                    "kind": "excluded",
                    "observation_id": obs.id,
                    "reason": f"Unparseable: {raw[:120]!r}",
                }
                completed[obs.id] = entry
                if transcript is not None:
                    _append_transcript(transcript, entry)
                continue
            verdict = ModelVerdict(
                observation_id=obs.id,
                label=parsed.label,
                raw_text=raw,
                conformant=parsed.conformant,
                latency_ms=latency_ms,
                backend_id=backend.backend_id,
                explanation=parsed.explanation,
                recommendation=parsed.recommendation,
            )
            entry = {"kind": "verdict", **verdict.to_record()}
            completed[obs.id] = entry
            if transcript is not None:
                _append_transcript(transcript, entry)
    finally:
        if transcript is not None:
            transcript.close()

    verdicts: list[ModelVerdict] = []
    excluded: list[tuple[str, str]] = []
    for oid in sorted(completed):
        entry = completed[oid]
        if entry["kind"] == "verdict":
            rec = {k: v for k, v in entry.items() if k != "kind"}
            verdicts.append(ModelVerdict.from_record(rec))
        else:
            excluded.append((oid, entry["reason"]))

    return RunRecord(
        run_id=run_id,
        backend_id=backend.backend_id,
        prompt_id=template.id,
        split=split,
        mode=mode,
        started_at=started_at,
        finished_at=_utcnow(),
        verdicts=verdicts,
        excluded=excluded,
        truth_by_id=truth_by_id,
        config_hash=config_hash,
    )


# -- tabulation ---------------------------------------------------------------


def tabulate(run: RunRecord) -> tuple[ConfusionMatrix, MetricsReport, dict]:
    """Matrix over non-excluded verdicts, metrics, and conformance stats.

    Pure function of the run record; Conflict is the positive class.

    Raises:
        EmptyRun: every observation was excluded.
    """
    if not run.verdicts:
        raise EmptyRun(
            f"run {run.run_id} has no verdicts "
            f"({len(run.excluded)} excluded observations)"
        )
    pairs = [(run.truth_by_id[v.observation_id], v.label) for v in run.verdicts]
    matrix = confusion_from_pairs(pairs)
    metrics = compute_metrics(matrix)
    conformant = sum(1 for v in run.verdicts if v.conformant)
    conformance = {
        "split_size": run.split_size,
        "evaluated": len(run.verdicts),
        "excluded_count": len(run.excluded),
        "conformant_count": conformant,
        "non_conformant_count": len(run.verdicts) - conformant,
        "conformance_rate": conformant / len(run.verdicts),
    }
    return matrix, metrics, conformance


# -- reports ------------------------------------------------------------------

_CSV_COLUMNS = [
    "run_id",
    "backend_id",
    "prompt_id",
    "split",
    "mode",
    "config_hash",
    "split_size",
    "evaluated",
    "excluded_count",
    "tp",
    "fp",
    "fn",
    "tn",
    "accuracy",
    "conflict_precision",
    "conflict_recall",
    "conflict_f1",
    "no_conflict_precision",
    "no_conflict_recall",
    "no_conflict_f1",
    "macro_precision",
    "macro_recall",
    "macro_f1",
    "weighted_f1",
    "conformance_rate",
]

#: Golden first line of every CSV report.
CSV_HEADER = ",".join(_CSV_COLUMNS) + "\n"


def report_payload(run: RunRecord) -> dict:
    """The complete report as a plain dict, shared by every output format."""
    matrix, metrics, conformance = tabulate(run)
    return {
        "schema": REPORT_SCHEMA,
        "run_id": run.run_id,
        "backend_id": run.backend_id,
        "prompt_id": run.prompt_id,
        "split": run.split.value,
        "mode": run.mode.value,
        "config_hash": run.config_hash,
        "matrix": matrix.to_dict(),
        "metrics": metrics.to_dict(),
        "conformance": conformance,
        "excluded": [[oid, reason] for oid, reason in sorted(run.excluded)],
    }


def _render_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _render_csv(payload: dict) -> str:
    matrix = payload["matrix"]
    metrics = payload["metrics"]
    per_class = metrics["per_class"]
    conformance = payload["conformance"]
    row = {
        "run_id": payload["run_id"],
        "backend_id": payload["backend_id"],
        "prompt_id": payload["prompt_id"],
        "split": payload["split"],
        "mode": payload["mode"],
        "config_hash": payload["config_hash"],
        "split_size": conformance["split_size"],
        "evaluated": conformance["evaluated"],
        "excluded_count": conformance["excluded_count"],
        "tp": matrix["tp"],
        "fp": matrix["fp"],
        "fn": matrix["fn"],
        "tn": matrix["tn"],
        "accuracy": repr(metrics["accuracy"]),
        "conflict_precision": repr(per_class[CONFLICT]["precision"]),
        "conflict_recall": repr(per_class[CONFLICT]["recall"]),
        "conflict_f1": repr(per_class[CONFLICT]["f1"]),
        "no_conflict_precision": repr(per_class[NO_CONFLICT]["precision"]),
        "no_conflict_recall": repr(per_class[NO_CONFLICT]["recall"]),
        "no_conflict_f1": repr(per_class[NO_CONFLICT]["f1"]),
        "macro_precision": repr(metrics["macro_precision"]),
        "macro_recall": repr(metrics["macro_recall"]),
        "macro_f1": repr(metrics["macro_f1"]),
        "weighted_f1": repr(metrics["weighted_f1"]),
        "conformance_rate": repr(conformance["conformance_rate"]),
    }
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerow(row)
    return buf.getvalue()


def _render_markdown(payload: dict) -> str:
    matrix = payload["matrix"]
    metrics = payload["metrics"]
    per_class = metrics["per_class"]
    conformance = payload["conformance"]
    lines = [
        f"# Evaluation report — {payload['run_id']}",
        "",
        f"- backend: `{payload['backend_id']}`",
        f"- prompt: `{payload['prompt_id']}`",
        f"- split: `{payload['split']}` ({conformance['split_size']} observations)",
        f"- mode: `{payload['mode']}`",
        f"- config hash: `{payload['config_hash'] or '(none)'}`",
        "",
        "## Confusion matrix",
        "",
        "|              | predicted yes | predicted no |",
        "|--------------|---------------|--------------|",
        f"| actual yes   | {matrix['tp']} | {matrix['fn']} |",
        f"| actual no    | {matrix['fp']} | {matrix['tn']} |",
        "",
        "## Metrics",
        "",
        "| metric | value |",
        "|--------|-------|",
        f"| accuracy | {metrics['accuracy']:.6f} |",
        f"| conflict precision | {per_class[CONFLICT]['precision']:.6f} |",
        f"| conflict recall | {per_class[CONFLICT]['recall']:.6f} |",
        f"| conflict F1 | {per_class[CONFLICT]['f1']:.6f} |",
        f"| no-conflict precision | {per_class[NO_CONFLICT]['precision']:.6f} |",
        f"| no-conflict recall | {per_class[NO_CONFLICT]['recall']:.6f} |",
        f"| no-conflict F1 | {per_class[NO_CONFLICT]['f1']:.6f} |",
        f"| macro precision | {metrics['macro_precision']:.6f} |",
        f"| macro recall | {metrics['macro_recall']:.6f} |",
        f"| macro F1 | {metrics['macro_f1']:.6f} |",
        "",
        "## Conformance",
        "",
        f"- evaluated: {conformance['evaluated']} of {conformance['split_size']}",
        f"- conformant replies: {conformance['conformant_count']} "
        f"({conformance['conformance_rate']:.4f})",
        f"- excluded (unparseable/failed): {conformance['excluded_count']}",
    ]
    if payload["excluded"]:
        lines += ["", "## Excluded observations", ""]
        for oid, reason in payload["excluded"]:
            lines.append(f"- `{oid}`: {reason}")
    return "\n".join(lines) + "\n"


def emit_report(
    run: RunRecord, fmt: ReportFormat, out_path: Path | str
) -> Path:
    """Render the run's tabulation to ``out_path`` in the chosen format.

    Report content is a pure function of the run record — no timestamps,
    no latencies — so identical runs yield byte-identical files.

    Raises:
        EmptyRun: via tabulation.
        IoFailure: the file cannot be written.
    """
    payload = report_payload(run)
    if fmt is ReportFormat.JSON:
        text = _render_json(payload)
    elif fmt is ReportFormat.CSV:
        text = _render_csv(payload)
    else:
        text = _render_markdown(payload)
    out_path = Path(out_path)
    try:
        out_path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out_path}: {exc}") from exc
    return out_path


# -- comparison ---------------------------------------------------------------


def compare_runs(runs: list[RunRecord]) -> dict:
    """Side-by-side metrics for ≥2 runs over the same split.

    Rows sort by descending accuracy, ties broken by ascending run id;
    the first row is flagged best.

    Raises:
        SplitMismatch: fewer than 2 runs, or differing splits.
    """
    if len(runs) < 2:
        raise SplitMismatch("comparison needs at least two runs")
    splits = {run.split for run in runs}
    if len(splits) != 1:
        raise SplitMismatch(
            f"runs cover different splits: {sorted(s.value for s in splits)}"
        )
    rows = []
    for run in runs:
        matrix, metrics, conformance = tabulate(run)
        rows.append(
            {
                "run_id": run.run_id,
                "backend_id": run.backend_id,
                "prompt_id": run.prompt_id,
                "accuracy": metrics.accuracy,
                "macro_precision": metrics.macro_precision,
                "macro_recall": metrics.macro_recall,
                "macro_f1": metrics.macro_f1,
                "conformance_rate": conformance["conformance_rate"],
                "evaluated": conformance["evaluated"],
                "excluded_count": conformance["excluded_count"],
            }
        )
    rows.sort(key=lambda r: (-r["accuracy"], r["run_id"]))
    for i, row in enumerate(rows):
        row["best"] = i == 0
    return {
        "split": runs[0].split.value,
        "rows": rows,
        "best_run_id": rows[0]["run_id"],
    }

"""Supervised fine-tuning corpus export and validation.

Each exported line is one chat example: the system prompt verbatim, the
three frame images as base64 data URLs in frame order, and the target
assistant reply — the bare lowercase verdict token, or (in rationale
mode) the fixed three-line layout. Assistant rationales are synthesized
from scene facts by fixed sentence templates and flagged as synthetic in
the sidecar; no human-written text is fabricated as if it were real.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Mapping, Optional

from .errors import EmptyInput, ImageReadFailure, UnlabeledObservation
from .gateway.backends import png_data_url
from .gateway.prompts import PromptTemplate
from .gateway.request import RequestMode
from .model import (
    MANIFEST_SCHEMA,
    ConflictLabel,
    DatasetManifest,
    Observation,
    Split,
)
from .sim import Scenario

__all__ = [
    "EXPORT_SCHEMA",
    "export_chat_jsonl",
    "validate_export",
    "manifest_hash",
    "rationale_target",
]

EXPORT_SCHEMA = "conflictlab/finetune-export.v1"

_MOVE_WORD = {"left": "left-turning", "straight": "through", "right": "right-turning"}

_NO_CONFLICT_EXPLANATION = (
    "No two moving vehicles are predicted to enter the junction area within "
    "the decision window; parked vehicles are ignored."
)
_NO_CONFLICT_RECOMMENDATION = "none"
_GENERIC_CONFLICT_EXPLANATION = (
    "Two moving vehicles are on course to occupy the junction area at "
    "overlapping times given their current approaches and speeds."
)
_GENERIC_CONFLICT_RECOMMENDATION = (
    "Adjust signal timing or reroute one approach so the conflicting "
    "movements are separated in time."
)


def _frame_digest_record(frame) -> dict:
    record = {
        "index": frame.index,
        "time_offset": frame.time_offset,
        "width_px": frame.width_px,
        "height_px": frame.height_px,
        "source_id": frame.source_id,
    }
    # Frames still in memory are content-addressed; materialized ones go
    # by reference, so hashing never forces image bytes to be inlined.
    if frame.image_ref is not None:
        record["image_ref"] = frame.image_ref
    else:
        record["image_sha256"] = hashlib.sha256(frame.image_bytes or b"").hexdigest()
    return record


def manifest_hash(manifest: DatasetManifest) -> str:
    """Deterministic content digest of a manifest (order-independent)."""
    header = {
        "schema": MANIFEST_SCHEMA,
        "seed": manifest.seed,
        "imbalance_tolerance": manifest.imbalance_tolerance,
    }
    digest = hashlib.sha256()
    digest.update(json.dumps(header, sort_keys=True).encode("utf-8"))
    for obs in sorted(manifest.observations, key=lambda o: o.id):
        record = {
            "id": obs.id,
            "frames": [_frame_digest_record(f) for f in obs.frames],
            "provenance": obs.provenance.value,
            "ground_truth": None if obs.ground_truth is None else obs.ground_truth.wire,
            "split": None if obs.split is None else obs.split.value,
            "scenario_ref": obs.scenario_ref,
        }
        digest.update(b"\n")
        digest.update(json.dumps(record, sort_keys=True).encode("utf-8"))
    return digest.hexdigest()


def _describe_vehicle(scenario: Scenario, vehicle_id: str) -> str:
    vehicle = next((v for v in scenario.vehicles if v.id == vehicle_id), None)
    if vehicle is None:
        return vehicle_id
    leg = vehicle.approach_leg.value
    move = _MOVE_WORD.get(vehicle.movement.value, vehicle.movement.value)
    return f"{vehicle_id} ({leg}-approach {move} {vehicle.vclass.value})"


def _yielding_member(scenario: Scenario, pair: tuple[str, str]) -> Optional[str]:
    """Which pair member owes priority: the sub-road one, else the left-turner."""
    vehicles = {v.id: v for v in scenario.vehicles}
    a, b = (vehicles.get(pair[0]), vehicles.get(pair[1]))
    if a is None or b is None:
        return None
    geom = scenario.geometry
    a_priority = geom.priority(a.approach_leg)
    b_priority = geom.priority(b.approach_leg)
    if a_priority != b_priority:
        return a.id if not a_priority else b.id
    for v in (a, b):
        if v.movement.value == "left":
            return v.id
    return None


def rationale_target(
    label: ConflictLabel, scenario: Optional[Scenario] = None
) -> tuple[str, bool]:
    """Synthesize the three-line assistant target for rationale mode.

    Returns ``(text, used_scenario_facts)``. The verdict line always
    carries the exact lexicon token; explanation and recommendation come
    from fixed sentence templates — filled with scene facts (conflicting
    pair, meeting time, priority) when a scenario is available, generic
    otherwise.
    """
    if label is ConflictLabel.NO_CONFLICT:
        explanation = _NO_CONFLICT_EXPLANATION
        recommendation = _NO_CONFLICT_RECOMMENDATION
        used_facts = False
    elif scenario is not None and scenario.conflict_pairs:
        id_a, id_b, t_meet = scenario.conflict_pairs[0]
        desc_a = _describe_vehicle(scenario, id_a)
        desc_b = _describe_vehicle(scenario, id_b)
        explanation = (
            f"Vehicles {desc_a} and {desc_b} are predicted to occupy the "
            f"junction area at overlapping times, meeting by {t_meet:.1f}s."
        )
        yielder = _yielding_member(scenario, (id_a, id_b))
        if yielder is not None:
            recommendation = (
                f"Hold vehicle {yielder} at its approach until the priority "
                "vehicle clears the junction."
            )
        else:
            recommendation = _GENERIC_CONFLICT_RECOMMENDATION
        used_facts = True
    else:
        explanation = _GENERIC_CONFLICT_EXPLANATION
        recommendation = _GENERIC_CONFLICT_RECOMMENDATION
        used_facts = False
    text = (
        f"verdict: {label.wire}\n"
        f"explanation: {explanation}\n"
        f"recommendation: {recommendation}"
    )
    return text, used_facts


def _frame_bytes(obs: Observation, index: int, image_root: Optional[Path]) -> bytes:
    frame = obs.frames[index]
    if frame.image_bytes is not None:
        return frame.image_bytes
    if frame.image_ref is None:
        raise ImageReadFailure(
            f"observation {obs.id} frame {index} has neither image bytes "
            "nor an image reference"
        )
    path = Path(frame.image_ref)
    if not path.is_absolute():
        if image_root is None:
            raise ImageReadFailure(
                f"observation {obs.id} frame {index} has relative reference "
                f"{frame.image_ref!r} but no image_root was given"
            )
        path = image_root / path
    try:
        return path.read_bytes()
    except OSError as exc:
        raise ImageReadFailure(
            f"observation {obs.id} frame {index}: cannot read {path}: {exc}"
        ) from exc


def _record_for(
    obs: Observation,
    template: PromptTemplate,
    mode: RequestMode,
    image_root: Optional[Path],
    scenario: Optional[Scenario],
) -> tuple[dict, bool]:
    if obs.ground_truth is None:
        raise UnlabeledObservation(
            f"observation {obs.id} has no ground truth; exports need labels"
        )
    content = [
        {
            "type": "image_url",
            "image_url": {"url": png_data_url(_frame_bytes(obs, k, image_root))},
        }
        for k in range(3)
    ]
    if mode is RequestMode.VERDICT_WITH_RATIONALE:
        assistant, used_facts = rationale_target(obs.ground_truth, scenario)
    else:
        assistant, used_facts = obs.ground_truth.wire, False
    record = {
        "messages": [
            {"role": "system", "content": template.system_text},
            {"role": "user", "content": content},
            {"role": "assistant", "content": assistant},
        ]
    }
    return record, used_facts


def export_chat_jsonl(
    manifest: DatasetManifest,
    split: Split,
    template: PromptTemplate,
    mode: RequestMode,
    out_path: Path | str,
    *,
    image_root: Optional[Path | str] = None,
    scenarios: Optional[Mapping[str, Scenario]] = None,
) -> dict:
    """Write one chat example per observation of ``split`` to ``out_path``.

    Records are ordered by observation id, so the same manifest always
    exports byte-identically. A ``<name>.meta.json`` sidecar records the
    counts, prompt id, mode, manifest hash, and the per-line observation
    ids (observation ids never appear in the training lines themselves).

    ``scenarios`` (keyed by ``Observation.scenario_ref``) lets rationale
    mode fill its sentence templates with real scene facts; without it
    the templates stay generic. Either way the sidecar marks rationales
    as synthetic.

    Returns a summary ``{records, bytes, class_counts}``.

    Raises:
        EmptyInput: the split has no observations.
        UnlabeledObservation: an observation lacks ground truth.
        ImageReadFailure: a frame image is absent or unreadable.
    """
    out_path = Path(out_path)
    root = None if image_root is None else Path(image_root)
    observations = sorted(manifest.in_split(split), key=lambda o: o.id)
    if not observations:
        raise EmptyInput(f"manifest has no observations in split {split.value!r}")

    class_counts = {"conflict_count": 0, "no_conflict_count": 0}
    fact_records = 0
    generic_records = 0
    with out_path.open("w", encoding="utf-8") as fh:
        for obs in observations:
            scenario = None
            if scenarios is not None and obs.scenario_ref is not None:
                scenario = scenarios.get(obs.scenario_ref)
            record, used_facts = _record_for(obs, template, mode, root, scenario)
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            if obs.ground_truth is ConflictLabel.CONFLICT:
                class_counts["conflict_count"] += 1
            else:
                class_counts["no_conflict_count"] += 1
            if mode is RequestMode.VERDICT_WITH_RATIONALE:
                if used_facts:
                    fact_records += 1
                else:
                    generic_records += 1

    meta = {
        "schema": EXPORT_SCHEMA,
        "records": len(observations),
        "class_counts": class_counts,
        "prompt_id": template.id,
        "mode": mode.value,
        "split": split.value,
        "manifest_hash": manifest_hash(manifest),
        "record_order": [obs.id for obs in observations],
        "rationale": (
            {
                "synthetic": True,
                "scenario_fact_records": fact_records,
                "generic_records": generic_records,
            }
            if mode is RequestMode.VERDICT_WITH_RATIONALE
            else None
        ),
    }
    sidecar = out_path.with_suffix(".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")

    return {
        "records": len(observations),
        "bytes": out_path.stat().st_size,
        "class_counts": class_counts,
    }


def _line_violation(record: object) -> Optional[str]:
    """Return a reason string when a parsed line breaks the export schema."""
    if not isinstance(record, dict) or set(record) != {"messages"}:
        return "top level must be an object with exactly a 'messages' key"
    messages = record["messages"]
    if not isinstance(messages, list) or len(messages) != 3:
        return "messages must be a list of exactly 3 entries"
    roles = [m.get("role") for m in messages if isinstance(m, dict)]
    if roles != ["system", "user", "assistant"]:
        return "roles must be system, user, assistant in order"
    system, user, assistant = messages
    if not isinstance(system.get("content"), str) or not system["content"]:
        return "system content must be a non-empty string"
    content = user.get("content")
    if not isinstance(content, list) or len(content) < 3:
        return "user content must list at least the three frame images"
    for k in range(3):
        part = content[k]
        if not isinstance(part, dict) or part.get("type") != "image_url":
            return f"user content part {k} must be an image part"
        url = part.get("image_url", {}).get("url", "")
        if not isinstance(url, str) or not url.startswith("data:image/"):
            return f"user content part {k} must embed a data URL"
    reply = assistant.get("content")
    if not isinstance(reply, str):
        return "assistant content must be a string"
    if reply in ("yes", "no"):
        return None
    lines = reply.splitlines()
    if len(lines) >= 3 and lines[0] in ("verdict: yes", "verdict: no"):
        keys_ok = lines[1].startswith("explanation:") and any(
            line.startswith("recommendation:") for line in lines[2:]
        )
        if keys_ok:
            return None
    return "assistant content must be a bare verdict or the three-line layout"


def _assistant_label(record: dict) -> Optional[ConflictLabel]:
    reply = record["messages"][2]["content"]
    if reply in ("yes", "no"):
        return ConflictLabel.from_wire(reply)
    first = reply.splitlines()[0]
    return ConflictLabel.from_wire(first.removeprefix("verdict: "))


def validate_export(path: Path | str) -> dict:
    """Stream-validate an export file line by line.

    Never loads the whole file; returns
    ``{line_count, schema_violations, class_balance}`` where
    ``schema_violations`` lists offending line numbers (1-based) and
    ``class_balance`` counts the assistant verdicts of valid lines.
    """
    path = Path(path)
    line_count = 0
    violations: list[int] = []
    balance = {"conflict_count": 0, "no_conflict_count": 0}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            line_count += 1
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                violations.append(lineno)
                continue
            if _line_violation(record) is not None:
                violations.append(lineno)
                continue
            label = _assistant_label(record)
            if label is ConflictLabel.CONFLICT:
                balance["conflict_count"] += 1
            else:
                balance["no_conflict_count"] += 1
    return {
        "line_count": line_count,
        "schema_violations": violations,
        "class_balance": balance,
    }

"""Single command-line entry point for every workflow.

Every subcommand resolves its options through the same layered config —
built-in defaults, then a JSON config file (``--config``), then
``CONFLICTLAB_*`` environment variables, then explicit flags — and the
resolved options are hashed into ``config_hash``, which is stamped into
every run artifact. Identical resolved configs and seeds therefore
produce byte-identical manifests, exports, and reports (remote backends
excepted).

Exit codes: 0 success, 1 usage or domain error, 2 budget abort,
3 IO/store failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .errors import (
    BudgetExceeded,
    ConflictLabError,
    IoFailure,
)
from .evalrun import (
    ReportFormat,
    derive_run_id,
    emit_report,
    compare_runs,
    report_payload,
    run_eval,
    write_run,
)
from .finetune import export_chat_jsonl, manifest_hash
from .gateway import (
    PROMPTS,
    OracleBackend,
    RemoteBackend,
    RemoteConfig,
    RequestMode,
    build_request,
    invoke,
    parse_verdict,
    scripted_confusion_backend,
)
from .ingest import SourceKind, SourceSpec, assign_splits, extract_triplet
from .metrics import ConfusionMatrix
from .model import (
    ConflictLabel,
    DatasetManifest,
    Observation,
    Provenance,
    Split,
    write_manifest,
)
from .review.scoring import resolve_labels
from .review.store import EventStore
from .sim.scenario import read_scenarios
from .synthesis import synthesize_dataset
from .workspace import Workspace

__all__ = ["dispatch", "main"]

_ENV_PREFIX = "CONFLICTLAB_"


class UsageError(ConflictLabError):
    """Bad flags, bad values, or a request the artifacts cannot satisfy."""


# ---------------------------------------------------------------------------
# option schema and layered resolution
# ---------------------------------------------------------------------------


def _parse_bool(raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    token = str(raw).strip().lower()
    if token in ("1", "true", "yes", "on"):
        return True
    if token in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


@dataclass(frozen=True)
class Opt:
    """One subcommand option, resolvable from file, env, or flag."""

    name: str
    type_: Callable[[Any], Any]
    default: Any = None
    help: str = ""
    required: bool = False
    choices: Optional[tuple] = None
    hashed: bool = True  # participates in config_hash

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")

    @property
    def env_key(self) -> str:
        return _ENV_PREFIX + self.name.upper().replace("-", "_")

    def coerce(self, raw: Any) -> Any:
        value = self.type_(raw)
        if self.choices is not None and value not in self.choices:
            raise UsageError(
                f"--{self.name} must be one of {list(self.choices)}, got {value!r}"
            )
        return value


# Options shared by every subcommand.
_COMMON = [
    Opt("workspace", str, default="workspace",
        help="root directory for all artifacts", hashed=False),
    Opt("output", str, default="text", choices=("text", "json"),
        help="stdout format", hashed=False),
    Opt("config", str, default=None,
        help="JSON config file (layered under env vars and flags)", hashed=False),
]

_REMOTE_OPTS = [
    Opt("endpoint", str, default=None, help="remote chat-completions endpoint URL"),
    Opt("model", str, default="", help="remote model identifier"),
    Opt("auth-env", str, default=None,
        help="environment variable holding the bearer token", hashed=False),
    Opt("timeout", float, default=60.0, help="per-request timeout in seconds"),
    Opt("retries", int, default=2, help="retries per request after the first attempt"),
    Opt("max-in-flight", int, default=4, help="concurrent request ceiling"),
    Opt("budget", int, default=None,
        help="total request budget; exceeding it aborts with exit code 2"),
    Opt("backoff", float, default=0.5, help="base seconds for exponential backoff"),
]


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


def resolve_config(
    subcommand: str,
    opts: list[Opt],
    explicit: Mapping[str, Any],
    file_cfg: Mapping[str, Any],
    env: Mapping[str, str],
) -> tuple[dict, str]:
    """Layer defaults < config file < environment < explicit flags.

    Returns the resolved option dict and its ``config_hash`` — a digest
    over the hash-relevant options only, so presentation choices like
    ``--output`` never change artifact identity.
    """
    section = file_cfg.get(subcommand, {})
    if not isinstance(section, dict):
        raise UsageError(f"config section {subcommand!r} must be an object")
    resolved: dict[str, Any] = {}
    for opt in opts:
        value = opt.default
        if opt.name in file_cfg and not isinstance(file_cfg[opt.name], dict):
            value = opt.coerce(file_cfg[opt.name])
        if opt.name in section:
            value = opt.coerce(section[opt.name])
        if opt.env_key in env:
            value = opt.coerce(env[opt.env_key])
        if opt.dest in explicit:
            value = opt.coerce(explicit[opt.dest])
        if opt.required and value is None:
            raise UsageError(f"--{opt.name} is required for {subcommand}")
        resolved[opt.name] = value
    hashable = {
        "subcommand": subcommand,
        "options": {
            opt.name: resolved[opt.name] for opt in opts if opt.hashed
        },
    }
    digest = hashlib.sha256(
        json.dumps(hashable, sort_keys=True).encode("utf-8")
    ).hexdigest()
    return resolved, digest


@dataclass
class RunConfig:
    """A subcommand plus its fully resolved options."""

    subcommand: str
    options: dict
    config_hash: str

    def __getitem__(self, name: str) -> Any:
        return self.options[name]


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _split_of(token: str) -> Split:
    try:
        return Split(token.lower())
    except ValueError:
        raise UsageError(
            f"split must be one of {[s.value for s in Split]}, got {token!r}"
        ) from None


def _prompt_of(token: str):
    template = PROMPTS.get(token.lower())
    if template is None:
        raise UsageError(
            f"prompt must be one of {sorted(PROMPTS)} (case-insensitive), got {token!r}"
        )
    return template


def _mode_of(token: str) -> RequestMode:
    try:
        return RequestMode(token.lower())
    except ValueError:
        raise UsageError(
            f"mode must be one of {[m.value for m in RequestMode]}, got {token!r}"
        ) from None


def _make_backend(cfg: RunConfig, manifest: DatasetManifest, split: Optional[Split],
                  ws: Optional[Workspace] = None):
    """Build the requested backend: oracle, scripted:<tp,fp,fn,tn>, or remote."""
    spec = cfg["backend"]
    if spec == "oracle":
        scenarios = None
        if ws is not None and ws.scenarios_path.exists():
            scenarios = {sc.id: sc for sc in read_scenarios(ws.scenarios_path)}
        return OracleBackend.from_observations(manifest.observations, scenarios)
    if spec.startswith("scripted:"):
        if split is None:
            raise UsageError("the scripted backend needs a --split to target")
        try:
            tp, fp, fn, tn = (int(x) for x in spec.split(":", 1)[1].split(","))
        except ValueError:
            raise UsageError(
                "scripted backend spec must be scripted:<tp>,<fp>,<fn>,<tn>"
            ) from None
        target = ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)
        return scripted_confusion_backend(target, manifest.in_split(split))
    if spec == "remote":
        if not cfg["endpoint"]:
            raise UsageError("--endpoint is required for the remote backend")
        return RemoteBackend(
            RemoteConfig(
                endpoint=cfg["endpoint"],
                model_id=cfg["model"],
                auth_token_env=cfg["auth-env"],
                timeout_s=cfg["timeout"],
                retries=cfg["retries"],
                max_in_flight=cfg["max-in-flight"],
                request_budget=cfg["budget"],
                backoff_base_s=cfg["backoff"],
            )
        )
    raise UsageError(
        f"backend must be oracle, scripted:<tp,fp,fn,tn>, or remote; got {spec!r}"
    )


def _emit(cfg: RunConfig, payload: dict, text_lines: list[str]) -> None:
    if cfg["output"] == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for line in text_lines:
            print(line)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_simulate(cfg: RunConfig, ws: Workspace) -> dict:
    manifest, scenarios, summary = synthesize_dataset(
        cfg["n"],
        cfg["seed"],
        ws,
        balance=cfg["balance"],
        width_px=cfg["width"],
        height_px=cfg["height"],
    )
    payload = {**summary, "config_hash": cfg.config_hash}
    _emit(cfg, payload, [
        f"produced {summary['produced']} observations "
        f"({summary['conflict_count']} conflict / "
        f"{summary['no_conflict_count']} no-conflict, "
        f"{summary['skipped']} draws skipped)",
        f"manifest: {summary['manifest_path']}",
    ])
    return payload


def _cmd_ingest(cfg: RunConfig, ws: Workspace) -> dict:
    ws.ensure_dirs()
    source_path = Path(cfg["source"])
    kind = (
        SourceKind(cfg["kind"])
        if cfg["kind"]
        else (
            SourceKind.IMAGE_SEQUENCE_DIR
            if source_path.is_dir()
            else SourceKind.VIDEO_FILE
        )
    )
    src = SourceSpec(
        kind=kind, path=str(source_path), fps=cfg["fps"], duration_s=cfg["duration"]
    )
    starts = [float(x) for x in str(cfg["starts"]).split(",") if x != ""]
    if not starts:
        raise UsageError("--starts must list at least one start time")
    labels: list[Optional[ConflictLabel]] = [None] * len(starts)
    if cfg["labels"]:
        tokens = [t.strip() for t in str(cfg["labels"]).split(",")]
        if len(tokens) != len(starts):
            raise UsageError(
                f"--labels lists {len(tokens)} labels for {len(starts)} start times"
            )
        try:
            labels = [ConflictLabel.from_wire(t) for t in tokens]
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    resize = None
    if cfg["resize"]:
        try:
            w, h = (int(x) for x in str(cfg["resize"]).lower().split("x"))
            resize = (w, h)
        except ValueError:
            raise UsageError("--resize must look like 640x640") from None

    if ws.manifest_path.exists():
        existing = ws.load_manifest()
        observations = list(existing.observations)
        seed = existing.seed
    else:
        observations = []
        seed = cfg["seed"]

    from dataclasses import replace as _replace

    added = []
    offset = len(observations)
    for i, start in enumerate(starts):
        obs_id = f"{cfg['id-prefix']}-{offset + i:04d}"
        frames = extract_triplet(
            src,
            start,
            resize=resize,
            decoder_template=cfg["decoder"],
            source_id=obs_id,
        )
        persisted = []
        for frame in frames:
            ref = f"frames/{obs_id}-f{frame.index}.png"
            (ws.root / ref).write_bytes(frame.image_bytes)
            persisted.append(_replace(frame, image_ref=ref))
        added.append(
            Observation(
                id=obs_id,
                frames=tuple(persisted),
                provenance=Provenance.INGESTED,
                ground_truth=labels[i],
                split=None,
                scenario_ref=None,
            )
        )
    manifest = DatasetManifest(observations + added, seed=seed)
    write_manifest(manifest, ws.manifest_path)
    payload = {
        "ingested": len(added),
        "total": len(manifest.observations),
        **manifest.class_counts(),
        "manifest_path": str(ws.manifest_path),
        "config_hash": cfg.config_hash,
    }
    _emit(cfg, payload, [
        f"ingested {len(added)} observations from {src.path}",
        f"manifest now holds {len(manifest.observations)}",
    ])
    return payload


def _cmd_split(cfg: RunConfig, ws: Workspace) -> dict:
    manifest = ws.load_manifest()
    counts = {"train": cfg["train"], "val": cfg["val"], "test": cfg["test"]}
    updated = assign_splits(manifest, counts, cfg["seed"])
    write_manifest(updated, ws.manifest_path)
    payload = {
        "split_counts": updated.split_counts,
        "manifest_path": str(ws.manifest_path),
        "config_hash": cfg.config_hash,
    }
    lines = [
        f"{name}: {bucket['conflict_count']} conflict / "
        f"{bucket['no_conflict_count']} no-conflict"
        for name, bucket in sorted(updated.split_counts.items())
    ]
    _emit(cfg, payload, lines or ["no splits assigned"])
    return payload


def _ws_path(ws: Workspace, raw: str) -> Path:
    """A user-supplied path: absolute as-is, otherwise workspace-relative."""
    path = Path(raw)
    return path if path.is_absolute() else ws.root / path


def _cmd_export_finetune(cfg: RunConfig, ws: Workspace) -> dict:
    ws.ensure_dirs()
    manifest = ws.load_manifest()
    template = _prompt_of(cfg["prompt"])
    mode = _mode_of(cfg["mode"])
    split = _split_of(cfg["split"])
    out = _ws_path(ws, cfg["out"]) if cfg["out"] else (
        ws.exports_dir / f"{split.value}-{template.id}-{mode.value}.jsonl"
    )
    scenarios = None
    if mode is RequestMode.VERDICT_WITH_RATIONALE and ws.scenarios_path.exists():
        scenarios = {sc.id: sc for sc in read_scenarios(ws.scenarios_path)}
    result = export_chat_jsonl(
        manifest, split, template, mode, out,
        image_root=ws.root, scenarios=scenarios,
    )
    payload = {**result, "out_path": str(out), "config_hash": cfg.config_hash}
    _emit(cfg, payload, [
        f"wrote {result['records']} chat records ({result['bytes']} bytes) to {out}",
    ])
    return payload


def _cmd_infer(cfg: RunConfig, ws: Workspace) -> dict:
    manifest = ws.load_manifest()
    obs = manifest.by_id().get(cfg["obs"])
    if obs is None:
        raise UsageError(f"no observation {cfg['obs']!r} in the manifest")
    template = _prompt_of(cfg["prompt"])
    mode = _mode_of(cfg["mode"])
    if str(cfg["backend"]).startswith("scripted:"):
        raise UsageError("infer runs one observation; use oracle or remote")
    backend = _make_backend(cfg, manifest, None, ws)
    try:
        request = build_request(
            template, obs, mode, image_root=ws.root,
            model_id=cfg["model"] or "local-oracle",
        )
        raw = invoke(backend, request)
    finally:
        closer = getattr(backend, "close", None)
        if closer:
            closer()
    verdict = parse_verdict(raw, template.lexicon_map)
    payload = {
        "observation_id": obs.id,
        "label": verdict.label.wire,
        "conformant": verdict.conformant,
        "raw_text": raw,
        "explanation": verdict.explanation,
        "recommendation": verdict.recommendation,
        "ground_truth": None if obs.ground_truth is None else obs.ground_truth.wire,
        "config_hash": cfg.config_hash,
    }
    lines = [f"verdict: {verdict.label.wire}"]
    if verdict.explanation:
        lines.append(f"explanation: {verdict.explanation}")
    if verdict.recommendation:
        lines.append(f"recommendation: {verdict.recommendation}")
    if obs.ground_truth is not None:
        lines.append(f"ground truth: {obs.ground_truth.wire}")
    _emit(cfg, payload, lines)
    return payload


def _cmd_eval(cfg: RunConfig, ws: Workspace) -> dict:
    ws.ensure_dirs()
    manifest = ws.load_manifest()
    template = _prompt_of(cfg["prompt"])
    mode = _mode_of(cfg["mode"])
    split = _split_of(cfg["split"])
    backend = _make_backend(cfg, manifest, split, ws)
    run_id = derive_run_id(
        backend.backend_id, template.id, split, mode,
        cfg.config_hash, manifest_hash(manifest),
    )
    transcript = ws.transcript_path(run_id) if cfg["transcript"] else None
    try:
        run = run_eval(
            backend, template, manifest, split, mode,
            transcript_path=transcript,
            config_hash=cfg.config_hash,
            image_root=ws.root,
        )
    finally:
        closer = getattr(backend, "close", None)
        if closer:
            closer()
    write_run(run, ws.run_path(run.run_id))
    config_path = ws.runs_dir / f"{run.run_id}.config.json"
    config_path.write_text(
        json.dumps(
            {"subcommand": cfg.subcommand, "options": cfg.options,
             "config_hash": cfg.config_hash},
            sort_keys=True, indent=2,
        ) + "\n",
        encoding="utf-8",
    )
    report_path = ws.reports_dir / f"{run.run_id}.json"
    emit_report(run, ReportFormat.JSON, report_path)
    payload = report_payload(run)
    payload["report_path"] = str(report_path)
    payload["run_path"] = str(ws.run_path(run.run_id))
    metrics = payload["metrics"]
    _emit(cfg, payload, [
        f"run {run.run_id}: accuracy {metrics['accuracy']:.6f} "
        f"over {payload['conformance']['evaluated']} verdicts "
        f"({payload['conformance']['excluded_count']} excluded)",
        f"report: {report_path}",
    ])
    return payload


def _cmd_report(cfg: RunConfig, ws: Workspace) -> dict:
    run = ws.load_run(cfg["run"])
    fmt = ReportFormat(cfg["format"])
    suffix = {"json": ".json", "csv": ".csv", "markdown": ".md"}[fmt.value]
    out = _ws_path(ws, cfg["out"]) if cfg["out"] else (
        ws.reports_dir / f"{run.run_id}{suffix}"
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_report(run, fmt, out)
    payload = {
        "run_id": run.run_id,
        "format": fmt.value,
        "report_path": str(out),
        "config_hash": cfg.config_hash,
    }
    _emit(cfg, payload, [f"wrote {fmt.value} report to {out}"])
    return payload


def _cmd_compare(cfg: RunConfig, ws: Workspace) -> dict:
    run_ids = [r for r in str(cfg["runs"]).split(",") if r]
    if len(run_ids) < 2:
        raise UsageError("--runs needs at least two comma-separated run ids")
    runs = [ws.load_run(rid) for rid in run_ids]
    result = compare_runs(runs)
    payload = {**result, "config_hash": cfg.config_hash}
    lines = []
    for row in result["rows"]:
        marker = "*" if row["best"] else " "
        lines.append(
            f"{marker} {row['run_id']}  acc={row['accuracy']:.6f}  "
            f"macro_f1={row['macro_f1']:.6f}  ({row['backend_id']}, {row['prompt_id']})"
        )
    _emit(cfg, payload, lines)
    return payload


def _cmd_serve(cfg: RunConfig, ws: Workspace) -> dict:
    import uvicorn

    from .review.service import app_from_workspace

    app = app_from_workspace(
        ws,
        ui_dir=cfg["ui"],
        cors_origins=tuple(str(cfg["cors"]).split(",")),
    )
    payload = {
        "host": cfg["host"],
        "port": cfg["port"],
        "workspace": str(ws.root),
        "config_hash": cfg.config_hash,
    }
    _emit(cfg, payload, [f"serving {ws.root} on http://{cfg['host']}:{cfg['port']}"])
    uvicorn.run(app, host=cfg["host"], port=cfg["port"], log_level="warning")
    return payload


def _cmd_labels_resolve(cfg: RunConfig, ws: Workspace) -> dict:
    manifest = ws.load_manifest()
    if not ws.events_path.exists():
        raise UsageError(f"no review events at {ws.events_path}")
    store = EventStore(ws.events_path)
    try:
        events = store.state.label_events()
    finally:
        store.close()
    resolved, report = resolve_labels(manifest, events)
    out = _ws_path(ws, cfg["out"]) if cfg["out"] else ws.manifest_path
    write_manifest(resolved, out)
    payload = {**report, "manifest_path": str(out), "config_hash": cfg.config_hash}
    _emit(cfg, payload, [
        f"resolved {report['labeled']} labels from {report['events']} events "
        f"by {report['annotators']} annotators "
        f"({len(report['ties'])} ties left unlabeled)",
        f"manifest: {out}",
    ])
    return payload


# ---------------------------------------------------------------------------
# subcommand table
# ---------------------------------------------------------------------------

_SUBCOMMANDS: dict[str, tuple[str, list[Opt], Callable[[RunConfig, Workspace], dict]]] = {
    "simulate": (
        "generate scenarios, render frames, and write a manifest",
        [
            Opt("n", int, required=True, help="number of observations to produce"),
            Opt("balance", float, default=0.5,
                help="conflict bias of the sampler, in [0, 1]"),
            Opt("seed", int, default=0, help="master seed for all substreams"),
            Opt("width", int, default=640, help="frame width in pixels"),
            Opt("height", int, default=640, help="frame height in pixels"),
        ],
        _cmd_simulate,
    ),
    "ingest": (
        "extract frame triplets from footage into the manifest",
        [
            Opt("source", str, required=True,
                help="video file or image-sequence directory"),
            Opt("kind", str, default=None,
                choices=(None, "video_file", "image_sequence_dir"),
                help="source kind (default: inferred from the path)"),
            Opt("fps", float, required=True, help="capture rate of the source"),
            Opt("starts", str, required=True,
                help="comma-separated triplet start times in seconds"),
            Opt("labels", str, default=None,
                help="comma-separated yes/no ground truth, one per start"),
            Opt("resize", str, default=None,
                help="letterbox target, e.g. 640x640"),
            Opt("decoder", str, default=None,
                help="video decoder command with {input} {timestamp} {output}"),
            Opt("duration", float, default=None,
                help="declared source duration in seconds"),
            Opt("id-prefix", str, default="ing", help="observation id prefix"),
            Opt("seed", int, default=0,
                help="manifest seed when creating a new manifest"),
        ],
        _cmd_ingest,
    ),
    "split": (
        "assign class-balanced train/val/test splits",
        [
            Opt("train", int, default=504, help="train split size (even)"),
            Opt("val", int, default=56, help="val split size (even)"),
            Opt("test", int, default=140, help="test split size (even)"),
            Opt("seed", int, default=0, help="shuffle seed"),
        ],
        _cmd_split,
    ),
    "export-finetune": (
        "write chat-format training examples for one split",
        [
            Opt("split", str, default="train", help="split to export"),
            Opt("prompt", str, default="p2", help="prompt template id"),
            Opt("mode", str, default="verdict_only",
                help="assistant answer shape: verdict_only or verdict_with_rationale"),
            Opt("out", str, default=None,
                help="output path (default: exports/<split>-<prompt>-<mode>.jsonl)"),
        ],
        _cmd_export_finetune,
    ),
    "infer": (
        "run one observation through a backend and print the verdict",
        [
            Opt("obs", str, required=True, help="observation id"),
            Opt("backend", str, default="oracle", help="oracle or remote"),
            Opt("prompt", str, default="p2", help="prompt template id"),
            Opt("mode", str, default="verdict_only", help="request mode"),
            *_REMOTE_OPTS,
        ],
        _cmd_infer,
    ),
    "eval": (
        "evaluate a whole split and write the run record and report",
        [
            Opt("backend", str, default="oracle",
                help="oracle, scripted:<tp,fp,fn,tn>, or remote"),
            Opt("prompt", str, default="p2", help="prompt template id"),
            Opt("split", str, default="test", help="split to evaluate"),
            Opt("mode", str, default="verdict_only", help="request mode"),
            Opt("transcript", _parse_bool, default=True,
                help="stream outcomes to a resumable transcript", hashed=False),
            *_REMOTE_OPTS,
        ],
        _cmd_eval,
    ),
    "report": (
        "render a stored run as json, csv, or markdown",
        [
            Opt("run", str, required=True, help="run id"),
            Opt("format", str, default="json",
                choices=("json", "csv", "markdown"), help="output format"),
            Opt("out", str, default=None, help="output path"),
        ],
        _cmd_report,
    ),
    "compare": (
        "rank stored runs on one split side by side",
        [
            Opt("runs", str, required=True, help="comma-separated run ids"),
        ],
        _cmd_compare,
    ),
    "serve": (
        "serve the review API (and optional UI) over HTTP",
        [
            Opt("host", str, default="127.0.0.1", help="bind address"),
            Opt("port", int, default=8000, help="bind port"),
            Opt("ui", str, default=None, help="static UI directory to mount at /"),
            Opt("cors", str, default="*",
                help="comma-separated allowed CORS origins"),
        ],
        _cmd_serve,
    ),
    "labels-resolve": (
        "fold review label events into manifest ground truth",
        [
            Opt("out", str, default=None,
                help="output manifest path (default: in place)"),
        ],
        _cmd_labels_resolve,
    ),
}


# ---------------------------------------------------------------------------
# argv parsing and dispatch
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so exit codes stay ours."""

    def error(self, message: str):  # noqa: D401 - argparse contract
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="conflictlab",
        description="bird's-eye traffic-conflict detection harness",
    )
    subparsers = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    for name, (help_text, opts, _handler) in _SUBCOMMANDS.items():
        sub = subparsers.add_parser(
            name, help=help_text, description=help_text, parents=[],
        )
        for opt in [*_COMMON, *opts]:
            kwargs: dict[str, Any] = {
                "dest": opt.dest,
                "default": argparse.SUPPRESS,
                "help": opt.help,
                "metavar": opt.name.replace("-", "_").upper(),
            }
            sub.add_argument(f"--{opt.name}", **kwargs)
    return parser


def dispatch(argv: list[str]) -> int:
    """Parse argv, run the subcommand, and map errors to exit codes."""
    parser = _build_parser()
    try:
        namespace = parser.parse_args(argv)
        subcommand = getattr(namespace, "subcommand", None)
        if not subcommand:
            parser.print_help(sys.stderr)
            return 1
        help_text, opts, handler = _SUBCOMMANDS[subcommand]
        explicit = {
            k: v for k, v in vars(namespace).items() if k != "subcommand"
        }
        all_opts = [*_COMMON, *opts]
        # Resolve --config first (flags/env only), then layer the file in.
        pre, _ = resolve_config(subcommand, _COMMON, explicit, {}, os.environ)
        file_cfg = _load_config_file(pre["config"])
        options, config_hash = resolve_config(
            subcommand, all_opts, explicit, file_cfg, os.environ
        )
        cfg = RunConfig(subcommand=subcommand, options=options, config_hash=config_hash)
        ws = Workspace(Path(options["workspace"]))
        handler(cfg, ws)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 2
    except (IoFailure, OSError) as exc:
        print(f"io failure: {exc}", file=sys.stderr)
        return 3
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return int(code) if isinstance(code, int) else 0
    except (ConflictLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()

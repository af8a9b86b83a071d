"""Batch scenario synthesis: scenarios → rendered frames → manifest.

One master seed drives everything through named substreams, so a given
``(n, seed, config, image size)`` tuple always produces byte-identical
scenario records, PNG frames, and manifest — the determinism the rest of
the harness builds on.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from .errors import PlacementFailure, RenderBounds
from .model import ConflictLabel, DatasetManifest, Observation, Provenance, write_manifest
from .seeding import substream_seed
from .sim.generator import GeneratorConfig, sample_scenario
from .sim.render import render_frames
from .sim.scenario import Scenario, write_scenarios
from .workspace import Workspace

__all__ = ["synthesize_dataset"]

#: Hard cap on sampler attempts per produced observation, so a
#: pathological config fails loudly instead of spinning forever.
_MAX_ATTEMPTS_PER_OBS = 25


def synthesize_dataset(
    n: int,
    seed: int,
    workspace: Workspace | Path | str,
    *,
    balance: float = 0.5,
    width_px: int = 640,
    height_px: int = 640,
    config: GeneratorConfig | None = None,
) -> tuple[DatasetManifest, list[Scenario], dict]:
    """Generate ``n`` observations into a workspace.

    ``balance`` sets both the sampler's conflict bias and the exact
    class quotas of the result: ``round(n * balance)`` conflict
    observations and the rest no-conflict. The bias makes most draws
    land in an open quota; draws of a full class — like draws that
    cannot be placed or rendered — are skipped deterministically (the
    skip depends only on the seed and config) and replaced by later
    substream draws.

    Writes ``frames/*.png``, ``scenarios.jsonl``, and ``manifest.jsonl``
    under the workspace root and returns the manifest, the scenarios,
    and a summary dict.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0.0 <= balance <= 1.0:
        raise ValueError("balance must be in [0, 1]")
    ws = workspace if isinstance(workspace, Workspace) else Workspace(Path(workspace))
    ws.ensure_dirs()
    cfg = config or GeneratorConfig(conflict_bias=balance)

    quota = {
        ConflictLabel.CONFLICT: int(round(n * balance)),
        ConflictLabel.NO_CONFLICT: n - int(round(n * balance)),
    }
    filled = {ConflictLabel.CONFLICT: 0, ConflictLabel.NO_CONFLICT: 0}

    observations: list[Observation] = []
    scenarios: list[Scenario] = []
    skipped = 0
    stream_index = 0
    while len(observations) < n:
        if stream_index >= n * _MAX_ATTEMPTS_PER_OBS:
            raise PlacementFailure(
                f"gave up after {stream_index} sampler draws for {n} observations "
                f"({skipped} skipped)"
            )
        draw_seed = substream_seed(seed, "sampler", stream_index)
        stream_index += 1
        try:
            scenario = sample_scenario(draw_seed, cfg)
        except PlacementFailure:
            skipped += 1
            continue
        if filled[scenario.oracle_label] >= quota[scenario.oracle_label]:
            skipped += 1
            continue
        try:
            frames = list(render_frames(scenario, width_px, height_px))
        except RenderBounds:
            skipped += 1
            continue
        filled[scenario.oracle_label] += 1

        obs_id = f"obs-{len(observations):04d}"
        persisted = []
        for frame in frames:
            ref = f"frames/{obs_id}-f{frame.index}.png"
            (ws.root / ref).write_bytes(frame.image_bytes)
            persisted.append(replace(frame, image_ref=ref))
        observations.append(
            Observation(
                id=obs_id,
                frames=tuple(persisted),
                provenance=Provenance.SYNTHETIC,
                ground_truth=scenario.oracle_label,
                split=None,
                scenario_ref=scenario.id,
            )
        )
        scenarios.append(scenario)

    manifest = DatasetManifest(observations, seed=seed)
    write_scenarios(ws.scenarios_path, scenarios)
    write_manifest(manifest, ws.manifest_path)

    summary = {
        "requested": n,
        "produced": len(observations),
        "skipped": skipped,
        "sampler_draws": stream_index,
        **manifest.class_counts(),
        "manifest_path": str(ws.manifest_path),
        "scenarios_path": str(ws.scenarios_path),
    }
    return manifest, scenarios, summary

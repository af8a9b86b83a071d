"""Turning real footage into observations.

Sources are either a video file (decoded frame-by-frame through an external
decoder command) or a directory of still images captured at a declared rate.
The harness itself never links against a video library: the decoder contract
is a command template with ``{input} {timestamp} {output}`` placeholders that
must write one still image and exit 0.

Frame selection: for a triplet starting at ``start`` seconds with spacing
``interval``, the source frame indices are ``round(fps * (start + k *
interval))`` for k in {0, 1, 2}, rounding half up (25 fps at 2.0 s gives
indices {50, 63, 75}: 62.5 rounds to 63).  Optional resizing letterboxes
into the target box — equal scale on both axes, centred, black padding.
"""

from __future__ import annotations

import io
import math
import shlex
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from PIL import Image

from .errors import (
    AmbiguousSequence,
    DecoderFailure,
    ImageReadFailure,
    InsufficientClass,
    OddSplitCount,
    OutOfRange,
)
from .model import FRAME_INTERVAL_S, ConflictLabel, DatasetManifest, Frame, Split
from .seeding import rng_for

__all__ = [
    "SourceKind",
    "SourceSpec",
    "extract_triplet",
    "extract_triplets",
    "build_manifest",
    "assign_splits",
    "letterbox",
]

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp"}


class SourceKind(str, Enum):
    VIDEO_FILE = "video_file"
    IMAGE_SEQUENCE_DIR = "image_sequence_dir"


@dataclass(frozen=True)
class SourceSpec:
    """One footage source: a video file or an image-sequence directory.

    ``fps`` is the capture rate (declared for image sequences).  For video
    files whose container length is known, ``duration_s`` enables range
    checking before the decoder is ever invoked.
    """

    kind: SourceKind
    path: str
    fps: float
    duration_s: Optional[float] = None

    def __post_init__(self):
        if self.fps <= 0.0:
            raise ValueError("fps must be positive")
        if self.duration_s is not None and self.duration_s < 0.0:
            raise ValueError("duration_s must be non-negative")


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def frame_indices(fps, start, interval=FRAME_INTERVAL_S):
    """Source frame indices for a triplet: round-half-up of fps * timestamp."""
    return [_round_half_up(fps * (start + k * interval)) for k in range(3)]


def letterbox(image, width_px, height_px):
    """Fit an image into the target box without changing its aspect ratio.

    The same scale factor applies to both axes; the result is centred on a
    black canvas of exactly ``width_px`` x ``height_px``.
    """
    if width_px <= 0 or height_px <= 0:
        raise ValueError("letterbox target must be positive")
    iw, ih = image.size
    scale = min(width_px / iw, height_px / ih)
    new_w = max(1, round(iw * scale))
    new_h = max(1, round(ih * scale))
    resized = image.resize((new_w, new_h), Image.BILINEAR)
    canvas = Image.new("RGB", (width_px, height_px), (0, 0, 0))
    canvas.paste(resized, ((width_px - new_w) // 2, (height_px - new_h) // 2))
    return canvas


def _sequence_files(directory):
    files = [
        p for p in Path(directory).iterdir()
        if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES
    ]
    by_stem = {}
    for p in files:
        if p.stem in by_stem:
            raise AmbiguousSequence(
                f"duplicate sequence key {p.stem!r}: {by_stem[p.stem].name} vs {p.name}"
            )
        by_stem[p.stem] = p
    return [by_stem[k] for k in sorted(by_stem)]


def _decode_video_frame(src, index, decoder_template, workdir):
    timestamp = index / src.fps
    out_path = Path(workdir) / f"frame_{index:08d}.png"
    argv = [
        part.format(input=src.path, timestamp=f"{timestamp:.6f}", output=str(out_path))
        for part in shlex.split(decoder_template)
    ]
    proc = subprocess.run(argv, capture_output=True, text=True)
    if proc.returncode != 0:
        raise DecoderFailure(
            f"decoder exited {proc.returncode} for frame {index}: {proc.stderr.strip()[:500]}"
        )
    if not out_path.exists():
        raise DecoderFailure(f"decoder wrote no output for frame {index}")
    return out_path


def _load_image(path):
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except OSError as exc:
        raise ImageReadFailure(f"cannot read image {path}: {exc}") from exc


def extract_triplet(src, start, interval=FRAME_INTERVAL_S, resize=None,
                    decoder_template=None, source_id=None):
    """Extract three frames from a source, ``interval`` seconds apart.

    Returns three :class:`Frame` objects with PNG-encoded bytes attached.
    ``resize`` is an optional ``(width_px, height_px)`` letterbox target.
    Raises :class:`OutOfRange` when the requested span leaves the source,
    :class:`DecoderFailure` on external decoder errors, and
    :class:`AmbiguousSequence` for unordered image directories.
    """
    if start < 0.0:
        raise OutOfRange("start must be non-negative")
    if interval <= 0.0:
        raise ValueError("interval must be positive")
    if not Path(src.path).exists():
        raise OutOfRange(f"source path does not exist: {src.path}")
    end = start + 2.0 * interval
    if src.duration_s is not None and end > src.duration_s:
        raise OutOfRange(
            f"triplet ends at {end:.3f}s but source lasts {src.duration_s:.3f}s"
        )

    indices = frame_indices(src.fps, start, interval)
    images = []
    if src.kind is SourceKind.IMAGE_SEQUENCE_DIR:
        files = _sequence_files(src.path)
        duration = (len(files) - 1) / src.fps if files else 0.0
        if not files or end > duration:
            raise OutOfRange(
                f"triplet ends at {end:.3f}s but sequence lasts {duration:.3f}s"
            )
        for idx in indices:
            if idx >= len(files):
                raise OutOfRange(f"frame index {idx} beyond sequence of {len(files)}")
            images.append(_load_image(files[idx]))
    else:
        if decoder_template is None:
            raise DecoderFailure("video sources need a decoder command template")
        with tempfile.TemporaryDirectory(prefix="triplet_") as workdir:
            for idx in indices:
                out = _decode_video_frame(src, idx, decoder_template, workdir)
                images.append(_load_image(out))

    if resize is not None:
        width_px, height_px = resize
        images = [letterbox(img, width_px, height_px) for img in images]

    sid = source_id or Path(src.path).stem
    frames = []
    for k, img in enumerate(images):
        buf = io.BytesIO()
        img.save(buf, format="PNG", optimize=False)
        frames.append(
            Frame(
                index=k,
                time_offset=FRAME_INTERVAL_S * k,
                width_px=img.size[0],
                height_px=img.size[1],
                source_id=sid,
                image_bytes=buf.getvalue(),
            )
        )
    return frames


def extract_triplets(requests, max_workers=4, **kwargs):
    """Extract many triplets concurrently; order follows the request list.

    ``requests`` is a list of ``(src, start)`` pairs.  Extraction is pure
    per source, so thread-level parallelism is safe.
    """
    def _one(req):
        src, start = req
        return extract_triplet(src, start, **kwargs)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(_one, requests))


def build_manifest(observations, seed):
    """Assemble observations into a manifest with recomputed counts."""
    return DatasetManifest(list(observations), seed=seed)


def assign_splits(manifest, counts, seed):
    """Assign class-balanced splits by seeded shuffle without replacement.

    ``counts`` maps split names (train/val/test) to total sizes; each must
    be even so the halves balance exactly.  Labeled observations not drawn
    stay unassigned.  Deterministic in ``seed``.
    """
    quotas = {}
    for split in Split:
        requested = int(counts.get(split.value, 0))
        if requested % 2 != 0:
            raise OddSplitCount(
                f"split {split.value} count {requested} is odd; balanced halves need even sizes"
            )
        quotas[split] = requested // 2

    pools = {}
    for label in ConflictLabel:
        pool = sorted(o.id for o in manifest.observations if o.ground_truth is label)
        need = sum(quotas.values())
        if len(pool) < need:
            raise InsufficientClass(
                f"class {label.wire!r} has {len(pool)} observations, needs {need}"
            )
        rng = rng_for(seed, f"split:{label.wire}")
        order = list(rng.permutation(len(pool)))
        pools[label] = [pool[i] for i in order]

    assignment = {}
    for label, shuffled in pools.items():
        cursor = 0
        for split in Split:
            take = quotas[split]
            for oid in shuffled[cursor:cursor + take]:
                assignment[oid] = split
            cursor += take

    relabeled = [o.with_split(assignment.get(o.id)) for o in manifest.observations]
    return DatasetManifest(
        relabeled, seed=manifest.seed,
        imbalance_tolerance=manifest.imbalance_tolerance,
    )

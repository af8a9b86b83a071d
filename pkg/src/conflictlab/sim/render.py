"""Deterministic top-down schematic rendering of scenarios to PNG frames.

Frames are drawn fully in numpy (flat colours, pixel-centre sampling) and
encoded with Pillow, so identical scenarios produce byte-identical PNGs.
A vehicle is painted as an oriented rectangle in its class colour; parked
vehicles are grey so they read as scenery.  The camera is a square window
of ``2 * view_half`` metres centred on the intersection, uniformly scaled
into the image and padded with background when the image is not square.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from ..errors import RenderBounds
from ..model import FRAME_INTERVAL_S, Frame
from .trajectory import predict_trajectory
from .vehicles import VehicleClass

__all__ = ["render_frames", "FRAME_COUNT", "CLASS_COLORS", "PARKED_COLOR"]

FRAME_COUNT = 3

CLASS_COLORS = {
    VehicleClass.CAR: (66, 110, 228),
    VehicleClass.VAN: (26, 188, 156),
    VehicleClass.TRUCK: (142, 68, 173),
    VehicleClass.BUS: (230, 126, 34),
    VehicleClass.BIKE: (46, 204, 113),
    VehicleClass.MOTORCYCLE: (231, 76, 60),
}
PARKED_COLOR = (188, 188, 188)

_BG = (40, 108, 56)
_ROAD = (58, 58, 62)
_LANE_MARK = (235, 235, 235)
_CENTER_MARK = (214, 182, 64)


def _pixel_centers(width_px, height_px, view_half):
    """World coordinates of pixel centres; uniform scale, centred window."""
    ppm = min(width_px, height_px) / (2.0 * view_half)
    xs = (np.arange(width_px) + 0.5 - width_px / 2.0) / ppm
    ys = (height_px / 2.0 - (np.arange(height_px) + 0.5)) / ppm
    return xs[None, :], ys[:, None], ppm


def _static_layer(geometry, width_px, height_px):
    X, Y, _ = _pixel_centers(width_px, height_px, geometry.view_half)
    img = np.empty((height_px, width_px, 3), dtype=np.uint8)
    img[:] = _BG

    main_half = geometry.main_half_width()
    sub_half = geometry.sub_half_width()
    road = (np.abs(Y) <= main_half) | (np.abs(X) <= sub_half)
    img[road] = _ROAD

    lw = geometry.lane_width
    outside_cross = (np.abs(X) > sub_half) & (np.abs(Y) <= main_half)
    dashes = (np.mod(X, 6.0) < 3.0)
    for lane_y in (lw, 2.0 * lw, -lw, -2.0 * lw):
        sep = outside_cross & (np.abs(Y - lane_y) <= 0.08) & dashes
        img[sep] = _LANE_MARK
    center_main = (np.abs(Y) <= 0.15) & (np.abs(X) > sub_half)
    img[center_main] = _CENTER_MARK
    center_sub = (np.abs(X) <= 0.15) & (np.abs(Y) > main_half)
    img[center_sub] = _CENTER_MARK

    zh = geometry.zone_half
    north_bar = (Y >= -zh - 0.5) & (Y <= -zh) & (X >= 0.2) & (X <= sub_half - 0.2)
    south_bar = (Y <= zh + 0.5) & (Y >= zh) & (X <= -0.2) & (X >= -sub_half + 0.2)
    img[north_bar | south_bar] = _LANE_MARK
    return img


def _stamp_vehicle(img, X, Y, x, y, heading, half_len, half_wid, color):
    ch, sh = np.cos(heading), np.sin(heading)
    dx = X - x
    dy = Y - y
    u = dx * ch + dy * sh
    v = -dx * sh + dy * ch
    mask = (np.abs(u) <= half_len) & (np.abs(v) <= half_wid)
    img[mask] = color


def render_frames(scenario, width_px=640, height_px=640):
    """Render a scenario to three PNG frames, half a second apart.

    Returns :class:`Frame` objects carrying the encoded bytes (callers that
    persist frames to disk fill in ``image_ref`` afterwards).  Raises
    :class:`RenderBounds` if any vehicle centre leaves the camera window in
    any rendered frame.
    """
    if width_px <= 0 or height_px <= 0:
        raise ValueError("image dimensions must be positive")
    geometry = scenario.geometry
    horizon = FRAME_INTERVAL_S * (FRAME_COUNT - 1)
    poses = {}
    for v in scenario.vehicles:
        traj = predict_trajectory(v, geometry, horizon=horizon, dt=FRAME_INTERVAL_S)
        poses[v.id] = traj

    view = geometry.view_half
    for v in scenario.vehicles:
        traj = poses[v.id]
        for k in range(FRAME_COUNT):
            if abs(traj.x[k]) > view or abs(traj.y[k]) > view:
                raise RenderBounds(
                    f"vehicle {v.id} leaves the view in frame {k} "
                    f"({traj.x[k]:.1f}, {traj.y[k]:.1f})"
                )

    static = _static_layer(geometry, width_px, height_px)
    X, Y, _ = _pixel_centers(width_px, height_px, view)
    frames = []
    for k in range(FRAME_COUNT):
        img = static.copy()
        for v in scenario.vehicles:
            traj = poses[v.id]
            length, wid = v.footprint
            color = PARKED_COLOR if v.parked else CLASS_COLORS[v.vclass]
            _stamp_vehicle(
                img, X, Y,
                float(traj.x[k]), float(traj.y[k]), float(traj.heading[k]),
                length / 2.0, wid / 2.0, color,
            )
        buf = io.BytesIO()
        Image.fromarray(img, mode="RGB").save(buf, format="PNG", optimize=False)
        frames.append(
            Frame(
                index=k,
                time_offset=FRAME_INTERVAL_S * k,
                width_px=width_px,
                height_px=height_px,
                source_id=scenario.id,
                image_bytes=buf.getvalue(),
            )
        )
    return frames

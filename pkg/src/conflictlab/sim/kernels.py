"""Occupancy-grid kernels: swept oriented-rectangle rasterisation.

The conflict oracle rasterises every moving vehicle's swept footprint onto a
square grid covering the conflict zone.  A grid cell is covered iff its
centre falls inside the vehicle's oriented rectangle at any trajectory
sample.  This is the hot loop when labelling thousands of scenarios, so the
cell test runs under numba when available; a vectorised pure-numpy fallback
implements the same semantics bit for bit.

Set ``CONFLICTLAB_NUMBA=0`` to force the numpy path (useful for debugging
and for benchmarking the two implementations against each other).
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["swept_occupancy", "swept_occupancy_numpy", "using_numba", "occupancy_grid_shape"]


def _numba_enabled():
    flag = os.environ.get("CONFLICTLAB_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def occupancy_grid_shape(zone_half, cell_size):
    """Number of cells per side for a square zone grid."""
    n = int(round(2.0 * zone_half / cell_size))
    if n <= 0:
        raise ValueError("zone must span at least one grid cell")
    return n


def _swept_occupancy_loops(xs, ys, headings, half_len, half_wid,
                           zone_min, cell, n_cells, out):
    for k in range(xs.shape[0]):
        cx = xs[k]
        cy = ys[k]
        ch = math.cos(headings[k])
        sh = math.sin(headings[k])
        rx = half_len * abs(ch) + half_wid * abs(sh)
        ry = half_len * abs(sh) + half_wid * abs(ch)
        i0 = int(math.floor((cx - rx - zone_min) / cell))
        i1 = int(math.floor((cx + rx - zone_min) / cell))
        j0 = int(math.floor((cy - ry - zone_min) / cell))
        j1 = int(math.floor((cy + ry - zone_min) / cell))
        if i1 < 0 or j1 < 0 or i0 >= n_cells or j0 >= n_cells:
            continue
        i0 = max(i0, 0)
        j0 = max(j0, 0)
        i1 = min(i1, n_cells - 1)
        j1 = min(j1, n_cells - 1)
        for i in range(i0, i1 + 1):
            px = zone_min + (i + 0.5) * cell
            dx = px - cx
            for j in range(j0, j1 + 1):
                py = zone_min + (j + 0.5) * cell
                dy = py - cy
                u = dx * ch + dy * sh
                v = -dx * sh + dy * ch
                if abs(u) <= half_len and abs(v) <= half_wid:
                    out[i, j] = 1
    return out


def swept_occupancy_numpy(xs, ys, headings, half_len, half_wid,
                          zone_half, cell_size):
    """Pure-numpy swept occupancy: vectorised over cells, looped over samples."""
    n_cells = occupancy_grid_shape(zone_half, cell_size)
    zone_min = -zone_half
    out = np.zeros((n_cells, n_cells), dtype=np.uint8)
    centers = zone_min + (np.arange(n_cells) + 0.5) * cell_size
    for k in range(xs.shape[0]):
        cx = float(xs[k])
        cy = float(ys[k])
        ch = math.cos(float(headings[k]))
        sh = math.sin(float(headings[k]))
        rx = half_len * abs(ch) + half_wid * abs(sh)
        ry = half_len * abs(sh) + half_wid * abs(ch)
        i0 = int(math.floor((cx - rx - zone_min) / cell_size))
        i1 = int(math.floor((cx + rx - zone_min) / cell_size))
        j0 = int(math.floor((cy - ry - zone_min) / cell_size))
        j1 = int(math.floor((cy + ry - zone_min) / cell_size))
        if i1 < 0 or j1 < 0 or i0 >= n_cells or j0 >= n_cells:
            continue
        i0 = max(i0, 0)
        j0 = max(j0, 0)
        i1 = min(i1, n_cells - 1)
        j1 = min(j1, n_cells - 1)
        dx = centers[i0:i1 + 1, None] - cx
        dy = centers[None, j0:j1 + 1] - cy
        u = dx * ch + dy * sh
        v = -dx * sh + dy * ch
        mask = (np.abs(u) <= half_len) & (np.abs(v) <= half_wid)
        block = out[i0:i1 + 1, j0:j1 + 1]
        block[mask] = 1
    return out


if _numba_enabled():
    from numba import njit

    _swept_occupancy_jit = njit(cache=True)(_swept_occupancy_loops)

    def swept_occupancy(xs, ys, headings, half_len, half_wid, zone_half, cell_size):
        n_cells = occupancy_grid_shape(zone_half, cell_size)
        out = np.zeros((n_cells, n_cells), dtype=np.uint8)
        _swept_occupancy_jit(
            np.ascontiguousarray(xs, dtype=np.float64),
            np.ascontiguousarray(ys, dtype=np.float64),
            np.ascontiguousarray(headings, dtype=np.float64),
            float(half_len),
            float(half_wid),
            -float(zone_half),
            float(cell_size),
            n_cells,
            out,
        )
        return out

    _USING_NUMBA = True
else:
    swept_occupancy = swept_occupancy_numpy
    _USING_NUMBA = False


def using_numba():
    """Whether the jitted kernel path is active in this process."""
    return _USING_NUMBA

"""Policy observations: egocentric wrist grid, global side grid, augmentation.

Grids are rendered from smooth distance fields (full coverage inside the
drawn radius, linear falloff one cell wide), which makes the wrist view
rotation-covariant up to rasterization jitter: the invariance the policies
rely on.  Channel 0 is cable occupancy, channel 1 clip occupancy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RenderConfig
from .sim import SceneState


@dataclass
class Observation:
    wrist: np.ndarray            # (2, S, S) in the gripper frame
    side: np.ndarray | None      # (2, S2, S2) in the world frame, high level only
    z: float                     # gripper height relative to the reset pose


def _cell_centers(size: int, window: float) -> np.ndarray:
    step = window / size
    axis = -window / 2 + step * (np.arange(size) + 0.5)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)   # row-major (x, y)


def _dist_to_segments(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = np.maximum((ab * ab).sum(axis=1), 1e-18)
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip((ap * ab[None, :, :]).sum(axis=2) / denom[None, :], 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.linalg.norm(pts[:, None, :] - proj, axis=2)
    return d.min(axis=1)


def _dist_to_rects(pts: np.ndarray, rects: np.ndarray) -> np.ndarray:
    """Distance outside oriented boxes (0 inside), min over boxes."""
    if rects.shape[0] == 0:
        return np.full(pts.shape[0], np.inf)
    rel = pts[:, None, :] - rects[None, :, 0:2]
    c, s = rects[:, 2], rects[:, 3]
    lx = rel[:, :, 0] * c + rel[:, :, 1] * s
    ly = -rel[:, :, 0] * s + rel[:, :, 1] * c
    dx = np.maximum(np.abs(lx) - rects[None, :, 4], 0.0)
    dy = np.maximum(np.abs(ly) - rects[None, :, 5], 0.0)
    return np.hypot(dx, dy).min(axis=1)


def _coverage(dist: np.ndarray, draw_r: float, falloff: float) -> np.ndarray:
    return np.clip((draw_r + falloff - dist) / falloff, 0.0, 1.0)


def render_wrist(scene: SceneState, rc: RenderConfig | None = None) -> np.ndarray:
    """Cable + clip channels in a window centered on and rotated with the gripper."""
    rc = rc or RenderConfig()
    g = scene.gripper
    cell = rc.wrist_window / rc.wrist_size
    local = _cell_centers(rc.wrist_size, rc.wrist_window)
    cy, sy = math.cos(g.yaw), math.sin(g.yaw)
    world = np.empty_like(local)
    world[:, 0] = g.x + cy * local[:, 0] - sy * local[:, 1]
    world[:, 1] = g.y + sy * local[:, 0] + cy * local[:, 1]

    draw_r = max(scene.cfg.cable_radius, 0.75 * cell)
    fall = rc.falloff_cells * cell
    # only segments that can reach the window matter
    reach = rc.wrist_window * 0.75 + draw_r + fall
    a, b = scene.nodes[:-1], scene.nodes[1:]
    keep = (np.minimum(np.abs(a - scene.gripper.xy()),
                       np.abs(b - scene.gripper.xy())) < reach).all(axis=1)
    if keep.any():
        d_cable = _dist_to_segments(world, a[keep], b[keep])
    else:
        d_cable = np.full(world.shape[0], np.inf)
    cable = _coverage(d_cable, draw_r, fall)
    d_clip = _dist_to_rects(world, scene.all_wall_rects())
    clip = _coverage(d_clip, 0.0, fall)
    size = rc.wrist_size
    return np.stack([cable.reshape(size, size), clip.reshape(size, size)])


def render_side(scene: SceneState, rc: RenderConfig | None = None) -> np.ndarray:
    """Whole-workspace view; the gripper footprint joins the clip channel."""
    rc = rc or RenderConfig()
    cell = scene.cfg.workspace / rc.side_size
    pts = _cell_centers(rc.side_size, scene.cfg.workspace) + scene.cfg.workspace / 2

    draw_r = max(scene.cfg.cable_radius, 0.75 * cell)
    fall = rc.falloff_cells * cell
    cable = _coverage(_dist_to_segments(pts, scene.nodes[:-1], scene.nodes[1:]),
                      draw_r, fall)
    clip = _coverage(_dist_to_rects(pts, scene.all_wall_rects()), 0.0, fall)
    d_grip = np.linalg.norm(pts - scene.gripper.xy(), axis=1)
    grip = _coverage(d_grip, rc.gripper_footprint, fall)
    clip = np.maximum(clip, grip)
    size = rc.side_size
    return np.stack([cable.reshape(size, size), clip.reshape(size, size)])


def observe(scene: SceneState, rc: RenderConfig | None = None,
            include_side: bool = False) -> Observation:
    g = scene.gripper
    return Observation(
        wrist=render_wrist(scene, rc),
        side=render_side(scene, rc) if include_side else None,
        z=g.z - g.reset[2])


# ---------------------------------------------------------------------------
# training-time augmentation: 2 of 5 transforms, one global strength knob


def _shift(grid: np.ndarray, dx: int, dy: int) -> np.ndarray:
    out = np.zeros_like(grid)
    s = grid.shape[1]
    x0, x1 = max(dx, 0), min(s + dx, s)
    y0, y1 = max(dy, 0), min(s + dy, s)
    out[:, x0:x1, y0:y1] = grid[:, x0 - dx:x1 - dx, y0 - dy:y1 - dy]
    return out


def _rotate(grid: np.ndarray, angle: float) -> np.ndarray:
    """Bilinear rotation about the grid center, zero fill outside."""
    s = grid.shape[1]
    c = (s - 1) / 2.0
    ii, jj = np.meshgrid(np.arange(s), np.arange(s), indexing="ij")
    ca, sa = math.cos(angle), math.sin(angle)
    x = ca * (ii - c) + sa * (jj - c) + c
    y = -sa * (ii - c) + ca * (jj - c) + c
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    fx, fy = x - x0, y - y0
    out = np.zeros_like(grid)
    for ox, oy, w in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)),
                      (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
        xi, yi = x0 + ox, y0 + oy
        ok = (xi >= 0) & (xi < s) & (yi >= 0) & (yi < s)
        xi_c = np.clip(xi, 0, s - 1)
        yi_c = np.clip(yi, 0, s - 1)
        for ch in range(grid.shape[0]):
            out[ch] += np.where(ok, w * grid[ch, xi_c, yi_c], 0.0)
    return out


def _augment_grid(grid: np.ndarray, rng: np.random.Generator,
                  n_ops: int, strength: int) -> np.ndarray:
    s = grid.shape[1]
    out = grid.copy()
    ops = rng.integers(0, 5, size=n_ops)
    for op in ops:
        if op == 0:        # translate jitter, +/-2 cells at strength 9
            m = int(round(2.0 * strength / 9.0))
            dx, dy = rng.integers(-m, m + 1, size=2)
            out = _shift(out, int(dx), int(dy))
        elif op == 1:      # rotate jitter, +/-5 deg at strength 9
            mx = math.radians(5.0 * strength / 9.0)
            out = _rotate(out, float(rng.uniform(-mx, mx)))
        elif op == 2:      # pixel noise
            sigma = 0.25 * strength / 30.0
            out = out + sigma * rng.standard_normal(out.shape)
        elif op == 3:      # cutout square, side = strength/30 of the grid
            side = int(round(s * strength / 30.0))
            if side > 0:
                x0 = int(rng.integers(0, s - side + 1))
                y0 = int(rng.integers(0, s - side + 1))
                out[:, x0:x0 + side, y0:y0 + side] = 0.0
        else:              # intensity scale
            f = 1.0 + float(rng.uniform(-1.0, 1.0)) * 0.5 * strength / 30.0
            out = out * f
        out = np.clip(out, 0.0, 1.0)
    return out


def augment(obs: Observation, rng: np.random.Generator,
            n_ops: int = 2, strength: int = 9) -> Observation:
    """RandAugment-style: per grid, n_ops transforms drawn uniformly (with
    replacement) from a 5-op pool, magnitudes scaled by strength/30."""
    wrist = _augment_grid(obs.wrist, rng, n_ops, strength)
    side = None if obs.side is None else _augment_grid(obs.side, rng, n_ops, strength)
    return Observation(wrist=wrist, side=side, z=obs.z)

"""Deterministic quasi-static 2D cable/clip world.

The table is a 1 m square seen top-down.  A cable (chain of nodes, one end
pinned) is relaxed after every gripper step by position-based constraint
projection: consecutive-node distance, a soft second-neighbor separation
that limits bend radius, wall push-out, and pin constraints.  The gripper
is a point at (x, y, z, yaw) actuated by 4-D twists at 5 Hz; below
``z_clear`` it engages the table plane and collides with clip walls, above
it travels freely and lifts the nearby cable with it.

Clip local frame: the channel runs along local +x ("passage direction"),
the mouth faces -x, and two walls flank the channel at local +/-y.  A clip
counts as routed when a node sits inside the interior retention rectangle
and its neighbors extend past the clip's center plane on opposite ends of
the channel, i.e. the cable passes through rather than touches.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .config import SimConfig
from .geometry import Pose, Twist4, wrap_angle, world_velocity


class InvalidClipCount(ValueError):
    pass


class InvalidClipIndex(IndexError):
    pass


class Terminated(RuntimeError):
    pass


@dataclass(frozen=True)
class ClipSpec:
    center: tuple          # (x, y)
    yaw: float             # radians, [0, 2pi)
    slot_width: float
    wall_length: float
    wall_thickness: float

    def axes(self):
        """(passage unit vector u, lateral unit vector n)."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([c, s]), np.array([-s, c])

    def to_local(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        u, n = self.axes()
        d = pts - np.asarray(self.center)
        return np.stack([d @ u, d @ n], axis=-1)

    def to_world(self, local) -> np.ndarray:
        u, n = self.axes()
        local = np.asarray(local, dtype=np.float64)
        return np.asarray(self.center) + local[..., :1] * u + local[..., 1:] * n

    def wall_rects(self, inflate: float = 0.0) -> np.ndarray:
        """Two (cx, cy, cos, sin, hx, hy) rows, half-extents inflated."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        off = 0.5 * self.slot_width + 0.5 * self.wall_thickness
        hx = 0.5 * self.wall_length + inflate
        hy = 0.5 * self.wall_thickness + inflate
        rows = []
        for sign in (1.0, -1.0):
            cx = self.center[0] - s * sign * off
            cy = self.center[1] + c * sign * off
            rows.append((cx, cy, c, s, hx, hy))
        return np.array(rows)

    def mouth_point(self, dist: float) -> np.ndarray:
        """World point `dist` in front of the channel entrance."""
        u, _ = self.axes()
        return np.asarray(self.center) - (0.5 * self.wall_length + dist) * u


@dataclass
class GripperState:
    x: float
    y: float
    z: float
    yaw: float
    closed: bool = False
    grasped_node: int | None = None
    reset: tuple = (0.0, 0.0, 0.0, 0.0)   # (x, y, z, yaw) at episode/primitive start

    @property
    def pose(self) -> Pose:
        return Pose.planar(self.x, self.y, self.yaw, self.z)

    @property
    def reset_pose(self) -> Pose:
        rx, ry, rz, ryaw = self.reset
        return Pose.planar(rx, ry, ryaw, rz)

    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def mark_reset(self):
        self.reset = (self.x, self.y, self.z, self.yaw)


@dataclass
class SceneState:
    cfg: SimConfig
    nodes: np.ndarray              # (N, 2)
    marker_spans: list             # per clip (lo, hi) inclusive node range
    clips: list
    gripper: GripperState
    current_clip: int
    rng: np.random.Generator
    time_step: int
    seed: int
    fixed_index: int = 0

    @property
    def terminated(self) -> bool:
        return self.current_clip >= len(self.clips)

    def copy(self) -> "SceneState":
        g = self.gripper
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return SceneState(
            cfg=self.cfg, nodes=self.nodes.copy(),
            marker_spans=list(self.marker_spans), clips=list(self.clips),
            gripper=GripperState(g.x, g.y, g.z, g.yaw, g.closed, g.grasped_node, g.reset),
            current_clip=self.current_clip, rng=rng,
            time_step=self.time_step, seed=self.seed, fixed_index=self.fixed_index)

    def marker_center(self, clip_index: int) -> int:
        lo, hi = self.marker_spans[clip_index]
        return (lo + hi) // 2

    def all_wall_rects(self, inflate: float = 0.0) -> np.ndarray:
        if not self.clips:
            return np.zeros((0, 6))
        return np.concatenate([c.wall_rects(inflate) for c in self.clips], axis=0)


# ---------------------------------------------------------------------------
# constraint relaxation


@njit(cache=True)
def _relax_kernel(nodes, fixed_idx, fixed_pos, grasp_idx, grasp_pos,
                  rest, bend_limit, beta, iters, rects, collide):
    n = nodes.shape[0]
    for it in range(iters):
        # pins
        nodes[fixed_idx, 0] = fixed_pos[0]
        nodes[fixed_idx, 1] = fixed_pos[1]
        if grasp_idx >= 0:
            nodes[grasp_idx, 0] = grasp_pos[0]
            nodes[grasp_idx, 1] = grasp_pos[1]
        # long-range attachment near the pins: nodes within the window may
        # not sit farther from the pin than their arc length allows, which
        # pulls a dragged taut section along instead of stretching it.
        # Windowed because straight-line distance overestimates tautness
        # once the cable wraps around clip walls.
        for pin in (fixed_idx, grasp_idx):
            if pin < 0:
                continue
            px = nodes[pin, 0]
            py = nodes[pin, 1]
            lo = pin - 14 if pin - 14 > 0 else 0
            hi = pin + 15 if pin + 15 < n else n
            for i in range(lo, hi):
                if i == pin or i == fixed_idx or i == grasp_idx:
                    continue
                lim = rest * abs(i - pin)
                dx = nodes[i, 0] - px
                dy = nodes[i, 1] - py
                d = math.sqrt(dx * dx + dy * dy)
                if d > lim:
                    f = lim / d
                    nodes[i, 0] = px + dx * f
                    nodes[i, 1] = py + dy * f
        # soft bend limit: second neighbors kept apart.  The cable may fold
        # tightly around a pin (fingers, table anchor), and the last sweeps
        # run distance-only so exit distances are exact.
        bend_on = it < iters - 2
        for i in range(n - 2):
            if not bend_on:
                break
            if i + 1 == fixed_idx or i + 1 == grasp_idx:
                continue
            w0 = 0.0 if (i == fixed_idx or i == grasp_idx) else 1.0
            w2 = 0.0 if (i + 2 == fixed_idx or i + 2 == grasp_idx) else 1.0
            ws = w0 + w2
            if ws == 0.0:
                continue
            dx = nodes[i + 2, 0] - nodes[i, 0]
            dy = nodes[i + 2, 1] - nodes[i, 1]
            d = math.sqrt(dx * dx + dy * dy)
            if d < 1e-12 or d >= bend_limit:
                continue
            corr = beta * (d - bend_limit) / d
            nodes[i, 0] += (w0 / ws) * dx * corr
            nodes[i, 1] += (w0 / ws) * dy * corr
            nodes[i + 2, 0] -= (w2 / ws) * dx * corr
            nodes[i + 2, 1] -= (w2 / ws) * dy * corr
        # inextensibility: fixed sweep order, ascending then descending, so
        # corrections propagate both ways along the chain each iteration
        for sweep in range(2):
            for k in range(n - 1):
                i = k if sweep == 0 else n - 2 - k
                w0 = 0.0 if (i == fixed_idx or i == grasp_idx) else 1.0
                w1 = 0.0 if (i + 1 == fixed_idx or i + 1 == grasp_idx) else 1.0
                ws = w0 + w1
                if ws == 0.0:
                    continue
                dx = nodes[i + 1, 0] - nodes[i, 0]
                dy = nodes[i + 1, 1] - nodes[i, 1]
                d = math.sqrt(dx * dx + dy * dy)
                if d < 1e-12:
                    dx, dy, d = 1e-9, 0.0, 1e-9
                corr = (d - rest) / d
                nodes[i, 0] += (w0 / ws) * dx * corr
                nodes[i, 1] += (w0 / ws) * dy * corr
                nodes[i + 1, 0] -= (w1 / ws) * dx * corr
                nodes[i + 1, 1] -= (w1 / ws) * dy * corr
        # wall push-out
        for i in range(n):
            if not collide[i] or i == fixed_idx or i == grasp_idx:
                continue
            x = nodes[i, 0]
            y = nodes[i, 1]
            for m in range(rects.shape[0]):
                rx = x - rects[m, 0]
                ry = y - rects[m, 1]
                c = rects[m, 2]
                s = rects[m, 3]
                lx = c * rx + s * ry
                ly = -s * rx + c * ry
                px = rects[m, 4] - abs(lx)
                py = rects[m, 5] - abs(ly)
                if px > 0.0 and py > 0.0:
                    if px < py:
                        lx = rects[m, 4] if lx >= 0.0 else -rects[m, 4]
                    else:
                        ly = rects[m, 5] if ly >= 0.0 else -rects[m, 5]
                    x = rects[m, 0] + c * lx - s * ly
                    y = rects[m, 1] + s * lx + c * ly
            nodes[i, 0] = x
            nodes[i, 1] = y
        # re-pin
        nodes[fixed_idx, 0] = fixed_pos[0]
        nodes[fixed_idx, 1] = fixed_pos[1]
        if grasp_idx >= 0:
            nodes[grasp_idx, 0] = grasp_pos[0]
            nodes[grasp_idx, 1] = grasp_pos[1]


def _collide_mask(scene: SceneState) -> np.ndarray:
    cfg = scene.cfg
    g = scene.gripper
    mask = np.ones(scene.nodes.shape[0], dtype=np.bool_)
    if g.grasped_node is not None and g.z >= cfg.z_clear:
        d = np.linalg.norm(scene.nodes - g.xy(), axis=1)
        mask[d <= cfg.lift_radius] = False
    return mask


def relax(scene: SceneState) -> SceneState:
    """Project the cable onto its constraint set (returns a new scene)."""
    s = scene.copy()
    _relax_inplace(s)
    return s


def _relax_inplace(s: SceneState):
    cfg = s.cfg
    g = s.gripper
    grasp_idx = -1 if g.grasped_node is None else int(g.grasped_node)
    grasp_pos = g.xy() if grasp_idx >= 0 else np.zeros(2)
    rects = s.all_wall_rects(inflate=cfg.cable_radius)
    _relax_kernel(s.nodes, s.fixed_index, np.asarray(cfg.fixed_end, dtype=np.float64),
                  grasp_idx, grasp_pos, cfg.rest_length, cfg.bend_limit,
                  cfg.bend_stiffness, cfg.relax_iters, rects, _collide_mask(s))


def max_stretch(scene: SceneState) -> float:
    d = np.linalg.norm(np.diff(scene.nodes, axis=0), axis=1)
    return float(np.max(np.abs(d - scene.cfg.rest_length)) / scene.cfg.rest_length)


def _grasp_strain(scene: SceneState) -> float:
    """Stretch of the edges adjacent to the grasped node (slip criterion)."""
    g = scene.gripper.grasped_node
    if g is None:
        return 0.0
    worst = 0.0
    for i, j in ((g - 1, g), (g, g + 1)):
        if 0 <= i and j < scene.nodes.shape[0]:
            d = float(np.linalg.norm(scene.nodes[j] - scene.nodes[i]))
            worst = max(worst, d / scene.cfg.rest_length - 1.0)
    return worst


# ---------------------------------------------------------------------------
# stepping


def _nodes_in_rects(nodes: np.ndarray, rects: np.ndarray) -> bool:
    for rect in rects:
        rel = nodes - rect[0:2]
        lx = rel[:, 0] * rect[2] + rel[:, 1] * rect[3]
        ly = -rel[:, 0] * rect[3] + rel[:, 1] * rect[2]
        if np.any((np.abs(lx) < rect[4]) & (np.abs(ly) < rect[5])):
            return True
    return False


def _point_in_rect(x: float, y: float, rect) -> bool:
    rx, ry = x - rect[0], y - rect[1]
    lx = rect[2] * rx + rect[3] * ry
    ly = -rect[3] * rx + rect[2] * ry
    return abs(lx) < rect[4] and abs(ly) < rect[5]


def _project_point_out(x: float, y: float, rects: np.ndarray):
    for rect in rects:
        rx, ry = x - rect[0], y - rect[1]
        lx = rect[2] * rx + rect[3] * ry
        ly = -rect[3] * rx + rect[2] * ry
        px = rect[4] - abs(lx)
        py = rect[5] - abs(ly)
        if px > 0 and py > 0:
            if px < py:
                lx = rect[4] if lx >= 0 else -rect[4]
            else:
                ly = rect[5] if ly >= 0 else -rect[5]
            x = rect[0] + rect[2] * lx - rect[3] * ly
            y = rect[1] + rect[3] * lx + rect[2] * ly
    return x, y


def step(scene: SceneState, action: Twist4, noise_sigma: float | None = None) -> SceneState:
    """Advance one control tick: integrate gripper, settle cable.

    `action` is a body twist in the gripper frame; actuation noise is added
    per component from the scene's own generator so trajectories replay
    bitwise from (seed, action stream).
    """
    if scene.terminated:
        raise Terminated("episode already advanced past the last clip")
    cfg = scene.cfg
    sigma = cfg.noise_sigma if noise_sigma is None else noise_sigma
    s = scene.copy()
    g = s.gripper

    eps = s.rng.normal(0.0, 1.0, size=4)
    cmd = action.clamped(cfg.v_max, cfg.wz_max).as_array() + sigma * eps
    body = Twist4.from_array(cmd)
    pdot, yaw_rate = world_velocity(g.pose, body)

    z_old = g.z
    nx = g.x + cfg.dt * pdot[0]
    ny = g.y + cfg.dt * pdot[1]
    nz = g.z + cfg.dt * pdot[2]
    nyaw = wrap_angle(g.yaw + cfg.dt * yaw_rate)

    margin = 0.01
    nx = min(max(nx, margin), cfg.workspace - margin)
    ny = min(max(ny, margin), cfg.workspace - margin)
    nz = min(max(nz, 0.0), cfg.z_max)

    rects = s.all_wall_rects(inflate=cfg.gripper_radius)
    inside = any(_point_in_rect(nx, ny, r) for r in rects)
    if inside:
        if z_old >= cfg.z_clear:
            nz = max(nz, cfg.z_clear)        # hovers on top of the wall
        else:
            nx, ny = _project_point_out(nx, ny, rects)   # blocked laterally

    g.x, g.y, g.z, g.yaw = nx, ny, nz, nyaw
    if g.grasped_node is not None:
        s.nodes[g.grasped_node] = (nx, ny)
    _relax_inplace(s)
    if g.grasped_node is not None and _grasp_strain(s) > cfg.slip_stretch - 1.0:
        g.grasped_node = None                # cable slips out of the fingers
        _relax_inplace(s)
    s.time_step += 1
    return s


def grasp(scene: SceneState) -> SceneState:
    """Close the gripper, binding the nearest reachable node (ties: lower index)."""
    assert not scene.gripper.closed, "grasp requires an open gripper"
    s = scene.copy()
    g = s.gripper
    g.closed = True
    if g.z <= s.cfg.z_grasp:
        d = np.linalg.norm(s.nodes - g.xy(), axis=1)
        i = int(np.argmin(d))
        if d[i] <= s.cfg.grasp_radius:
            g.grasped_node = i
            s.nodes[i] = (g.x, g.y)
            _relax_inplace(s)
    return s


def release(scene: SceneState) -> SceneState:
    assert scene.gripper.closed, "release requires a closed gripper"
    s = scene.copy()
    s.gripper.closed = False
    s.gripper.grasped_node = None
    _relax_inplace(s)
    return s


# ---------------------------------------------------------------------------
# routing predicates


def clip_routed(scene: SceneState, clip_index: int) -> bool:
    """Some node in the retention rect with neighbors straddling the center plane."""
    if not 0 <= clip_index < len(scene.clips):
        raise InvalidClipIndex(clip_index)
    clip = scene.clips[clip_index]
    cfg = scene.cfg
    local = clip.to_local(scene.nodes)
    inside = (np.abs(local[:, 0]) <= cfg.retention_half) & \
             (np.abs(local[:, 1]) <= 0.5 * clip.slot_width)
    for k in range(1, len(local) - 1):
        if inside[k] and local[k - 1, 0] * local[k + 1, 0] < 0.0:
            return True
    return False


def is_behind_clip(scene: SceneState, clip_index: int) -> bool:
    """Cable crosses the clip's center plane outside the slot (wall-side miss)."""
    if not 0 <= clip_index < len(scene.clips):
        raise InvalidClipIndex(clip_index)
    if clip_routed(scene, clip_index):
        return False
    clip = scene.clips[clip_index]
    local = clip.to_local(scene.nodes)
    near = 0.5 * clip.slot_width
    far = near + clip.wall_thickness + 0.025
    x = local[:, 0]
    for k in range(len(local) - 1):
        if x[k] * x[k + 1] < 0.0:
            t = x[k] / (x[k] - x[k + 1])
            ycross = local[k, 1] + t * (local[k + 1, 1] - local[k, 1])
            if near < abs(ycross) <= far:
                return True
    return False


# ---------------------------------------------------------------------------
# scene construction


def _sample_clips(rng: np.random.Generator, n_clips: int, cfg: SimConfig) -> list:
    clips = []
    for i in range(n_clips):
        xmin, ymin, xmax, ymax = cfg.region_box(i)
        x = rng.uniform(xmin, xmax)
        y = rng.uniform(ymin, ymax)
        yaw = rng.uniform(0.0, math.radians(cfg.clip_yaw_max_deg))
        clips.append(ClipSpec((x, y), yaw, cfg.slot_width, cfg.wall_length,
                              cfg.wall_thickness))
    return clips


def _marker_spans(clips: list, cfg: SimConfig) -> list:
    """Node index spans standing in for the colored cable segments.

    The span for clip i sits at the arc length needed to reach clip i's
    exit through every earlier clip, with slack and a holding tail.
    """
    spans = []
    prev = np.asarray(cfg.fixed_end)
    arc = 0.0
    prev_center = None
    for i, clip in enumerate(clips):
        c = np.asarray(clip.center)
        arc += cfg.chain_slack * float(np.linalg.norm(c - prev))
        arc_i = arc + 0.5 * clip.wall_length + cfg.marker_tail + i * 0.02
        center = int(round(arc_i / cfg.rest_length))
        if prev_center is not None:
            center = max(center, prev_center + 2 * cfg.marker_halfwidth + 2)
        center = min(center, cfg.n_nodes - cfg.marker_halfwidth - 2)
        center = max(center, cfg.marker_halfwidth + 1)
        spans.append((center - cfg.marker_halfwidth, center + cfg.marker_halfwidth))
        prev_center = center
        prev = c
    return spans


def _lay_waypoints(rng: np.random.Generator, waypoints: list, cfg: SimConfig) -> np.ndarray:
    """Place nodes at uniform arc steps along a waypoint polyline.

    Continues past the last waypoint with a gently curving seeded tail if
    the polyline is shorter than the cable.
    """
    pts = [np.asarray(w, dtype=np.float64) for w in waypoints]
    nodes = [pts[0].copy()]
    seg = 0
    pos = pts[0].copy()
    heading = None
    while len(nodes) < cfg.n_nodes and seg < len(pts) - 1:
        remaining = cfg.rest_length
        while seg < len(pts) - 1:
            d = pts[seg + 1] - pos
            dist = float(np.linalg.norm(d))
            if dist >= remaining:
                pos = pos + d / dist * remaining
                heading = math.atan2(d[1], d[0])
                break
            pos = pts[seg + 1].copy()
            if dist > 1e-12:
                heading = math.atan2(d[1], d[0])
            remaining -= dist
            seg += 1
        else:
            break
        nodes.append(pos.copy())
    if heading is None:
        heading = 0.0
    kappa = float(rng.uniform(-0.25, 0.25))
    while len(nodes) < cfg.n_nodes:
        kappa = 0.7 * kappa + 0.3 * rng.uniform(-0.35, 0.35)
        heading = _steer_inside(pos, heading + kappa, cfg)
        pos = pos + cfg.rest_length * np.array([math.cos(heading), math.sin(heading)])
        nodes.append(pos.copy())
    return np.array(nodes[:cfg.n_nodes])


def _steer_inside(pos: np.ndarray, heading: float, cfg: SimConfig,
                  margin: float = 0.06) -> float:
    """Bend a drape heading back toward the table center near the boundary."""
    lo, hi = margin, cfg.workspace - margin
    if lo < pos[0] < hi and lo < pos[1] < hi:
        return heading
    to_center = math.atan2(cfg.workspace / 2 - pos[1], cfg.workspace / 2 - pos[0])
    delta = wrap_angle(to_center - heading)
    return heading + 0.5 * delta


def _random_drape(rng: np.random.Generator, cfg: SimConfig) -> np.ndarray:
    """Gentle seeded curve heading right from the pinned end."""
    nodes = [np.asarray(cfg.fixed_end, dtype=np.float64)]
    heading = rng.uniform(-0.35, 0.35)
    kappa = 0.0
    pos = nodes[0].copy()
    for _ in range(cfg.n_nodes - 1):
        kappa = 0.8 * kappa + 0.2 * rng.uniform(-0.25, 0.25)
        heading = _steer_inside(pos, 0.97 * heading + kappa * 0.15, cfg)
        pos = pos + cfg.rest_length * np.array([math.cos(heading), math.sin(heading)])
        nodes.append(pos.copy())
    return np.array(nodes)


def _biased_drape(rng: np.random.Generator, cfg: SimConfig, clip: ClipSpec,
                  marker_center: int, bias: str) -> np.ndarray:
    """Cable layout whose section near the marker curves toward or away
    from the slot mouth (the easy/hard distinction)."""
    u, n = clip.axes()
    center = np.asarray(clip.center)
    side = 1.0 if rng.uniform() < 0.5 else -1.0
    mouth = center - (0.5 * clip.wall_length + 0.02) * u
    marker_arc = marker_center * cfg.rest_length
    fixed = np.asarray(cfg.fixed_end)
    if bias == "easy":
        # feed line runs straight in front of the mouth along the channel
        approach = [mouth - 0.16 * u + side * 0.03 * n, mouth - 0.08 * u, mouth]
        tail = [mouth + side * -0.05 * n - 0.02 * u,
                mouth + side * -0.12 * n - 0.06 * u]
    elif bias == "hard":
        # come in from the side: near the grasp the cable runs across the channel
        approach = [mouth - 0.12 * u + side * 0.14 * n,
                    mouth - 0.045 * u + side * 0.12 * n,
                    mouth - 0.035 * u + side * 0.05 * n, mouth]
        tail = [mouth + side * -0.06 * n + 0.01 * u,
                mouth + side * -0.13 * n + 0.03 * u]
    else:
        raise ValueError(f"unknown bias {bias}")
    # spend surplus arc between the fixed end and the approach with a detour
    detour_len = marker_arc - sum(
        float(np.linalg.norm(np.asarray(b) - np.asarray(a)))
        for a, b in zip([approach[0]] + approach[:-1], approach))
    direct = float(np.linalg.norm(approach[0] - fixed))
    mid = 0.5 * (fixed + approach[0])
    perp = np.array([-(approach[0] - fixed)[1], (approach[0] - fixed)[0]])
    perp /= max(float(np.linalg.norm(perp)), 1e-9)
    bump = 0.0
    if detour_len > direct:
        # circular-ish arc: bump height for extra length (shallow approx)
        extra = max(detour_len - direct, 0.0)
        bump = min(math.sqrt(max(extra * direct, 0.0)) * 0.8, 0.22)
    way = [fixed, mid + bump * perp] + approach + tail
    return _lay_waypoints(rng, way, cfg)


def sample_scene(seed: int, n_clips: int, cfg: SimConfig | None = None,
                 bias: str = "random", clip_overrides: list | None = None) -> SceneState:
    """Seeded scene: clips in their regions, cable draped flat, gripper parked.

    `bias` selects the cable layout: "random" (arbitrary gentle curve) or
    "easy"/"hard" single-clip evaluation shapes. `clip_overrides` replaces
    region sampling with explicit (x, y, yaw) triples for OOD layouts.
    """
    cfg = cfg or SimConfig()
    if clip_overrides is None and not 1 <= n_clips <= 4:
        raise InvalidClipCount(n_clips)
    rng = np.random.default_rng(seed)
    if clip_overrides is not None:
        clips = [ClipSpec((float(x), float(y)), wrap_angle(float(yaw)) % (2 * math.pi),
                          cfg.slot_width, cfg.wall_length, cfg.wall_thickness)
                 for x, y, yaw in clip_overrides]
    else:
        clips = _sample_clips(rng, n_clips, cfg)
    spans = _marker_spans(clips, cfg)
    rects = np.concatenate([c.wall_rects(cfg.cable_radius) for c in clips], axis=0)
    nodes = None
    for _ in range(20):   # redraw drapes that land inside clip walls
        if bias == "random":
            cand = _random_drape(rng, cfg)
        else:
            cand = _biased_drape(rng, cfg, clips[0], (spans[0][0] + spans[0][1]) // 2, bias)
        nodes = cand
        if not _nodes_in_rects(cand, rects):
            break
    gripper = GripperState(x=0.18, y=0.18, z=cfg.z_stage, yaw=0.0)
    gripper.mark_reset()
    scene = SceneState(cfg=cfg, nodes=nodes, marker_spans=spans, clips=clips,
                       gripper=gripper, current_clip=0, rng=rng, time_step=0,
                       seed=int(seed))
    for _ in range(5):   # initial settle
        _relax_inplace(scene)
    return scene


# ---------------------------------------------------------------------------
# snapshot serialization (documented field order; superset of the wire schema)


def scene_to_snapshot(scene: SceneState) -> dict:
    g = scene.gripper
    rng_state = scene.rng.bit_generator.state
    return {
        "nodes": [[float(x), float(y)] for x, y in scene.nodes],
        "clips": [{"center": [float(c.center[0]), float(c.center[1])],
                   "yaw": float(c.yaw), "slot_width": c.slot_width,
                   "wall_length": c.wall_length, "wall_thickness": c.wall_thickness}
                  for c in scene.clips],
        "gripper": {"x": g.x, "y": g.y, "z": g.z, "yaw": g.yaw,
                    "closed": g.closed, "grasped_node": g.grasped_node,
                    "reset": list(g.reset)},
        "current_clip": scene.current_clip,
        "time_step": scene.time_step,
        "seed": scene.seed,
        "marker_spans": [list(s) for s in scene.marker_spans],
        "rng_state": {"state": str(rng_state["state"]["state"]),
                      "inc": str(rng_state["state"]["inc"]),
                      "has_uint32": rng_state["has_uint32"],
                      "uinteger": rng_state["uinteger"]},
    }


def snapshot_to_scene(snap: dict, cfg: SimConfig) -> SceneState:
    clips = [ClipSpec((c["center"][0], c["center"][1]), c["yaw"], c["slot_width"],
                      c["wall_length"], c["wall_thickness"]) for c in snap["clips"]]
    gd = snap["gripper"]
    gripper = GripperState(gd["x"], gd["y"], gd["z"], gd["yaw"], gd["closed"],
                           gd["grasped_node"],
                           tuple(gd["reset"]))
    rng = np.random.default_rng(0)
    st = rng.bit_generator.state
    st["state"]["state"] = int(snap["rng_state"]["state"])
    st["state"]["inc"] = int(snap["rng_state"]["inc"])
    st["has_uint32"] = snap["rng_state"]["has_uint32"]
    st["uinteger"] = snap["rng_state"]["uinteger"]
    rng.bit_generator.state = st
    return SceneState(cfg=cfg, nodes=np.array(snap["nodes"], dtype=np.float64),
                      marker_spans=[tuple(s) for s in snap["marker_spans"]],
                      clips=clips, gripper=gripper,
                      current_clip=snap["current_clip"], rng=rng,
                      time_step=snap["time_step"], seed=snap["seed"])


def snapshot_json(scene: SceneState) -> str:
    return json.dumps(scene_to_snapshot(scene), separators=(",", ":"))

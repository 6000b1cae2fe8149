"""The four executable primitives the high-level policy selects among.

Every primitive actuates the simulator exclusively through twist steps
plus grasp/release events, so executions are replayable and their motion
can be re-expressed as flat-policy training data.  Grasp failures are
ordinary outcomes, not exceptions: the high-level policy is supposed to
observe and recover from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sim
from .geometry import Twist4, body_twist_from_world, wrap_angle
from .policy import GO_NEXT, PERTURB, PICKUP, ROUTE
from .perception import observe


class NotHolding(RuntimeError):
    pass


@dataclass
class PrimitiveOutcome:
    primitive_id: int
    steps_taken: int
    scene: sim.SceneState
    route_success: bool | None = None
    error: str | None = None            # "grasp_failed" and friends
    steps: list = field(default_factory=list)       # optional low-level records
    shadow: list = field(default_factory=list)      # light snapshots for relabeling


class _Recorder:
    def __init__(self, record: bool):
        self.record = record
        self.steps = []
        self.shadow = []

    def add(self, scene, action: Twist4):
        snap = sim.scene_to_snapshot(scene)
        self.shadow.append(snap)
        if self.record:
            self.steps.append({"snapshot": snap,
                               "action": [float(v) for v in action.as_array()],
                               "grip": 1.0 if scene.gripper.closed else -1.0})


def _servo_step(scene, target_xy, target_z, target_yaw, cfg, kp=3.0, kz=4.0,
                kyaw=3.0, speed=0.9):
    """One proportional servo tick toward a world-frame target."""
    g = scene.gripper
    err = np.asarray(target_xy) - g.xy()
    v = np.clip(kp * err, -speed * cfg.v_max, speed * cfg.v_max)
    vz = float(np.clip(kz * (target_z - g.z), -speed * cfg.v_max, speed * cfg.v_max))
    wz = 0.0
    if target_yaw is not None:
        wz = float(np.clip(kyaw * wrap_angle(target_yaw - g.yaw),
                           -speed * cfg.wz_max, speed * cfg.wz_max))
    return body_twist_from_world(g.pose, np.array([v[0], v[1], vz]), wz)


def _servo_to(scene, rec: _Recorder, target_xy, target_z, target_yaw=None,
              tol=0.006, z_tol=0.005, max_steps=50, track=None):
    """Drive until the gripper reaches the target or the budget runs out.

    `track` optionally recomputes the xy target each tick (e.g. a settling
    cable node).  Returns (scene, steps_used).
    """
    cfg = scene.cfg
    used = 0
    for _ in range(max_steps):
        if track is not None:
            target_xy = track(scene)
        g = scene.gripper
        err = float(np.linalg.norm(np.asarray(target_xy) - g.xy()))
        yaw_ok = target_yaw is None or abs(wrap_angle(target_yaw - g.yaw)) < 0.08
        if err < tol and abs(target_z - g.z) < z_tol and yaw_ok:
            break
        action = _servo_step(scene, target_xy, target_z, target_yaw, cfg)
        rec.add(scene, action)
        scene = sim.step(scene, action)
        used += 1
    return scene, used


def _marker_xy(scene, clip_index):
    return scene.nodes[scene.marker_center(clip_index)].copy()


def pickup(scene: sim.SceneState, record: bool = False) -> PrimitiveOutcome:
    """Grasp the current clip's marker section and lift it."""
    cfg = scene.cfg
    rec = _Recorder(record)
    scene = scene.copy()
    scene.gripper.mark_reset()
    steps = 0
    if scene.gripper.closed:
        scene = sim.release(scene)
    clip = scene.clips[scene.current_clip]

    # travel above the marker, tracking it while the cable settles
    scene, n = _servo_to(scene, rec, _marker_xy(scene, scene.current_clip),
                         cfg.z_stage, target_yaw=clip.yaw, tol=0.004,
                         max_steps=60, track=lambda s: _marker_xy(s, s.current_clip))
    steps += n
    # descend onto it
    scene, n = _servo_to(scene, rec, _marker_xy(scene, scene.current_clip),
                         0.006, tol=0.004, z_tol=0.003, max_steps=20,
                         track=lambda s: _marker_xy(s, s.current_clip))
    steps += n
    scene = sim.grasp(scene)
    if scene.gripper.grasped_node is None:
        scene = sim.release(scene)
        scene, n = _servo_to(scene, rec, scene.gripper.xy(), cfg.z_stage,
                             max_steps=10)
        return PrimitiveOutcome(PICKUP, steps + n, scene, error="grasp_failed",
                                steps=rec.steps, shadow=rec.shadow)
    # lift
    scene, n = _servo_to(scene, rec, scene.gripper.xy(), cfg.z_stage,
                         max_steps=15)
    steps += n
    return PrimitiveOutcome(PICKUP, steps, scene, steps=rec.steps, shadow=rec.shadow)


def route(scene: sim.SceneState, actor, rng: np.random.Generator,
          record: bool = False, max_steps: int | None = None) -> PrimitiveOutcome:
    """Roll the low-level routing actor until the clip is routed.

    `actor(scene, obs, rng) -> Twist4` decouples the primitive from where
    the behavior comes from (learned policy, scripted expert, zero).
    """
    if scene.gripper.grasped_node is None:
        raise NotHolding("route requires the cable in hand")
    cfg = scene.cfg
    rec = _Recorder(record)
    scene = scene.copy()
    scene.gripper.mark_reset()
    max_steps = max_steps or cfg.route_max_steps
    steps = 0
    success = sim.clip_routed(scene, scene.current_clip)
    while not success and steps < max_steps:
        obs = observe(scene)
        action = actor(scene, obs, rng)
        rec.add(scene, action)
        scene = sim.step(scene, action)
        steps += 1
        success = sim.clip_routed(scene, scene.current_clip)
    return PrimitiveOutcome(ROUTE, steps, scene, route_success=success,
                            steps=rec.steps, shadow=rec.shadow)


def perturb(scene: sim.SceneState, record: bool = False) -> PrimitiveOutcome:
    """Stretch the cable along the fixed-endground->marker direction to shed slack."""
    cfg = scene.cfg
    rec = _Recorder(record)
    scene = scene.copy()
    scene.gripper.mark_reset()
    steps = 0
    if scene.gripper.closed:
        scene = sim.release(scene)
    scene, n = _servo_to(scene, rec, _marker_xy(scene, scene.current_clip),
                         cfg.z_stage, tol=0.004, max_steps=60,
                         track=lambda s: _marker_xy(s, s.current_clip))
    steps += n
    scene, n = _servo_to(scene, rec, _marker_xy(scene, scene.current_clip),
                         0.006, tol=0.004, z_tol=0.003, max_steps=20,
                         track=lambda s: _marker_xy(s, s.current_clip))
    steps += n
    scene = sim.grasp(scene)
    if scene.gripper.grasped_node is None:
        scene = sim.release(scene)
        return PrimitiveOutcome(PERTURB, steps, scene, error="grasp_failed",
                                steps=rec.steps, shadow=rec.shadow)
    anchor = np.asarray(cfg.fixed_end)
    direction = scene.gripper.xy() - anchor
    norm = float(np.linalg.norm(direction))
    direction = direction / max(norm, 1e-9)
    target = scene.gripper.xy() + cfg.perturb_pull * direction
    target = np.clip(target, 0.03, cfg.workspace - 0.03)
    scene, n = _servo_to(scene, rec, target, 0.008, tol=0.008, max_steps=20)
    steps += n
    scene = sim.release(scene)
    scene, n = _servo_to(scene, rec, scene.gripper.xy(), cfg.z_stage, max_steps=10)
    steps += n
    return PrimitiveOutcome(PERTURB, steps, scene, steps=rec.steps, shadow=rec.shadow)


def go_next(scene: sim.SceneState, record: bool = False) -> PrimitiveOutcome:
    """Release, advance the clip index, stage in the next clip's reset box."""
    cfg = scene.cfg
    rec = _Recorder(record)
    scene = scene.copy()
    scene.gripper.mark_reset()
    steps = 0
    if scene.gripper.closed:
        scene = sim.release(scene)
    scene.current_clip += 1
    if scene.terminated:
        return PrimitiveOutcome(GO_NEXT, 0, scene, steps=rec.steps, shadow=rec.shadow)
    clip = scene.clips[scene.current_clip]
    u, nvec = clip.axes()
    dx = scene.rng.uniform(-cfg.init_box_half, cfg.init_box_half)
    dy = scene.rng.uniform(-cfg.init_box_half, cfg.init_box_half)
    dz = scene.rng.uniform(-cfg.init_z_jitter, cfg.init_z_jitter)
    dyaw = scene.rng.uniform(-math.radians(cfg.init_yaw_jitter_deg),
                             math.radians(cfg.init_yaw_jitter_deg))
    target = clip.mouth_point(cfg.init_box_front) + dx * u + dy * nvec
    scene, n = _servo_to(scene, rec, target, cfg.z_stage + dz,
                         target_yaw=wrap_angle(clip.yaw + dyaw),
                         tol=0.005, max_steps=60)
    steps += n
    return PrimitiveOutcome(GO_NEXT, steps, scene, steps=rec.steps, shadow=rec.shadow)


def execute(scene, primitive_id: int, actor=None, rng=None,
            record: bool = False) -> PrimitiveOutcome:
    """Dispatch by id; route converts a missing grasp into a failed outcome."""
    if primitive_id == PICKUP:
        return pickup(scene, record=record)
    if primitive_id == ROUTE:
        try:
            return route(scene, actor, rng, record=record)
        except NotHolding:
            return PrimitiveOutcome(ROUTE, 0, scene.copy(), route_success=False,
                                    error="not_holding")
    if primitive_id == PERTURB:
        return perturb(scene, record=record)
    if primitive_id == GO_NEXT:
        return go_next(scene, record=record)
    raise ValueError(f"unknown primitive id {primitive_id}")

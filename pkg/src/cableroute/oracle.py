"""Scripted experts with ground-truth access.

- `expert_low_action`: geometric servo demonstrator for single-clip routing,
  including lift-and-restage recovery from misses.
- `scripted_route_baseline`: open-loop waypoints relative to the clip with
  Gaussian wiggle; no cable awareness (the comparison baseline).
- `oracle_high`: full-state primitive selector used for demo generation and
  as the unattended intervener in fine-tuning runs.
- `gen_low_demos`: routing demonstrations (successes filtered) with a
  configurable fraction of recovery-style starts.
"""

from __future__ import annotations

import math

import numpy as np

from . import sim
from .config import RenderConfig, SimConfig
from .datasets import Dataset, LowStep, Trajectory
from .geometry import Twist4, body_twist_from_world, wrap_angle
from .perception import observe
from .policy import GO_NEXT, PERTURB, PICKUP, ROUTE, HistoryBuffer, normalize_action
from .primitives import NotHolding, _Recorder, _servo_to, pickup


def _clamped_world(scene, v_xy, vz, wz, speed=0.9):
    cfg = scene.cfg
    v = np.clip(np.asarray(v_xy), -speed * cfg.v_max, speed * cfg.v_max)
    vz = float(np.clip(vz, -speed * cfg.v_max, speed * cfg.v_max))
    wz = float(np.clip(wz, -speed * cfg.wz_max, speed * cfg.wz_max))
    return body_twist_from_world(scene.gripper.pose,
                                 np.array([v[0], v[1], vz]), wz)


def expert_low_action(scene: sim.SceneState) -> Twist4:
    """Ground-truth servo toward the current clip's channel.

    Stateless in the scene: align in front of the mouth, descend, push
    through; lift and restage after a miss.  A seeded micro-wiggle kicks in
    at wall contact so the demonstrator can work around mouth corners.
    """
    cfg = scene.cfg
    g = scene.gripper
    if g.grasped_node is None:
        raise NotHolding("expert routing requires the cable in hand")
    ci = scene.current_clip
    if sim.clip_routed(scene, ci):
        return Twist4.zero()
    clip = scene.clips[ci]
    lx, ly = clip.to_local(g.xy())[0]
    half = 0.5 * clip.wall_length
    slot_half = 0.5 * clip.slot_width
    stage = np.array([-half - 0.025, 0.0])
    exit_x = half + 0.018

    kp, kz, kyaw = 3.0, 4.0, 3.0
    wz = kyaw * wrap_angle(clip.yaw - g.yaw)

    miss = lx > -half - 0.002 and abs(ly) > slot_half - 0.0008
    overshoot = lx > exit_x + 0.004
    if miss or overshoot:
        # lift straight up, then return to the staging point
        if g.z < cfg.z_stage - 0.006:
            return _clamped_world(scene, (0.0, 0.0), kz * (cfg.z_stage - g.z), wz)
        target = clip.to_world(stage)
        return _clamped_world(scene, kp * (target - g.xy()),
                              kz * (cfg.z_stage - g.z), wz)

    if lx <= -half - 0.002:      # in front of the mouth
        if abs(ly) > 0.0045:
            target = clip.to_world(stage)
            zt = cfg.z_stage if abs(ly) > 0.02 else g.z
            return _clamped_world(scene, kp * (target - g.xy()), kz * (zt - g.z), wz)
        if g.z > cfg.z_engage + 0.004:
            hold = clip.to_world(np.array([min(lx, -half - 0.012), 0.0]))
            return _clamped_world(scene, kp * (hold - g.xy()),
                                  kz * (cfg.z_engage - g.z), wz)

    # aligned and low (or inside the channel): push through
    target = clip.to_world(np.array([exit_x, 0.0]))
    v = kp * (target - g.xy())
    rects = scene.all_wall_rects(cfg.gripper_radius + 0.002)
    touching = any(_near_rect(g.x, g.y, r) for r in rects)
    if touching:
        wig = np.random.default_rng(
            np.random.SeedSequence((scene.seed, scene.time_step))).uniform(-1, 1)
        _, n = clip.axes()
        v = v + 0.04 * wig * kp * n - 0.2 * v
    return _clamped_world(scene, v, kz * (cfg.z_engage - g.z), wz, speed=0.7)


def _near_rect(x, y, rect) -> bool:
    rx, ry = x - rect[0], y - rect[1]
    lx = rect[2] * rx + rect[3] * ry
    ly = -rect[3] * rx + rect[2] * ry
    return abs(lx) < rect[4] and abs(ly) < rect[5]


def expert_actor(scene, obs, rng) -> Twist4:
    return expert_low_action(scene)


def zero_actor(scene, obs, rng) -> Twist4:
    return Twist4.zero()


# ---------------------------------------------------------------------------
# scripted single-clip baseline: ground-truth clip pose, no cable perception


def scripted_route_baseline(scene: sim.SceneState, rng: np.random.Generator,
                            record: bool = False):
    """Open-loop waypoint pass through the clip with Gaussian target wiggle."""
    from .primitives import PrimitiveOutcome   # local to avoid cycle at import
    if scene.gripper.grasped_node is None:
        raise NotHolding("scripted routing requires the cable in hand")
    cfg = scene.cfg
    rec = _Recorder(record)
    scene = scene.copy()
    scene.gripper.mark_reset()
    clip = scene.clips[scene.current_clip]
    half = 0.5 * clip.wall_length
    xs = [-half - 0.025, -half - 0.01, 0.0, half + 0.01, half + 0.018]
    zs = [cfg.z_stage, cfg.z_engage, cfg.z_engage, cfg.z_engage, cfg.z_engage]
    steps = 0
    budget = cfg.route_max_steps
    for wx, wz_t in zip(xs, zs):
        wy = float(rng.normal(0.0, 0.004))
        target = clip.to_world(np.array([wx, wy]))
        scene, n = _servo_to(scene, rec, target, wz_t, target_yaw=clip.yaw,
                             tol=0.004, z_tol=0.004,
                             max_steps=min(12, budget - steps))
        steps += n
        if sim.clip_routed(scene, scene.current_clip) or steps >= budget:
            break
    success = sim.clip_routed(scene, scene.current_clip)
    return PrimitiveOutcome(ROUTE, steps, scene, route_success=success,
                            steps=rec.steps, shadow=rec.shadow)


def scripted_actor_outcome(scene, rng, record=False):
    return scripted_route_baseline(scene, rng, record=record)


# ---------------------------------------------------------------------------
# high-level decision oracle


def oracle_high(scene: sim.SceneState, history: HistoryBuffer) -> int:
    """Full-state decision rule.

    pickup when empty-handed; route while attempts remain; perturb after two
    consecutive failed routes; advance only once the clip is truly routed.
    """
    if scene.terminated:
        return GO_NEXT
    holding = scene.gripper.grasped_node is not None
    routed = sim.clip_routed(scene, scene.current_clip)
    if routed:
        return GO_NEXT
    if not holding:
        if history.slots[0] == ROUTE and history.slots[1] == ROUTE:
            return PERTURB
        return PICKUP
    if history.slots[0] == ROUTE and history.slots[1] == ROUTE:
        return PERTURB
    return ROUTE


# ---------------------------------------------------------------------------
# scene setup shared by demo generation and single-clip evaluation


def sample_clip_pose(rng: np.random.Generator, cfg: SimConfig,
                     region: int | None = None) -> tuple:
    if region is None:
        region = int(rng.integers(0, 3))
    xmin, ymin, xmax, ymax = cfg.region_box(region)
    return (rng.uniform(xmin, xmax), rng.uniform(ymin, ymax),
            rng.uniform(0.0, math.radians(cfg.clip_yaw_max_deg)))


def setup_routing_scene(seed: int, cfg: SimConfig, bias: str = "easy",
                        start: str = "init_box", clip_pose: tuple | None = None):
    """Single-clip scene with the cable already grasped.

    start: "init_box" (reset-box pose in front of the mouth), "pickup"
    (wherever pickup left the gripper), or "failure" (scripted miss states
    beside/behind the slot used for recovery demonstrations).

    Returns the scene with reset pose marked, or None when the grasp or the
    scripted setup fails (caller skips the seed).
    """
    if clip_pose is None:
        pose_rng = np.random.default_rng(np.random.SeedSequence((seed, 17)))
        clip_pose = sample_clip_pose(pose_rng, cfg)
    scene = sim.sample_scene(seed, 1, cfg, bias=bias, clip_overrides=[clip_pose])
    out = pickup(scene)
    if out.error is not None:
        return None
    scene = out.scene
    clip = scene.clips[0]
    rec = _Recorder(False)
    rng = scene.rng
    if start == "pickup":
        scene.gripper.mark_reset()
        return scene
    if start == "init_box":
        u, nvec = clip.axes()
        dx = rng.uniform(-cfg.init_box_half, cfg.init_box_half)
        dy = rng.uniform(-cfg.init_box_half, cfg.init_box_half)
        dz = rng.uniform(-cfg.init_z_jitter, cfg.init_z_jitter)
        dyaw = rng.uniform(-math.radians(cfg.init_yaw_jitter_deg),
                           math.radians(cfg.init_yaw_jitter_deg))
        target = clip.mouth_point(cfg.init_box_front) + dx * u + dy * nvec
        scene, _ = _servo_to(scene, rec, target, cfg.z_stage + dz,
                             target_yaw=wrap_angle(clip.yaw + dyaw),
                             tol=0.005, max_steps=60)
    else:   # failure states: beside or behind the slot, cable draped over
        half = 0.5 * clip.wall_length
        side = 1.0 if rng.uniform() < 0.5 else -1.0
        off = 0.5 * clip.slot_width + clip.wall_thickness
        kind = rng.uniform()
        if kind < 0.5:       # behind the far wall
            local = np.array([half + 0.03, side * (off + 0.015)])
        else:                # beside the near wall
            local = np.array([-half + 0.01, side * (off + 0.012)])
        scene, _ = _servo_to(scene, rec, clip.to_world(local), cfg.z_stage,
                             target_yaw=clip.yaw, tol=0.006, max_steps=60)
        scene, _ = _servo_to(scene, rec, clip.to_world(local), cfg.z_engage,
                             tol=0.006, z_tol=0.004, max_steps=12)
    if scene.gripper.grasped_node is None:    # slipped during setup
        return None
    scene.gripper.mark_reset()
    return scene


def gen_low_demos(n: int, recovery_fraction: float, seed: int,
                  cfg: SimConfig | None = None,
                  rc: RenderConfig | None = None,
                  max_attempts_factor: int = 4) -> Dataset:
    """Expert routing demos; failed episodes are filtered out."""
    cfg = cfg or SimConfig()
    rc = rc or RenderConfig()
    ds = Dataset("low", cfg, rc, seed)
    if n <= 0:
        raise ValueError("need n > 0 demos")
    mix = np.random.default_rng(np.random.SeedSequence((seed, 23)))
    attempt = 0
    while len(ds.trajectories) < n and attempt < max_attempts_factor * n:
        ep_seed = seed * 1_000_003 + attempt
        attempt += 1
        recovery = mix.uniform() < recovery_fraction
        bias = "easy" if mix.uniform() < 0.5 else "hard"
        start = ("failure" if mix.uniform() < 0.6 else "pickup") if recovery \
            else "init_box"
        scene = setup_routing_scene(ep_seed, cfg, bias=bias, start=start)
        if scene is None:
            continue
        traj = Trajectory(seed=ep_seed)
        ok = False
        for _ in range(cfg.route_max_steps):
            if sim.clip_routed(scene, 0):
                ok = True
                break
            obs = observe(scene, rc)
            try:
                action = expert_low_action(scene)
            except NotHolding:
                break
            traj.steps.append(LowStep(sim.scene_to_snapshot(scene), obs.wrist,
                                      obs.z, action.as_array()))
            scene = sim.step(scene, action)
        if ok and traj.steps:
            ds.trajectories.append(traj)
    return ds

"""Staged reward machine and task-phase tracker.

The task phase is a latching, monotone index:
  0 start, 1 EE reached the pick table, 2 EE reached the place table,
  3 object placed, 4 gripper released after placement, 5 arm returned home.
Dense shaping terms are gated by stage, one-shot bonuses latch on their
trigger events, and the penalty groups (arm, base, manipulation) are active
at every step.

Stage rows:
  pre-grasping  EE_to_Obj = k1*exp(-25 d^2) + k2*exp(-d^2);  EE_Obj_Contact = k3*[contact]
  grasping      k4*([object in gripper] + [grasping success])
  carrying      Base_Heading = k5 * heading . dir(base->place)
                Obj_to_Place = k6*exp(-5 S) + k7*exp(-25 S) over keypoints
                Base_to_Place = k8*exp(-0.5 max(d, 0.3))
  placement     Place Success = k9; Gripper Release = k10
  retreating    Base_Retreat = k11*min(1, d_base^2); EE_Retreat = k12*(1 - exp(-5 min(1, d_ee)))
  finishing     Complete = k13*([release success] + 2*[retreat success])
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .configs import ArmParams, RewardConfig
from .world import ON_PLACE, WorldState

PHASE_NAMES = ("start", "at_pick", "at_place", "placed", "released", "returned")

STAGE_PRE_GRASP = "pre_grasping"
STAGE_GRASPING = "grasping"
STAGE_CARRYING = "carrying"
STAGE_PLACEMENT = "placement"
STAGE_RETREATING = "retreating"
STAGE_FINISHING = "finishing"


@dataclass(slots=True)
class RewardState:
    """Per-episode latches for one-shot bonuses and the retreat judgement."""

    grasp_paid: bool = False
    lift_paid: bool = False
    place_paid: bool = False
    release_paid: bool = False
    complete_paid: bool = False
    release_obj_pos: tuple | None = None
    disturbed: bool = False
    retreat_success: bool = False
    drop_count: int = 0
    grip_changes: int = 0
    t_grasp: int = -1
    t_place: int = -1
    t_release: int = -1
    t_complete: int = -1


def _ee_above(w: WorldState, table, margin: float) -> bool:
    ex, ey, ez = w.ee_pos
    dx = ex - table.x
    dy = ey - table.y
    r = table.radius + margin
    return dx * dx + dy * dy <= r * r and ez >= table.top


def update_phase(phase: int, w: WorldState, plant, cfg: RewardConfig,
                 arm: ArmParams) -> int:
    """Advance the latching phase index as far as current conditions allow.

    Transitions are purely geometric; none of them test grasp success.
    """
    while True:
        if phase == 0:
            if _ee_above(w, w.pick_table, cfg.contact_radius):
                phase = 1
                continue
        elif phase == 1:
            if _ee_above(w, w.place_table, cfg.contact_radius):
                phase = 2
                continue
        elif phase == 2:
            if plant.check_placement(w)[0]:
                phase = 3
                continue
        elif phase == 3:
            if not w.gripper_closed and not w.attached:
                phase = 4
                continue
        elif phase == 4:
            if max(abs(qi - ni) for qi, ni in zip(w.q, arm.nominal)) <= cfg.delta_home:
                phase = 5
                continue
        return phase


def stage_of(phase: int, attached: bool) -> str:
    if phase >= 5:
        return STAGE_FINISHING
    if phase == 4:
        return STAGE_RETREATING
    if phase == 3:
        return STAGE_PLACEMENT
    if attached:
        return STAGE_CARRYING
    return STAGE_PRE_GRASP


def object_keypoints(w: WorldState) -> tuple:
    """(bottom, center, top) of the object; the axis flattens when toppled."""
    o = w.obj
    h = 0.5 * w.obj_spec.height
    if o.toppled:
        ax, ay, az = math.cos(o.yaw), math.sin(o.yaw), 0.0
    else:
        ax, ay, az = 0.0, 0.0, 1.0
    return ((o.x - h * ax, o.y - h * ay, o.z - h * az),
            (o.x, o.y, o.z),
            (o.x + h * ax, o.y + h * ay, o.z + h * az))


def place_keypoints(w: WorldState) -> tuple:
    """Upright goal keypoints: bottom at the place-table center top."""
    tb = w.place_table
    h = w.obj_spec.height
    return ((tb.x, tb.y, tb.top),
            (tb.x, tb.y, tb.top + 0.5 * h),
            (tb.x, tb.y, tb.top + h))


def keypoint_sqdist(w: WorldState) -> float:
    """Stacked squared keypoint error between object and goal."""
    s = 0.0
    for (px, py, pz), (tx, ty, tz) in zip(object_keypoints(w),
                                          place_keypoints(w)):
        s += (px - tx) ** 2 + (py - ty) ** 2 + (pz - tz) ** 2
    return s


def _norm3(a, b) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2
                     + (a[2] - b[2]) ** 2)


def reward_step(rs: RewardState, w: WorldState, plant, events: dict,
                phase_prev: int, phase_new: int,
                action_norm, prev_action_norm,
                cmd, prev_cmd, prev2_cmd,
                cfg: RewardConfig, arm: ArmParams, retreat_req: float,
                lift_threshold: float) -> tuple:
    """Reward for one decision step. Returns (total, term breakdown).

    `events` carries booleans aggregated over the decision's sim steps:
    grasp_success, dropped, toppled, floor, plus grip toggle count. Command
    and action histories older than the episode start count as absent, so
    rate penalties are exactly zero until the history fills.
    """
    terms = {}
    stage = stage_of(phase_new, w.attached)
    obj = w.obj

    # --- dense, stage gated -------------------------------------------
    if stage == STAGE_PRE_GRASP:
        dx = w.ee_pos[0] - obj.x
        dy = w.ee_pos[1] - obj.y
        dz = w.ee_pos[2] - obj.z
        d2 = dx * dx + dy * dy + dz * dz
        terms["ee_to_obj"] = cfg.k1 * math.exp(-25.0 * d2) + cfg.k2 * math.exp(-d2)
        r = plant.sp.r_grasp
        terms["ee_obj_contact"] = cfg.k3 if d2 <= r * r else 0.0
    elif stage == STAGE_CARRYING:
        tb = w.place_table
        ddx = tb.x - w.base_x
        ddy = tb.y - w.base_y
        dn = math.hypot(ddx, ddy)
        if dn > 1e-9:
            heading = (math.cos(w.base_yaw) * ddx
                       + math.sin(w.base_yaw) * ddy) / dn
        else:
            heading = 0.0
        terms["base_heading"] = cfg.k5 * heading
        s = keypoint_sqdist(w)
        terms["obj_to_place"] = (cfg.k6 * math.exp(-5.0 * s)
                                 + cfg.k7 * math.exp(-25.0 * s))
        db = math.hypot(w.base_x - tb.x, w.base_y - tb.y)
        terms["base_to_place"] = cfg.k8 * math.exp(-0.5 * max(db, 0.3))
    elif stage == STAGE_RETREATING:
        tb = w.place_table
        db2 = (w.base_x - tb.x) ** 2 + (w.base_y - tb.y) ** 2
        terms["base_retreat"] = cfg.k11 * min(1.0, db2)
        d_ee = _norm3(w.ee_pos, (obj.x, obj.y, obj.z))
        terms["ee_retreat"] = cfg.k12 * (1.0 - math.exp(-5.0 * min(1.0, d_ee)))

    # --- one-shot bonuses ---------------------------------------------
    if events.get("grasp_success") and not rs.grasp_paid:
        rs.grasp_paid = True
        rs.t_grasp = w.t
        terms["grasp_hold"] = cfg.k4
    if (not rs.lift_paid and w.attached
            and obj.z - 0.5 * w.obj_spec.height
            >= w.pick_table.top + lift_threshold):
        rs.lift_paid = True
        terms["grasp_lift"] = cfg.k4
    if phase_new >= 3 and phase_prev < 3 and not rs.place_paid:
        rs.place_paid = True
        rs.t_place = w.t
        terms["place_success"] = cfg.k9
    if phase_new >= 4 and phase_prev < 4 and not rs.release_paid:
        rs.release_paid = True
        rs.t_release = w.t
        rs.release_obj_pos = (obj.x, obj.y, obj.z)
        terms["gripper_release"] = cfg.k10

    # --- retreat judgement (after release) -----------------------------
    if rs.release_obj_pos is not None and not rs.complete_paid:
        rx, ry, rz = rs.release_obj_pos
        moved = math.sqrt((obj.x - rx) ** 2 + (obj.y - ry) ** 2 + (obj.z - rz) ** 2)
        if moved > 0.01 or obj.toppled:
            rs.disturbed = True
        if not rs.disturbed and not rs.retreat_success:
            d_ee = _norm3(w.ee_pos, (obj.x, obj.y, obj.z))
            if d_ee >= retreat_req:
                rs.retreat_success = True
                rs.complete_paid = True
                rs.t_complete = w.t
                # completion pays the release indicator plus twice the retreat
                terms["complete"] = 3.0 * cfg.k13

    # --- penalties: arm group -------------------------------------------
    terms["pen_arm_vel"] = -cfg.k14 * sum(abs(v) for v in w.qd)
    if prev_action_norm is not None:
        da2 = sum((a - b) ** 2 for a, b in
                  zip(action_norm[5:11], prev_action_norm[5:11]))
        terms["pen_arm_action_rate"] = -cfg.k15 * math.sqrt(da2)
    else:
        terms["pen_arm_action_rate"] = 0.0
    terms["pen_arm_torque"] = -cfg.k16 * sum(abs(t) for t in w.tau)
    terms["pen_arm_posture"] = -cfg.k17 * sum(
        abs(qi - ni) for qi, ni in zip(w.q, arm.nominal))
    near = 0
    frac = cfg.near_limit_frac
    for qi, lo, hi in zip(w.q, arm.lower, arm.upper):
        band = frac * (hi - lo)
        if qi - lo <= band or hi - qi <= band:
            near += 1
    terms["pen_near_limit"] = -cfg.k18 * near

    # --- penalties: base group ------------------------------------------
    terms["pen_base_motion"] = -cfg.k19 * (w.base_vh * w.base_vh
                                           + 0.02 * abs(w.base_wy))
    c_t = (cmd.vx, cmd.vy, cmd.wz)
    b_t = (cmd.dh, cmd.pitch)
    if prev_cmd is not None:
        c_p = (prev_cmd.vx, prev_cmd.vy, prev_cmd.wz)
        b_p = (prev_cmd.dh, prev_cmd.pitch)
        terms["pen_cmd_rate"] = -cfg.k20 * sum(
            (a - b) ** 2 for a, b in zip(c_t, c_p))
        terms["pen_body_rate"] = -cfg.k23 * sum(
            (a - b) ** 2 for a, b in zip(b_t, b_p))
        if prev2_cmd is not None:
            c_q = (prev2_cmd.vx, prev2_cmd.vy, prev2_cmd.wz)
            b_q = (prev2_cmd.dh, prev2_cmd.pitch)
            terms["pen_cmd_accel"] = -cfg.k21 * sum(
                (a - 2.0 * b + c) ** 2 for a, b, c in zip(c_t, c_p, c_q))
            terms["pen_body_accel"] = -cfg.k24 * sum(
                (a - 2.0 * b + c) ** 2 for a, b, c in zip(b_t, b_p, b_q))
        else:
            terms["pen_cmd_accel"] = 0.0
            terms["pen_body_accel"] = 0.0
    else:
        terms["pen_cmd_rate"] = 0.0
        terms["pen_body_rate"] = 0.0
        terms["pen_cmd_accel"] = 0.0
        terms["pen_body_accel"] = 0.0
    b2 = cmd.dh * cmd.dh + cmd.pitch * cmd.pitch
    c_norm = math.sqrt(cmd.vx ** 2 + cmd.vy ** 2 + cmd.wz ** 2)
    terms["pen_energy"] = -cfg.k22 * (1.0 + b2) * c_norm
    terms["pen_body_cmd"] = -cfg.k25 * b2

    # --- penalties: manipulation group -----------------------------------
    f = plant.ee_table_contact_force(w)
    terms["pen_contact"] = -cfg.k26 * f * f
    tb = w.place_table
    d_place = math.sqrt((obj.x - tb.x) ** 2 + (obj.y - tb.y) ** 2
                        + (obj.z - tb.top) ** 2)
    upright = 0.0 if obj.toppled else 1.0
    terms["pen_upright"] = -cfg.k27 * math.exp(-d_place) * (upright - 1.0) ** 2

    # bookkeeping used by stats, not by the reward itself
    if events.get("dropped") or events.get("toppled") or events.get("floor"):
        rs.drop_count += 1
    rs.grip_changes += events.get("grip_toggles", 0)

    return sum(terms.values()), terms


def term_value_ee_to_obj(cfg: RewardConfig, dist: float) -> float:
    """Closed-form pre-grasp attraction value at EE-object distance `dist`."""
    return cfg.k1 * math.exp(-25.0 * dist * dist) + cfg.k2 * math.exp(-dist * dist)


def term_value_base_to_place(cfg: RewardConfig, dist: float) -> float:
    """Closed-form base-to-place approach value at planar distance `dist`."""
    return cfg.k8 * math.exp(-0.5 * max(dist, 0.3))


def term_value_obj_to_place(cfg: RewardConfig, sqdist: float) -> float:
    """Closed-form carrying attraction at stacked keypoint error `sqdist`."""
    return cfg.k6 * math.exp(-5.0 * sqdist) + cfg.k7 * math.exp(-25.0 * sqdist)


def term_value_ee_retreat(cfg: RewardConfig, dist: float) -> float:
    """Closed-form retreat growth at EE-object distance `dist`."""
    return cfg.k12 * (1.0 - math.exp(-5.0 * min(1.0, dist)))


DENSE_TERMS_BY_STAGE = {
    STAGE_PRE_GRASP: {"ee_to_obj", "ee_obj_contact"},
    STAGE_GRASPING: set(),
    STAGE_CARRYING: {"base_heading", "obj_to_place", "base_to_place"},
    STAGE_PLACEMENT: set(),
    STAGE_RETREATING: {"base_retreat", "ee_retreat"},
    STAGE_FINISHING: set(),
}

SPARSE_TERMS = ("grasp_hold", "grasp_lift", "place_success",
                "gripper_release", "complete")

PENALTY_TERMS = ("pen_arm_vel", "pen_arm_action_rate", "pen_arm_torque",
                 "pen_arm_posture", "pen_near_limit", "pen_base_motion",
                 "pen_cmd_rate", "pen_cmd_accel", "pen_energy",
                 "pen_body_rate", "pen_body_accel", "pen_body_cmd",
                 "pen_contact", "pen_upright")

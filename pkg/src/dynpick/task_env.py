"""Decision-rate RL environment over the plant.

Actions are 12 raw values squashed through tanh into command ranges:
[vx, vy, wz, dh, pitch, six joint targets, gripper]. Each decision holds the
command for `decision_interval` plant steps. Observations are body-frame and
purely relative, so they are invariant to world translation and yaw.
"""

from __future__ import annotations

import math

import numpy as np

from .configs import ExperimentConfig
from .episodes import EpisodeSpec, make_world
from .plant import Command, Plant
from .rewards import RewardState, reward_step, update_phase
from .world import AIR, FLOOR, WorldState

N_ACTIONS = 12
HIST_FRAME = 25           # per-frame history features
CUR_FEATURES = 66         # current-block features
DYN_BASE_SPEED = 0.3      # base speed above which a grasp counts as on-the-move
DYN_REL_SPEED = 0.3       # EE-object relative speed bound for a clean grasp
PRIV_FEATURES = 4         # critic-only extras

OUTCOMES = ("success", "timeout", "toppled", "floor", "dropped", "disturbed",
            "workspace", "off_center")


class PickPlaceEnv:
    """Single-task environment; episode specs are supplied by the caller."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.plant = Plant(cfg.sim, cfg.arm)
        self.horizon = int(round(cfg.task.horizon_s
                                 / (cfg.sim.dt * cfg.task.decision_interval)))
        self.hist_len = cfg.task.history_len
        self.obs_dim = CUR_FEATURES + self.hist_len * HIST_FRAME
        sim = cfg.sim
        arm = cfg.arm
        self._mid = [0.5 * (sim.vx_min + sim.vx_max), 0.0, 0.0,
                     0.5 * (sim.dh_min + sim.dh_max), 0.0]
        self._half = [0.5 * (sim.vx_max - sim.vx_min), sim.vy_abs, sim.wz_abs,
                      0.5 * (sim.dh_max - sim.dh_min), sim.pitch_abs]
        for lo, hi in zip(arm.lower, arm.upper):
            self._mid.append(0.5 * (lo + hi))
            self._half.append(0.5 * (hi - lo))

        self.world: WorldState | None = None
        self.spec: EpisodeSpec | None = None
        self.rs = RewardState()
        self.phase = 0
        self.t_decision = 0
        self.prev_cmd: Command | None = None
        self.prev2_cmd: Command | None = None
        self.prev_action_norm: tuple | None = None
        self.last_action_norm = (0.0,) * N_ACTIONS
        self.history: list = []
        self.mass_est = cfg.estimator.mass_prior
        self.contact_est = 0.0
        self.outcome: str | None = None
        self.place_err_at_place = math.inf
        self.base_speed_at_grasp: float | None = None
        self.rel_speed_at_grasp: float | None = None

    # ------------------------------------------------------------------
    # action mapping

    def map_action(self, raw) -> tuple:
        """Raw 12-vector -> (Command, normalized action in [-1, 1]^12).

        The affine image is clamped to the exact range bounds so saturated
        raws cannot land an ulp outside them.
        """
        norm = [math.tanh(float(v)) for v in raw]
        m = self._mid
        h = self._half

        def ch(i: int, lo: float, hi: float) -> float:
            return min(hi, max(lo, m[i] + h[i] * norm[i]))

        sim = self.cfg.sim
        arm = self.cfg.arm
        cmd = Command(
            vx=ch(0, sim.vx_min, sim.vx_max),
            vy=ch(1, -sim.vy_abs, sim.vy_abs),
            wz=ch(2, -sim.wz_abs, sim.wz_abs),
            dh=ch(3, sim.dh_min, sim.dh_max),
            pitch=ch(4, -sim.pitch_abs, sim.pitch_abs),
            q_des=tuple(ch(5 + i, arm.lower[i], arm.upper[i])
                        for i in range(6)),
            grip_closed=norm[11] > 0.0,
        )
        return cmd, tuple(norm)

    def raw_from_targets(self, vx, vy, wz, dh, pitch, q_des, grip) -> list:
        """Inverse of map_action for scripted controllers: raw values whose
        mapped command equals the given targets (clipped into range)."""
        vals = [vx, vy, wz, dh, pitch] + list(q_des)
        raw = []
        for v, m, h in zip(vals, self._mid, self._half):
            norm = (v - m) / h if h > 0 else 0.0
            norm = max(-0.999999, min(0.999999, norm))
            raw.append(math.atanh(norm))
        raw.append(2.0 if grip else -2.0)
        return raw

    # ------------------------------------------------------------------
    # lifecycle

    def reset(self, spec: EpisodeSpec) -> np.ndarray:
        self.spec = spec
        self.world = make_world(spec, self.cfg.sim, self.cfg.arm,
                                self.cfg.ranges.table_radius)
        self.plant.prime(self.world)
        self.rs = RewardState()
        self.phase = 0
        self.t_decision = 0
        self.prev_cmd = None
        self.prev2_cmd = None
        self.prev_action_norm = None
        self.last_action_norm = (0.0,) * N_ACTIONS
        self.mass_est = self.cfg.estimator.mass_prior
        self.contact_est = 0.0
        self.outcome = None
        self.place_err_at_place = math.inf
        self.base_speed_at_grasp = None
        self.rel_speed_at_grasp = None
        frame = self._history_frame()
        self.history = [frame] * self.hist_len
        return self.observe()

    def set_estimates(self, mass: float, contact: float) -> None:
        self.mass_est = float(mass)
        self.contact_est = float(contact)

    def step(self, raw_action) -> tuple:
        """Advance one decision. Returns (obs, reward, done, info)."""
        w = self.world
        plant = self.plant
        cmd, norm = self.map_action(raw_action)
        events = {"grasp_success": False, "dropped": False, "toppled": False,
                  "floor": False, "grip_toggles": 0, "workspace": False}
        if self.prev_cmd is not None and cmd.grip_closed != self.prev_cmd.grip_closed:
            events["grip_toggles"] = 1
        for _ in range(self.cfg.task.decision_interval):
            ev = plant.step(w, cmd)
            events["grasp_success"] |= ev.grasp_success
            events["dropped"] |= ev.dropped
            events["toppled"] |= ev.toppled
            if ev.grasp_success:
                self.base_speed_at_grasp = ev.grasp_base_speed
                self.rel_speed_at_grasp = ev.grasp_rel_speed
            if ev.touchdown and w.obj.support == FLOOR:
                events["floor"] = True

        r_ws = self.cfg.sim.workspace_radius
        if (abs(w.base_x) > r_ws or abs(w.base_y) > r_ws
                or abs(w.obj.x) > r_ws or abs(w.obj.y) > r_ws):
            events["workspace"] = True

        phase_prev = self.phase
        self.phase = update_phase(self.phase, w, plant, self.cfg.reward,
                                  self.cfg.arm)
        if self.phase >= 3 and phase_prev < 3:
            self.place_err_at_place = plant.check_placement(w)[1]

        reward, terms = reward_step(
            self.rs, w, plant, events, phase_prev, self.phase,
            norm, self.prev_action_norm, cmd, self.prev_cmd, self.prev2_cmd,
            self.cfg.reward, self.cfg.arm,
            retreat_req=self.spec.retreat_req,
            lift_threshold=self.cfg.task.lift_threshold)

        self.prev2_cmd = self.prev_cmd
        self.prev_cmd = cmd
        self.prev_action_norm = norm
        self.last_action_norm = norm
        self.t_decision += 1
        self.history.pop(0)
        self.history.append(self._history_frame())

        done, outcome = self._check_termination(events)
        self.outcome = outcome
        info = {"phase": self.phase, "terms": terms, "events": events,
                "outcome": outcome}
        return self.observe(), reward, done, info

    def _check_termination(self, events) -> tuple:
        w = self.world
        if self.rs.retreat_success:
            placed, err = self.plant.check_placement(w)
            if placed and err <= self.spec.place_tol:
                return True, "success"
            return True, "off_center"
        if events["workspace"]:
            return True, "workspace"
        if w.obj.toppled:
            return True, "toppled"
        if w.obj.support == FLOOR:
            return True, "floor"
        if events["dropped"]:
            return True, "dropped"
        if self.rs.disturbed:
            return True, "disturbed"
        if self.t_decision >= self.horizon:
            return True, "timeout"
        return False, None

    def episode_stats(self) -> dict:
        """Per-track curriculum outcomes and bookkeeping for records."""
        success = self.outcome == "success"
        placed, err = self.plant.check_placement(self.world)
        dt = self.cfg.sim.dt
        return {
            "outcome": self.outcome,
            "success": success,
            "pick_success": self.rs.lift_paid,
            "place_success": (self.rs.place_paid
                              and self.place_err_at_place <= self.spec.place_tol),
            "release_success": self.rs.retreat_success,
            "disturbed": self.rs.disturbed,
            "final_placed": placed,
            "final_place_err": err,
            "t_grasp": self.rs.t_grasp,
            "t_place": self.rs.t_place,
            "t_release": self.rs.t_release,
            "t_complete": self.rs.t_complete,
            "completion_time_s": (self.rs.t_complete * dt
                                  if self.rs.t_complete >= 0 else None),
            "decisions": self.t_decision,
            "place_err": self.place_err_at_place,
            "base_speed_at_grasp": self.base_speed_at_grasp,
            "rel_speed_at_grasp": self.rel_speed_at_grasp,
            "dynamic_grasp": (self.base_speed_at_grasp is not None
                              and self.base_speed_at_grasp > DYN_BASE_SPEED
                              and self.rel_speed_at_grasp < DYN_REL_SPEED),
        }

    # ------------------------------------------------------------------
    # observations

    def _body(self, vx: float, vy: float) -> tuple:
        yaw = self.world.base_yaw
        c, s = math.cos(yaw), math.sin(yaw)
        return c * vx + s * vy, c * vy - s * vx

    def _history_frame(self) -> list:
        w = self.world
        exb, eyb = self._body(w.ee_pos[0] - w.base_x, w.ee_pos[1] - w.base_y)
        f = [ (w.base_vx + w.dist_x) * 0.5,
              (w.base_vy + w.dist_y) * 0.5,
              (w.base_wz + w.dist_w) * 0.5,
              w.q[0] * 0.4, w.q[1] * 0.4, w.q[2] * 0.4,
              w.q[3] * 0.4, w.q[4] * 0.4, w.q[5] * 0.4,
              exb, eyb, w.ee_pos[2] - w.base_h,
              1.0 if w.gripper_closed else 0.0 ]
        f.extend(self.last_action_norm)
        return f

    def observe(self) -> np.ndarray:
        w = self.world
        sp = self.spec
        body = self._body
        obj = w.obj

        evx, evy = body(w.ee_vel[0], w.ee_vel[1])
        exb, eyb = body(w.ee_pos[0] - w.base_x, w.ee_pos[1] - w.base_y)
        oxb, oyb = body(obj.x - w.ee_pos[0], obj.y - w.ee_pos[1])
        ovx, ovy = body(obj.vx - w.ee_vel[0], obj.vy - w.ee_vel[1])
        pkx, pky = body(w.pick_table.x - w.base_x, w.pick_table.y - w.base_y)
        plx, ply = body(w.place_table.x - w.base_x, w.place_table.y - w.base_y)
        tgt_z = w.place_table.top + 0.5 * w.obj_spec.height
        tex, tey = body(w.place_table.x - w.ee_pos[0],
                        w.place_table.y - w.ee_pos[1])

        cur = [
            (w.base_vx + w.dist_x) * 0.5,
            (w.base_vy + w.dist_y) * 0.5,
            (w.base_wz + w.dist_w) * 0.5,
            (w.base_h - self.cfg.sim.base_height) * 2.0,
            w.base_pitch * 2.0,
            w.q[0] * 0.4, w.q[1] * 0.4, w.q[2] * 0.4,
            w.q[3] * 0.4, w.q[4] * 0.4, w.q[5] * 0.4,
            w.qd[0] * 0.3, w.qd[1] * 0.3, w.qd[2] * 0.3,
            w.qd[3] * 0.3, w.qd[4] * 0.3, w.qd[5] * 0.3,
            exb, eyb, w.ee_pos[2] - w.base_h,
            evx * 0.5, evy * 0.5, w.ee_vel[2] * 0.5,
            1.0 if w.gripper_closed else 0.0,
            oxb, oyb, (obj.z - w.ee_pos[2]),
            ovx * 0.5, ovy * 0.5, (obj.vz - w.ee_vel[2]) * 0.5,
            w.obj_spec.width * 5.0, w.obj_spec.height * 5.0,
            1.0 if w.obj_spec.shape == "box" else 0.0,
            (obj.z - 0.5 * w.obj_spec.height - w.place_table.top) * 2.0,
            pkx * 0.3, pky * 0.3, (w.pick_table.top - w.base_h) * 0.5,
            plx * 0.3, ply * 0.3, (w.place_table.top - w.base_h) * 0.5,
            tex, tey, (tgt_z - w.ee_pos[2]),
            self.mass_est * 0.5,
            self.contact_est,
            sp.place_tol * 5.0,
            sp.retreat_req * 5.0,
            1.0 - self.t_decision / self.horizon,
        ]
        ph = [0.0] * 6
        ph[self.phase] = 1.0
        cur.extend(ph)
        cur.extend(self.last_action_norm)
        flat = cur
        for frame in self.history:
            flat = flat + frame
        return np.asarray(flat, dtype=np.float32)

    def privileged(self) -> np.ndarray:
        """Critic-only extras appended to the observation during training."""
        w = self.world
        err = self.plant.check_placement(w)[1]
        return np.asarray([
            w.obj_spec.mass * 0.5,
            1.0 if w.attached else 0.0,
            min(err, 2.0),
            1.0 if self.rs.disturbed else 0.0,
        ], dtype=np.float32)

    def estimator_frame(self) -> np.ndarray:
        """Per-decision estimator input: proprio, object view, last action."""
        w = self.world
        body = self._body
        obj = w.obj
        evx, evy = body(w.ee_vel[0], w.ee_vel[1])
        exb, eyb = body(w.ee_pos[0] - w.base_x, w.ee_pos[1] - w.base_y)
        oxb, oyb = body(obj.x - w.ee_pos[0], obj.y - w.ee_pos[1])
        f = [
            (w.base_vx + w.dist_x) * 0.5,
            (w.base_vy + w.dist_y) * 0.5,
            (w.base_wz + w.dist_w) * 0.5,
            (w.base_h - self.cfg.sim.base_height) * 2.0,
            w.base_pitch * 2.0,
            w.q[0] * 0.4, w.q[1] * 0.4, w.q[2] * 0.4,
            w.q[3] * 0.4, w.q[4] * 0.4, w.q[5] * 0.4,
            w.qd[0] * 0.3, w.qd[1] * 0.3, w.qd[2] * 0.3,
            w.qd[3] * 0.3, w.qd[4] * 0.3, w.qd[5] * 0.3,
            exb, eyb, w.ee_pos[2] - w.base_h,
            evx * 0.5, evy * 0.5, w.ee_vel[2] * 0.5,
            1.0 if w.gripper_closed else 0.0,
            oxb, oyb, obj.z - w.ee_pos[2],
            w.obj_spec.width * 5.0, w.obj_spec.height * 5.0,
        ]
        f.extend(self.last_action_norm)
        return np.asarray(f, dtype=np.float32)


EST_FRAME_DIM = 29 + N_ACTIONS

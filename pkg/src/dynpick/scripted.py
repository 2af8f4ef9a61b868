"""Scripted waypoint controller with analytic IK.

A hand-written state machine that drives episodes to completion using full
world access. It validates task solvability, generates labeled carry data for
the payload estimator, and serves as a non-learned baseline. It is not part
of the trained policy path.
"""

from __future__ import annotations

import math

from .waypoints import plan_trajectory
from .kinematics import ArmChain
from .plant import Command
from .task_env import PickPlaceEnv

L1 = 0.28                    # upper arm
L2 = 0.25 + 0.09 + 0.05 + 0.07   # forearm with the wrist joints held at zero


class ScriptedController:
    """Produces raw (pre-squash) actions for PickPlaceEnv episodes."""

    def __init__(self, env: PickPlaceEnv, carry_height: float = 0.12,
                 drive_speed: float = 1.0):
        self.env = env
        cfg = env.cfg
        self.arm = cfg.arm
        self.sim = cfg.sim
        self.chain = ArmChain(cfg.arm.mount, cfg.arm.axes, cfg.arm.links)
        self.carry_height = carry_height
        self.drive_speed = drive_speed
        self.state = "drive_pick"
        self.traj = None
        self.traj_t = 0.0
        self.q_cmd = cfg.arm.nominal
        self.grip = False
        self.dt_decision = cfg.sim.dt * cfg.task.decision_interval

    def reset(self) -> None:
        self.state = "drive_pick"
        self.traj = None
        self.traj_t = 0.0
        self.q_cmd = self.arm.nominal
        self.grip = False

    # ------------------------------------------------------------------
    # inverse kinematics

    def shoulder(self) -> tuple:
        """World position of the J1 pitch joint."""
        w = self.env.world
        c, s = math.cos(w.base_yaw), math.sin(w.base_yaw)
        mx, my, mz = self.arm.mount
        # small pitch ignored: the base is commanded level while manipulating
        sx = w.base_x + c * mx - s * my
        sy = w.base_y + s * mx + c * my
        sz = w.base_h + mz + self.arm.links[0][2]
        return sx, sy, sz

    def solve_ik(self, target: tuple, payload: float = 0.0) -> tuple | None:
        """Joint vector whose settled pose puts the EE at `target`, with the
        expected payload droop compensated. None when out of reach."""
        w = self.env.world
        sx, sy, sz = self.shoulder()
        dx = target[0] - sx
        dy = target[1] - sy
        azim = math.atan2(dy, dx)
        q0 = azim - w.base_yaw
        while q0 > math.pi:
            q0 -= 2 * math.pi
        while q0 < -math.pi:
            q0 += 2 * math.pi
        if not (self.arm.lower[0] <= q0 <= self.arm.upper[0]):
            return None
        r = math.hypot(dx, dy)
        z = target[2] - sz
        reach2 = r * r + z * z
        max_reach = L1 + L2 - 1e-4
        min_reach = abs(L1 - L2) + 1e-4
        if reach2 > max_reach * max_reach:
            scale = max_reach / math.sqrt(reach2)
            r *= scale
            z *= scale
        elif reach2 < min_reach * min_reach:
            return None
        if r < 0.02:
            return None
        c2 = (r * r + z * z - L1 * L1 - L2 * L2) / (2 * L1 * L2)
        c2 = max(-1.0, min(1.0, c2))
        # plane coordinates: x = r, y = -z (pitch positive moves the arm down)
        for s2 in (-math.sqrt(1.0 - c2 * c2), math.sqrt(1.0 - c2 * c2)):
            q2 = math.atan2(s2, c2)
            q1 = math.atan2(-z, r) - math.atan2(L2 * s2, L1 + L2 * c2)
            q = [q0, q1, q2, 0.0, 0.0, 0.0]
            ok = all(self.arm.lower[i] - 1e-9 <= q[i] <= self.arm.upper[i] + 1e-9
                     for i in range(6))
            if ok:
                for i in range(6):
                    q[i] = max(self.arm.lower[i], min(self.arm.upper[i], q[i]))
                if payload > 0.0:
                    q = self._droop_compensate(q, payload)
                return tuple(q)
        return None

    def _droop_compensate(self, q, payload: float):
        """Shift the command so the payload-loaded equilibrium lands on q."""
        w = self.env.world
        from .kinematics import yaw_pitch_matrix
        rot = yaw_pitch_matrix(w.base_yaw, w.base_pitch)
        pos = (w.base_x, w.base_y, w.base_h)
        jp, ja, _, ee = self.chain.chain_info(rot, pos, q)
        out = list(q)
        g = self.sim.gravity
        wn2 = self.arm.omega_n ** 2
        for j in range(6):
            ux, uy, _ = ja[j]
            px, py, _ = jp[j]
            lever = g * ((ee[0] - px) * uy - (ee[1] - py) * ux)
            out[j] = q[j] - payload * lever / (self.arm.inertia[j] * wn2)
            out[j] = max(self.arm.lower[j], min(self.arm.upper[j], out[j]))
        return out

    # ------------------------------------------------------------------
    # base driving

    def _drive(self, gx: float, gy: float, standoff: float,
               face: tuple | None = None) -> tuple:
        """Body-frame velocities toward (gx, gy) at `standoff` distance."""
        w = self.env.world
        dx = gx - w.base_x
        dy = gy - w.base_y
        dist = math.hypot(dx, dy)
        fx, fy = face if face is not None else (gx, gy)
        heading = math.atan2(fy - w.base_y, fx - w.base_x)
        err = heading - w.base_yaw
        while err > math.pi:
            err -= 2 * math.pi
        while err < -math.pi:
            err += 2 * math.pi
        wz = max(-1.0, min(1.0, 2.0 * err))
        gap = dist - standoff
        speed = max(-0.5, min(self.drive_speed, 1.8 * gap))
        c, s = math.cos(w.base_yaw), math.sin(w.base_yaw)
        ux, uy = (dx / dist, dy / dist) if dist > 1e-6 else (1.0, 0.0)
        vx = (c * ux + s * uy) * speed
        vy = (c * uy - s * ux) * speed
        vy = max(-1.0, min(1.0, vy))
        vx = max(self.sim.vx_min, min(self.sim.vx_max, vx))
        return vx, vy, wz, gap, err

    # ------------------------------------------------------------------
    # main loop

    def _start_traj(self, q_to, vel=1.2):
        w = self.env.world
        self.traj = plan_trajectory([w.q, q_to], vel_limit=vel, acc_limit=8.0)
        self.traj_t = 0.0

    def _step_traj(self) -> bool:
        self.traj_t += self.dt_decision
        q, _, _ = self.traj.sample(self.traj_t)
        self.q_cmd = q
        return self.traj_t >= self.traj.duration

    def act(self) -> list:
        """One decision's raw action."""
        env = self.env
        w = env.world
        obj = w.obj
        sim = self.sim
        vx = vy = wz = 0.0
        dh = 0.0

        # desired body height from the active table height
        tb = w.pick_table if self.state in ("drive_pick", "pre_reach", "reach",
                                            "grasp", "lift") else w.place_table
        dh = max(sim.dh_min, min(sim.dh_max, (tb.top - 0.75) * 0.4))

        if self.state == "drive_pick":
            vx, vy, wz, gap, err = self._drive(obj.x, obj.y, 0.52)
            if abs(gap) < 0.04 and abs(err) < 0.12:
                target = (obj.x, obj.y, obj.z + 0.10)
                q = self.solve_ik(target)
                if q is not None:
                    self._start_traj(q, vel=1.4)
                    self.state = "pre_reach"
        elif self.state == "pre_reach":
            vx, vy, wz, gap, err = self._drive(obj.x, obj.y, 0.52)
            vx *= 0.3
            vy *= 0.3
            if self._step_traj():
                q = self.solve_ik((obj.x, obj.y, obj.z))
                if q is not None:
                    self._start_traj(q, vel=0.5)
                    self.state = "reach"
                else:
                    self.state = "drive_pick"
        elif self.state == "reach":
            done = self._step_traj()
            d = math.dist(w.ee_pos, (obj.x, obj.y, obj.z))
            rel = math.dist(w.ee_vel, (obj.vx, obj.vy, obj.vz))
            if d < 0.8 * sim.r_grasp and rel < 0.8 * sim.v_grasp:
                self.grip = True
                self.state = "lift"
                q = self.solve_ik((obj.x, obj.y, obj.z + self.carry_height),
                                  payload=w.obj_spec.mass)
                if q is not None:
                    self._start_traj(q, vel=0.8)
            elif done:
                q = self.solve_ik((obj.x, obj.y, obj.z))
                if q is not None:
                    self._start_traj(q, vel=0.4)
        elif self.state == "lift":
            if self._step_traj() or (w.attached and obj.z - 0.5 * w.obj_spec.height
                                     > w.pick_table.top + 0.08):
                if not w.attached:
                    self.grip = False
                    self.state = "drive_pick"
                else:
                    self.state = "drive_place"
        elif self.state == "drive_place":
            tb = w.place_table
            vx, vy, wz, gap, err = self._drive(tb.x, tb.y, 0.52)
            # hold the object at carry height beside the body
            tgt_obj_z = tb.top + 0.5 * w.obj_spec.height + 0.10
            ee_t = (w.ee_pos[0] + (obj.x - w.ee_pos[0]),
                    w.ee_pos[1] + (obj.y - w.ee_pos[1]), 0.0)
            q = self.solve_ik((w.base_x + math.cos(w.base_yaw) * 0.62,
                               w.base_y + math.sin(w.base_yaw) * 0.62,
                               tgt_obj_z + (w.ee_pos[2] - obj.z)),
                              payload=w.obj_spec.mass)
            if q is not None:
                self.q_cmd = q
            if abs(gap) < 0.04 and abs(err) < 0.12:
                oz_t = tb.top + 0.5 * w.obj_spec.height + 0.004
                ee_t = (tb.x + (w.ee_pos[0] - obj.x),
                        tb.y + (w.ee_pos[1] - obj.y),
                        oz_t + (w.ee_pos[2] - obj.z))
                q = self.solve_ik(ee_t, payload=w.obj_spec.mass)
                if q is not None:
                    self._start_traj(q, vel=0.5)
                    self.state = "place"
        elif self.state == "place":
            done = self._step_traj()
            if env.plant.placed_attached(w):
                self.grip = False
                self.state = "retreat"
                self._start_traj(self.arm.nominal, vel=1.0)
            elif done:
                tb = w.place_table
                oz_t = tb.top + 0.5 * w.obj_spec.height + 0.002
                ee_t = (tb.x + (w.ee_pos[0] - obj.x),
                        tb.y + (w.ee_pos[1] - obj.y),
                        oz_t + (w.ee_pos[2] - obj.z))
                q = self.solve_ik(ee_t, payload=w.obj_spec.mass)
                if q is not None:
                    self._start_traj(q, vel=0.3)
        elif self.state == "retreat":
            self._step_traj()
            vx = -0.4
        return self._raw(vx, vy, wz, dh, 0.0, self.q_cmd, self.grip)

    # ------------------------------------------------------------------
    # inverse action mapping

    def _raw(self, vx, vy, wz, dh, pitch, q_des, grip) -> list:
        return self.env.raw_from_targets(vx, vy, wz, dh, pitch, q_des, grip)


def run_scripted_episode(env: PickPlaceEnv, spec, max_decisions=None) -> dict:
    """Roll one scripted episode; returns the env's episode stats."""
    env.reset(spec)
    ctl = ScriptedController(env)
    ctl.reset()
    limit = max_decisions or env.horizon
    for _ in range(limit):
        _, _, done, info = env.step(ctl.act())
        if done:
            break
    return env.episode_stats()

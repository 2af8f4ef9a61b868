"""Parametric command-tracking plant for the base, arm, gripper, and object.

The legged base is reduced to first-order tracking of commanded body-frame
velocities, height, and pitch, with a filtered reaction disturbance driven by
payload mass times end-effector acceleration. The arm tracks joint targets
with a critically damped second-order law under torque limits and
uncompensated gravity load, so payload mass visibly affects tracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .configs import ArmParams, SimParams
from .kinematics import ArmChain, mat_t_vec, yaw_pitch_matrix
from .world import AIR, FLOOR, HELD, ON_PICK, ON_PLACE, WorldState

TWO_PI = 6.283185307179586
GRIP_FORCE = 25.0          # holding force budget for the slip model [N]
SLIP_DROP_FRAC = 0.5       # attached object drops after slipping this fraction of its height


@dataclass(slots=True)
class Command:
    """One high-level action, held constant between decisions."""

    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0
    dh: float = 0.0
    pitch: float = 0.0
    q_des: tuple = (0.0,) * 6
    grip_closed: bool = False


@dataclass(slots=True)
class StepEvents:
    grasp_attempt: bool = False
    grasp_success: bool = False
    released: bool = False
    touchdown: bool = False
    settled: bool = False
    toppled: bool = False
    dropped: bool = False     # slipped out of the gripper
    grasp_rel_speed: float = 0.0   # EE-object relative speed at closure
    grasp_base_speed: float = 0.0  # base planar speed at closure


class Plant:
    """Deterministic fixed-step integrator over WorldState."""

    def __init__(self, sim: SimParams, arm: ArmParams):
        self.sp = sim
        self.ap = arm
        self.chain = ArmChain(arm.mount, arm.axes, arm.links)
        dt = sim.dt
        self.alpha_track = math.exp(-dt / sim.tau_track)
        self.alpha_body = math.exp(-dt / sim.tau_body)
        self.alpha_dist = math.exp(-dt / sim.tau_dist)
        self.wn2 = arm.omega_n * arm.omega_n
        self.two_wn = 2.0 * arm.omega_n
        self.inv_inertia = tuple(1.0 / i for i in arm.inertia)
        self.inv_dt = 1.0 / dt
        self._grasp_rel_speed = 0.0

    # ------------------------------------------------------------------
    # state priming

    def prime(self, w: WorldState) -> None:
        """Fill kinematic caches after an external state edit or reset."""
        rot = yaw_pitch_matrix(w.base_yaw, w.base_pitch)
        pos = (w.base_x, w.base_y, w.base_h)
        jp, ja, r_ee, p_ee = self.chain.chain_info(rot, pos, w.q)
        w.ee_rot = r_ee
        w.ee_pos = p_ee
        w.ee_vel = (0.0, 0.0, 0.0)
        w.ee_acc = (0.0, 0.0, 0.0)
        w.grav_tau, w.grav_lever = self._gravity_from_chain(jp, ja, p_ee)

    def _gravity_from_chain(self, joint_pos, joint_axis, ee_pos) -> tuple:
        """Link-mass gravity torque per joint, and the unit-payload torque
        (gravity torque per kilogram hung at the EE)."""
        masses = self.ap.link_masses
        g = self.sp.gravity
        n = len(masses)
        pts = joint_pos[1:] + [ee_pos]
        eex, eey = ee_pos[0], ee_pos[1]
        m_suf = 0.0
        sx = 0.0
        sy = 0.0
        out = [0.0] * n
        lever = [0.0] * n
        for i in range(n - 1, -1, -1):
            m = masses[i]
            m_suf += m
            sx += m * pts[i][0]
            sy += m * pts[i][1]
            ux, uy, _ = joint_axis[i]
            px, py, _ = joint_pos[i]
            out[i] = g * ((sx - m_suf * px) * uy - (sy - m_suf * py) * ux)
            lever[i] = g * ((eex - px) * uy - (eey - py) * ux)
        return tuple(out), tuple(lever)

    # ------------------------------------------------------------------
    # gripper

    def try_grasp(self, w: WorldState) -> bool:
        """Attach the object if it is within reach and nearly co-moving."""
        if w.attached:
            return False
        o = w.obj
        ex, ey, ez = w.ee_pos
        dx = o.x - ex
        dy = o.y - ey
        dz = o.z - ez
        if dx * dx + dy * dy + dz * dz > self.sp.r_grasp * self.sp.r_grasp:
            return False
        if o.support == AIR:
            ovx, ovy, ovz = o.vx, o.vy, o.vz
        else:
            ovx = ovy = ovz = 0.0
        vx, vy, vz = w.ee_vel
        rx = ovx - vx
        ry = ovy - vy
        rz = ovz - vz
        if rx * rx + ry * ry + rz * rz > self.sp.v_grasp * self.sp.v_grasp:
            return False
        self._grasp_rel_speed = math.sqrt(rx * rx + ry * ry + rz * rz)
        w.attached = True
        w.attach_offset = mat_t_vec(w.ee_rot, (dx, dy, dz))
        w.attach_yaw_off = o.yaw - math.atan2(w.ee_rot[3], w.ee_rot[0])
        w.slip = 0.0
        o.support = HELD
        o.vx, o.vy, o.vz = vx, vy, vz
        return True

    def release(self, w: WorldState) -> None:
        """Detach; the object keeps the end-effector velocity and falls free."""
        if not w.attached:
            return
        w.attached = False
        w.slip = 0.0
        o = w.obj
        o.vx, o.vy, o.vz = w.ee_vel
        o.support = AIR

    def force_attach(self, w: WorldState) -> None:
        """Attach regardless of gates (synthetic data generation only)."""
        o = w.obj
        w.gripper_closed = True
        w.attached = True
        dx = o.x - w.ee_pos[0]
        dy = o.y - w.ee_pos[1]
        dz = o.z - w.ee_pos[2]
        w.attach_offset = mat_t_vec(w.ee_rot, (dx, dy, dz))
        w.attach_yaw_off = o.yaw - math.atan2(w.ee_rot[3], w.ee_rot[0])
        w.slip = 0.0
        o.support = HELD

    # ------------------------------------------------------------------
    # queries

    def ee_table_contact_force(self, w: WorldState) -> float:
        """Spring force from end-effector penetration of a table top or floor.

        Purely sensory: the plant does not resolve the collision, the force
        only feeds the contact penalty.
        """
        ex, ey, ez = w.ee_pos
        pen = 0.0
        for tb in (w.pick_table, w.place_table):
            dx = ex - tb.x
            dy = ey - tb.y
            if dx * dx + dy * dy <= tb.radius * tb.radius and ez < tb.top:
                pen = max(pen, tb.top - ez)
        if ez < 0.0:
            pen = max(pen, -ez)
        return self.sp.k_table * pen

    def placed_attached(self, w: WorldState) -> bool:
        """Attached object held resting within the contact band over the place table."""
        if not w.attached or w.obj.toppled:
            return False
        tb = w.place_table
        dx = w.obj.x - tb.x
        dy = w.obj.y - tb.y
        if dx * dx + dy * dy > tb.radius * tb.radius:
            return False
        bottom = w.obj.z - 0.5 * w.obj_spec.height
        return tb.top - self.sp.rest_band_below <= bottom <= tb.top + self.sp.rest_band_above

    def check_placement(self, w: WorldState) -> tuple:
        """(placed, planar error to the place center). Placed means upright and
        resting on the place table, either freestanding or still held within
        the contact band."""
        o = w.obj
        tb = w.place_table
        err = math.hypot(o.x - tb.x, o.y - tb.y)
        if o.toppled:
            return False, err
        if o.support == ON_PLACE:
            return True, err
        return self.placed_attached(w), err

    # ------------------------------------------------------------------
    # stepping

    def step(self, w: WorldState, cmd: Command) -> StepEvents:
        sp = self.sp
        ap = self.ap
        dt = sp.dt
        ev = StepEvents()

        # Gripper edges act on the pre-step state.
        if cmd.grip_closed and not w.gripper_closed:
            w.gripper_closed = True
            ev.grasp_attempt = True
            ev.grasp_success = self.try_grasp(w)
            if ev.grasp_success:
                ev.grasp_rel_speed = self._grasp_rel_speed
                ev.grasp_base_speed = math.hypot(w.base_vx + w.dist_x,
                                                 w.base_vy + w.dist_y)
        elif not cmd.grip_closed and w.gripper_closed:
            w.gripper_closed = False
            if w.attached:
                self.release(w)
                ev.released = True

        # Base velocity tracking (exact first-order discretization).
        at = self.alpha_track
        w.base_vx = cmd.vx + (w.base_vx - cmd.vx) * at
        w.base_vy = cmd.vy + (w.base_vy - cmd.vy) * at
        w.base_wz = cmd.wz + (w.base_wz - cmd.wz) * at

        # Payload reaction disturbance from the previous step's EE acceleration.
        yaw = w.base_yaw
        cy = math.cos(yaw)
        sy = math.sin(yaw)
        if w.attached:
            m = w.obj_spec.mass
            ax, ay, _ = w.ee_acc
            abx = cy * ax + sy * ay
            aby = cy * ay - sy * ax
            rx = cy * (w.ee_pos[0] - w.base_x) + sy * (w.ee_pos[1] - w.base_y)
            ry = cy * (w.ee_pos[1] - w.base_y) - sy * (w.ee_pos[0] - w.base_x)
            tx = -sp.kappa_dist * m * abx
            ty = -sp.kappa_dist * m * aby
            tw = -sp.kappa_rot * m * (rx * aby - ry * abx)
        else:
            tx = ty = tw = 0.0
        ad = self.alpha_dist
        w.dist_x = tx + (w.dist_x - tx) * ad
        w.dist_y = ty + (w.dist_y - ty) * ad
        w.dist_w = tw + (w.dist_w - tw) * ad

        vx_eff = w.base_vx + w.dist_x
        vy_eff = w.base_vy + w.dist_y
        wz_eff = w.base_wz + w.dist_w

        # Height and pitch first-order tracking.
        ab = self.alpha_body
        h_cmd = sp.base_height + cmd.dh
        h_old = w.base_h
        p_old = w.base_pitch
        w.base_h = h_cmd + (w.base_h - h_cmd) * ab
        w.base_pitch = cmd.pitch + (w.base_pitch - cmd.pitch) * ab
        w.base_vh = (w.base_h - h_old) * self.inv_dt
        w.base_wy = (w.base_pitch - p_old) * self.inv_dt

        # Pose integration: body velocity rotated by the pre-update yaw.
        w.base_x += (cy * vx_eff - sy * vy_eff) * dt
        w.base_y += (sy * vx_eff + cy * vy_eff) * dt
        yaw += wz_eff * dt
        if yaw > math.pi:
            yaw -= TWO_PI
        elif yaw < -math.pi:
            yaw += TWO_PI
        w.base_yaw = yaw

        # Arm: critically damped PD plus feedforward compensation of the known
        # link masses; the payload's gravity load (one step stale) stays
        # uncompensated, so carried mass shows up as tracking droop.
        q = w.q
        qd = w.qd
        g_tau = w.grav_tau
        lever = w.grav_lever
        m_pay = w.obj_spec.mass if w.attached else 0.0
        q_des = cmd.q_des
        lower = ap.lower
        upper = ap.upper
        tau_max = ap.tau_max
        inertia = ap.inertia
        inv_inertia = self.inv_inertia
        vlim = ap.vel_limit
        wn2 = self.wn2
        two_wn = self.two_wn
        inv_dt = self.inv_dt
        new_q = [0.0] * 6
        new_qd = [0.0] * 6
        new_tau = [0.0] * 6
        new_qdd = [0.0] * 6
        for i in range(6):
            qi = q[i]
            qdi = qd[i]
            tau_i = inertia[i] * (wn2 * (q_des[i] - qi) - two_wn * qdi) - g_tau[i]
            tm = tau_max[i]
            if tau_i > tm:
                tau_i = tm
            elif tau_i < -tm:
                tau_i = -tm
            acc = (tau_i + g_tau[i] + m_pay * lever[i]) * inv_inertia[i]
            v = qdi + acc * dt
            if v > vlim:
                v = vlim
            elif v < -vlim:
                v = -vlim
            nq = qi + v * dt
            if nq < lower[i]:
                nq = lower[i]
                v = 0.0
            elif nq > upper[i]:
                nq = upper[i]
                v = 0.0
            new_q[i] = nq
            new_qd[i] = v
            new_tau[i] = tau_i
            new_qdd[i] = (v - qdi) * inv_dt
        w.q = tuple(new_q)
        w.qd = tuple(new_qd)
        w.tau = tuple(new_tau)
        w.qdd = tuple(new_qdd)

        # Forward kinematics, EE velocity/acceleration, next-step gravity.
        rot = yaw_pitch_matrix(w.base_yaw, w.base_pitch)
        jp, ja, r_ee, p_ee = self.chain.chain_info(rot, (w.base_x, w.base_y, w.base_h), w.q)
        vx = (p_ee[0] - w.ee_pos[0]) * inv_dt
        vy = (p_ee[1] - w.ee_pos[1]) * inv_dt
        vz = (p_ee[2] - w.ee_pos[2]) * inv_dt
        w.ee_acc = (
            (vx - w.ee_vel[0]) * inv_dt,
            (vy - w.ee_vel[1]) * inv_dt,
            (vz - w.ee_vel[2]) * inv_dt,
        )
        w.ee_vel = (vx, vy, vz)
        w.ee_rot = r_ee
        w.ee_pos = p_ee
        w.grav_tau, w.grav_lever = self._gravity_from_chain(jp, ja, p_ee)

        # Object update.
        o = w.obj
        if w.attached:
            # Slip when payload weight plus acceleration exceeds the grip budget.
            aex, aey, aez = w.ee_acc
            load = w.obj_spec.mass * math.sqrt(
                aex * aex + aey * aey + (aez + sp.gravity) * (aez + sp.gravity))
            excess = load / GRIP_FORCE - 1.0
            if excess > 0.0:
                w.slip += sp.kappa_bump * excess * dt
                ox, oy, oz = w.attach_offset
                down = mat_t_vec(r_ee, (0.0, 0.0, -1.0))
                shift = sp.kappa_bump * excess * dt
                w.attach_offset = (ox + down[0] * shift, oy + down[1] * shift,
                                   oz + down[2] * shift)
            if w.slip > SLIP_DROP_FRAC * w.obj_spec.height:
                self.release(w)
                ev.dropped = True
            else:
                off = w.attach_offset
                o.x = p_ee[0] + r_ee[0] * off[0] + r_ee[1] * off[1] + r_ee[2] * off[2]
                o.y = p_ee[1] + r_ee[3] * off[0] + r_ee[4] * off[1] + r_ee[5] * off[2]
                o.z = p_ee[2] + r_ee[6] * off[0] + r_ee[7] * off[1] + r_ee[8] * off[2]
                o.yaw = math.atan2(r_ee[3], r_ee[0]) + w.attach_yaw_off
                o.vx, o.vy, o.vz = w.ee_vel
        if not w.attached and o.support == AIR:
            o.vz -= sp.gravity * dt
            o.x += o.vx * dt
            o.y += o.vy * dt
            o.z += o.vz * dt
            half_h = 0.5 * w.obj_spec.height
            bottom = o.z - half_h
            if o.vz <= 0.0:
                landing = None
                top = 0.0
                for name, tb in ((ON_PICK, w.pick_table), (ON_PLACE, w.place_table)):
                    dx = o.x - tb.x
                    dy = o.y - tb.y
                    if dx * dx + dy * dy <= tb.radius * tb.radius and bottom <= tb.top:
                        # Only land if we have not already fallen well past the top.
                        if bottom > tb.top - 0.5 * w.obj_spec.height:
                            landing = name
                            top = tb.top
                            break
                if landing is None and bottom <= 0.0:
                    landing = FLOOR
                    top = 0.0
                if landing is not None:
                    ev.touchdown = True
                    h_speed = math.hypot(o.vx, o.vy)
                    aspect = w.obj_spec.width / w.obj_spec.height
                    if h_speed <= sp.c_tip * aspect:
                        o.z = top + half_h
                        o.toppled = False
                        ev.settled = True
                    else:
                        o.z = top + 0.5 * w.obj_spec.width
                        o.toppled = True
                        ev.toppled = True
                    o.vx = o.vy = o.vz = 0.0
                    o.support = landing

        w.t += 1
        return ev

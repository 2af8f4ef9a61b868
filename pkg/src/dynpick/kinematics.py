"""Scalar forward kinematics for the arm chain.

Rotations are row-major 9-tuples and points are 3-tuples; everything stays in
plain Python floats so the simulator's inner loop avoids array overhead.
"""

from __future__ import annotations

import math

IDENTITY = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)


def rot_z(angle: float) -> tuple:
    c, s = math.cos(angle), math.sin(angle)
    return (c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)


def rot_y(angle: float) -> tuple:
    c, s = math.cos(angle), math.sin(angle)
    return (c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)


def mat_mul(a: tuple, b: tuple) -> tuple:
    a0, a1, a2, a3, a4, a5, a6, a7, a8 = a
    b0, b1, b2, b3, b4, b5, b6, b7, b8 = b
    return (
        a0 * b0 + a1 * b3 + a2 * b6, a0 * b1 + a1 * b4 + a2 * b7, a0 * b2 + a1 * b5 + a2 * b8,
        a3 * b0 + a4 * b3 + a5 * b6, a3 * b1 + a4 * b4 + a5 * b7, a3 * b2 + a4 * b5 + a5 * b8,
        a6 * b0 + a7 * b3 + a8 * b6, a6 * b1 + a7 * b4 + a8 * b7, a6 * b2 + a7 * b5 + a8 * b8,
    )


def mat_vec(m: tuple, v: tuple) -> tuple:
    x, y, z = v
    return (
        m[0] * x + m[1] * y + m[2] * z,
        m[3] * x + m[4] * y + m[5] * z,
        m[6] * x + m[7] * y + m[8] * z,
    )


def mat_t_vec(m: tuple, v: tuple) -> tuple:
    """Transpose-multiply: world vector into the frame of rotation m."""
    x, y, z = v
    return (
        m[0] * x + m[3] * y + m[6] * z,
        m[1] * x + m[4] * y + m[7] * z,
        m[2] * x + m[5] * y + m[8] * z,
    )


def _apply_rot_z(m: tuple, c: float, s: float) -> tuple:
    """Right-multiply m by a z rotation (cos c, sin s)."""
    m0, m1, m2, m3, m4, m5, m6, m7, m8 = m
    return (
        m0 * c + m1 * s, m1 * c - m0 * s, m2,
        m3 * c + m4 * s, m4 * c - m3 * s, m5,
        m6 * c + m7 * s, m7 * c - m6 * s, m8,
    )


def _apply_rot_y(m: tuple, c: float, s: float) -> tuple:
    """Right-multiply m by a y rotation."""
    m0, m1, m2, m3, m4, m5, m6, m7, m8 = m
    return (
        m0 * c - m2 * s, m1, m0 * s + m2 * c,
        m3 * c - m5 * s, m4, m3 * s + m5 * c,
        m6 * c - m8 * s, m7, m6 * s + m8 * c,
    )


class ArmChain:
    """Forward kinematics for a fixed serial chain of z/y revolute joints."""

    __slots__ = ("mount", "axes", "links", "n")

    def __init__(self, mount: tuple, axes: tuple, links: tuple):
        self.mount = tuple(float(v) for v in mount)
        self.axes = tuple(axes)
        self.links = tuple(tuple(float(v) for v in ln) for ln in links)
        self.n = len(axes)
        if len(links) != self.n:
            raise ValueError("one link offset required per joint")
        for ax in axes:
            if ax not in ("z", "y"):
                raise ValueError(f"unsupported joint axis {ax!r}")

    def ee_pose(self, base_rot: tuple, base_pos: tuple, q) -> tuple:
        """End-effector (rotation, position) in world frame."""
        r = base_rot
        mx, my, mz = self.mount
        p = (
            base_pos[0] + r[0] * mx + r[1] * my + r[2] * mz,
            base_pos[1] + r[3] * mx + r[4] * my + r[5] * mz,
            base_pos[2] + r[6] * mx + r[7] * my + r[8] * mz,
        )
        for i in range(self.n):
            c, s = math.cos(q[i]), math.sin(q[i])
            if self.axes[i] == "z":
                r = _apply_rot_z(r, c, s)
            else:
                r = _apply_rot_y(r, c, s)
            lx, ly, lz = self.links[i]
            p = (
                p[0] + r[0] * lx + r[1] * ly + r[2] * lz,
                p[1] + r[3] * lx + r[4] * ly + r[5] * lz,
                p[2] + r[6] * lx + r[7] * ly + r[8] * lz,
            )
        return r, p

    def chain_info(self, base_rot: tuple, base_pos: tuple, q) -> tuple:
        """Joint world positions, joint world axes, and the EE pose.

        Returns (joint_pos list, joint_axis list, ee_rot, ee_pos) where
        joint_pos[i]/joint_axis[i] describe joint i before its rotation acts.
        """
        r = base_rot
        mx, my, mz = self.mount
        p = (
            base_pos[0] + r[0] * mx + r[1] * my + r[2] * mz,
            base_pos[1] + r[3] * mx + r[4] * my + r[5] * mz,
            base_pos[2] + r[6] * mx + r[7] * my + r[8] * mz,
        )
        joint_pos = []
        joint_axis = []
        for i in range(self.n):
            joint_pos.append(p)
            if self.axes[i] == "z":
                joint_axis.append((r[2], r[5], r[8]))
                c, s = math.cos(q[i]), math.sin(q[i])
                r = _apply_rot_z(r, c, s)
            else:
                joint_axis.append((r[1], r[4], r[7]))
                c, s = math.cos(q[i]), math.sin(q[i])
                r = _apply_rot_y(r, c, s)
            lx, ly, lz = self.links[i]
            p = (
                p[0] + r[0] * lx + r[1] * ly + r[2] * lz,
                p[1] + r[3] * lx + r[4] * ly + r[5] * lz,
                p[2] + r[6] * lx + r[7] * ly + r[8] * lz,
            )
        return joint_pos, joint_axis, r, p

    def gravity_torques(self, base_rot: tuple, base_pos: tuple, q,
                        link_masses: tuple, payload: float, gravity: float) -> tuple:
        """Gravity load at each joint for point link masses plus an EE payload.

        Link mass i hangs at the distal end of link i (= joint i+1 position,
        or the EE for the last link); payload acts at the EE. Positive torque
        follows the joint axis by the right-hand rule.
        """
        joint_pos, joint_axis, _, ee = self.chain_info(base_rot, base_pos, q)
        pts = joint_pos[1:] + [ee]
        n = self.n
        # Suffix sums over masses at and beyond each joint's distal point.
        mass_suffix = [0.0] * (n + 1)
        sx = [0.0] * (n + 1)
        sy = [0.0] * (n + 1)
        for i in range(n - 1, -1, -1):
            m = link_masses[i] + (payload if i == n - 1 else 0.0)
            mass_suffix[i] = mass_suffix[i + 1] + m
            sx[i] = sx[i + 1] + m * pts[i][0]
            sy[i] = sy[i + 1] + m * pts[i][1]
        out = []
        for j in range(n):
            ux, uy, _ = joint_axis[j]
            px, py, _ = joint_pos[j]
            # torque = sum m*g*((p_m - p_j) x (-z)) . u, reduced to the xy part
            out.append(gravity * ((sx[j] - mass_suffix[j] * px) * uy
                                  - (sy[j] - mass_suffix[j] * py) * ux))
        return tuple(out)


def yaw_matrix(yaw: float) -> tuple:
    return rot_z(yaw)


def yaw_pitch_matrix(yaw: float, pitch: float) -> tuple:
    """Base body orientation: yaw about world z, then pitch about body y."""
    return mat_mul(rot_z(yaw), rot_y(pitch))

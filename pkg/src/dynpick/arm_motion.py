"""Random per-joint arm motions in two closed-form velocity profiles.

Every joint draws its own start, target, duration, and mode, so joints start
and stop asynchronously: one may hold its target while the others are still
moving. The two modes are a linear ramp (constant velocity) and a triangular
velocity profile (constant acceleration flipping sign at the midpoint, peak
velocity 2*dq/T). Plans carry a payload mass for disturbance studies.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

CONSTANT_VELOCITY = "constant_velocity"
SYMMETRIC_ACCEL = "symmetric_constant_acceleration"
MODES = (CONSTANT_VELOCITY, SYMMETRIC_ACCEL)

DURATION_RANGE = (0.5, 4.0)   # per-joint move time [s]
PAYLOAD_RANGE = (0.0, 2.0)    # carried mass [kg]


@dataclass(slots=True, frozen=True)
class JointTrajectory:
    """One joint's move; positions hold at the target after ``duration``."""

    joint_index: int
    q_init: float
    q_target: float
    duration: float
    mode: str

    @property
    def dq(self) -> float:
        return self.q_target - self.q_init


@dataclass(slots=True, frozen=True)
class ArmMotionPlan:
    """Six independent joint moves plus the payload they carry."""

    joints: tuple
    payload_mass: float

    @property
    def duration(self) -> float:
        return max(j.duration for j in self.joints)


def evaluate(traj: JointTrajectory, t: float) -> tuple:
    """(position, velocity) at time t >= 0.

    Past the duration the joint holds its target at zero velocity. The
    constant-velocity ramp keeps its slope on [0, T); the symmetric mode
    accelerates at 4*dq/T^2 to the midpoint and decelerates back to rest.
    """
    T = traj.duration
    if t >= T:
        return traj.q_target, 0.0
    t = max(t, 0.0)
    dq = traj.dq
    if traj.mode == CONSTANT_VELOCITY:
        return traj.q_init + dq * (t / T), dq / T
    a = 4.0 * dq / (T * T)
    if t <= 0.5 * T:
        return traj.q_init + 0.5 * a * t * t, a * t
    r = T - t
    return traj.q_target - 0.5 * a * r * r, a * r


def evaluate_plan(plan: ArmMotionPlan, t: float) -> tuple:
    """(q, qd) tuples across all six joints at time t."""
    q = []
    qd = []
    for traj in plan.joints:
        p, v = evaluate(traj, t)
        q.append(p)
        qd.append(v)
    return tuple(q), tuple(qd)


def sample_plan(rng: random.Random, joint_limits: tuple,
                duration_range: tuple = DURATION_RANGE) -> ArmMotionPlan:
    """Draw one plan: per-joint init, target, duration, and mode are uniform
    and independent; a degenerate joint range yields a stationary joint."""
    lo_dur, hi_dur = duration_range
    if lo_dur <= 0.0 or hi_dur < lo_dur:
        raise ValueError("duration range must be positive")
    lower, upper = joint_limits
    joints = []
    for i, (lo, hi) in enumerate(zip(lower, upper)):
        joints.append(JointTrajectory(
            joint_index=i,
            q_init=rng.uniform(lo, hi),
            q_target=rng.uniform(lo, hi),
            duration=rng.uniform(lo_dur, hi_dur),
            mode=MODES[rng.randrange(2)],
        ))
    return ArmMotionPlan(joints=tuple(joints),
                         payload_mass=rng.uniform(*PAYLOAD_RANGE))


def plan_table(plan: ArmMotionPlan, dt: float) -> list:
    """Uniform (t, q, qd) rows covering the plan, endpoint included."""
    rows = []
    n = int(plan.duration / dt) + 1
    for k in range(n + 1):
        t = min(k * dt, plan.duration)
        q, qd = evaluate_plan(plan, t)
        rows.append((t, q, qd))
        if t >= plan.duration:
            break
    return rows

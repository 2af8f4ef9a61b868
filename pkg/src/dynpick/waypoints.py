"""Minimum-jerk waypoint trajectories for the scripted arm controller.

Each segment is a rest-to-rest quintic in normalized time, which gives exact
zero velocity and acceleration at both ends and C2 continuity across chained
waypoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Peak |s'(tau)| and |s''(tau)| of the normalized minimum-jerk polynomial.
PEAK_VEL_FACTOR = 15.0 / 8.0
PEAK_ACC_FACTOR = 10.0 / math.sqrt(3.0)
MIN_DURATION = 0.05


def min_jerk_scalars(tau: float) -> tuple:
    """Normalized position, velocity, acceleration at tau in [0, 1]."""
    t2 = tau * tau
    t3 = t2 * tau
    t4 = t3 * tau
    t5 = t4 * tau
    s = 10.0 * t3 - 15.0 * t4 + 6.0 * t5
    sd = 30.0 * t2 - 60.0 * t3 + 30.0 * t4
    sdd = 60.0 * tau - 180.0 * t2 + 120.0 * t3
    return s, sd, sdd


@dataclass(slots=True)
class Segment:
    q0: tuple
    q1: tuple
    duration: float
    t_start: float


@dataclass(slots=True)
class JointTrajectory:
    """Piecewise minimum-jerk trajectory over a fixed joint count."""

    segments: list

    @property
    def duration(self) -> float:
        last = self.segments[-1]
        return last.t_start + last.duration

    def sample(self, t: float) -> tuple:
        """(q, qd, qdd) at time t; clamped to the boundary states outside."""
        segs = self.segments
        if t <= 0.0:
            q0 = segs[0].q0
            zero = (0.0,) * len(q0)
            return q0, zero, zero
        if t >= self.duration:
            q1 = segs[-1].q1
            zero = (0.0,) * len(q1)
            return q1, zero, zero
        seg = segs[-1]
        for s in segs:
            if t < s.t_start + s.duration:
                seg = s
                break
        tau = (t - seg.t_start) / seg.duration
        s, sd, sdd = min_jerk_scalars(tau)
        inv_t = 1.0 / seg.duration
        q = []
        qd = []
        qdd = []
        for a, b in zip(seg.q0, seg.q1):
            d = b - a
            q.append(a + d * s)
            qd.append(d * sd * inv_t)
            qdd.append(d * sdd * inv_t * inv_t)
        return tuple(q), tuple(qd), tuple(qdd)


def segment_duration(q0, q1, vel_limit: float, acc_limit: float) -> float:
    """Shortest duration that keeps every joint under both limits."""
    t = MIN_DURATION
    for a, b in zip(q0, q1):
        d = abs(b - a)
        if d == 0.0:
            continue
        t = max(t, PEAK_VEL_FACTOR * d / vel_limit,
                math.sqrt(PEAK_ACC_FACTOR * d / acc_limit))
    return t


def plan_trajectory(waypoints, vel_limit: float = 1.5, acc_limit: float = 6.0,
                    durations=None) -> JointTrajectory:
    """Chain rest-to-rest segments through the waypoint list."""
    if len(waypoints) < 2:
        raise ValueError("need at least two waypoints")
    n = len(waypoints[0])
    for wp in waypoints:
        if len(wp) != n:
            raise ValueError("inconsistent joint counts in waypoints")
    segments = []
    t0 = 0.0
    for i in range(len(waypoints) - 1):
        q0 = tuple(float(v) for v in waypoints[i])
        q1 = tuple(float(v) for v in waypoints[i + 1])
        if durations is not None:
            dur = float(durations[i])
            if dur <= 0.0:
                raise ValueError("segment durations must be positive")
        else:
            dur = segment_duration(q0, q1, vel_limit, acc_limit)
        segments.append(Segment(q0, q1, dur, t0))
        t0 += dur
    return JointTrajectory(segments)


def sample_uniform(traj: JointTrajectory, dt: float) -> list:
    """Sample (t, q, qd, qdd) rows on a uniform grid covering the trajectory."""
    rows = []
    n = int(math.ceil(traj.duration / dt))
    for k in range(n + 1):
        t = min(k * dt, traj.duration)
        q, qd, qdd = traj.sample(t)
        rows.append((t, q, qd, qdd))
    return rows

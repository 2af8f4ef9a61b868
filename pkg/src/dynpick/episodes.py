"""Episode sampling: tasks, objects, tables, and the fixed evaluation scenarios."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .configs import ArmParams, SimParams, TaskRanges
from .curriculum import place_tolerance, retreat_requirement
from .world import BOX, CYLINDER, ON_PICK, ObjectSpec, WorldState

PI = math.pi


@dataclass(slots=True)
class EpisodeSpec:
    """Everything needed to build one episode's initial world."""

    robot_x: float
    robot_y: float
    robot_yaw: float
    pick_x: float
    pick_y: float
    pick_top: float
    place_x: float
    place_y: float
    place_top: float
    shape: str
    obj_width: float
    obj_height: float
    obj_mass: float
    obj_yaw: float
    place_tol: float
    retreat_req: float
    levels: tuple = (0.10, 0.10, 0.10)
    name: str = "sampled"


def _scaled_hi(lo: float, hi: float, level: float) -> float:
    return lo + (hi - lo) * level


def _height_range(full_lo: float, full_hi: float, level: float) -> tuple:
    """Heights open up around bench height (0.6 m) as the level rises."""
    lo = max(full_lo, 0.6 - 0.6 * level)
    hi = min(full_hi, 0.6 + (full_hi - 0.6) * level)
    return lo, hi


def _mass_range(level: float) -> tuple:
    lo = max(0.2, 0.5 - 0.3 * level)
    hi = min(2.3, 0.5 + 1.8 * level)
    return lo, hi


def sample_episode(rng: random.Random, ranges: TaskRanges,
                   levels: dict | None = None) -> EpisodeSpec:
    """Draw one task. The robot starts at the origin; table bearings are
    uniform, distances and difficulty follow the per-track levels."""
    lv = {"pick": 1.0, "place": 1.0, "release": 1.0}
    if levels is not None:
        lv.update(levels)

    d_pick = rng.uniform(ranges.pick_dist[0],
                         _scaled_hi(*ranges.pick_dist, lv["pick"]))
    d_place = rng.uniform(ranges.place_dist[0],
                          _scaled_hi(*ranges.place_dist, lv["place"]))

    for _ in range(200):
        th_pick = rng.uniform(-PI, PI)
        th_place = rng.uniform(-PI, PI)
        px, py = d_pick * math.cos(th_pick), d_pick * math.sin(th_pick)
        qx, qy = d_place * math.cos(th_place), d_place * math.sin(th_place)
        gap = math.hypot(px - qx, py - qy)
        if gap >= ranges.table_gap_min and d_place >= ranges.robot_place_gap_min:
            break
    else:
        qx, qy = px - ranges.table_gap_min - 0.05, py

    if ranges.fixed_pick_height is not None:
        pick_top = ranges.fixed_pick_height
    else:
        pick_top = rng.uniform(*_height_range(*ranges.pick_height, lv["pick"]))
    if ranges.fixed_place_height is not None:
        place_top = ranges.fixed_place_height
    else:
        place_top = rng.uniform(*_height_range(*ranges.place_height, lv["place"]))

    if ranges.cylinder_only or rng.random() < 0.5:
        shape = CYLINDER
        width = rng.uniform(*ranges.cyl_diameter)
    else:
        shape = BOX
        width = rng.uniform(*ranges.box_width)
    height = rng.uniform(*ranges.obj_height)
    if ranges.fixed_mass is not None:
        mass = ranges.fixed_mass
    else:
        mass = rng.uniform(*_mass_range(lv["pick"]))

    # start roughly facing the pick table at low level, anywhere at high level
    spread = (0.3 + 0.7 * lv["pick"]) * PI
    yaw = th_pick + rng.uniform(-spread, spread)

    return EpisodeSpec(
        robot_x=0.0, robot_y=0.0, robot_yaw=yaw,
        pick_x=px, pick_y=py, pick_top=pick_top,
        place_x=qx, place_y=qy, place_top=place_top,
        shape=shape, obj_width=width, obj_height=height, obj_mass=mass,
        obj_yaw=rng.uniform(*ranges.object_yaw),
        place_tol=place_tolerance(lv["place"], ranges),
        retreat_req=retreat_requirement(lv["release"], ranges),
        levels=(lv["pick"], lv["place"], lv["release"]),
    )


def make_world(spec: EpisodeSpec, sim: SimParams, arm: ArmParams,
               table_radius: float = 0.10) -> WorldState:
    w = WorldState()
    w.base_x = spec.robot_x
    w.base_y = spec.robot_y
    w.base_yaw = spec.robot_yaw
    w.base_h = sim.base_height
    w.q = arm.nominal
    w.pick_table.x, w.pick_table.y = spec.pick_x, spec.pick_y
    w.pick_table.top, w.pick_table.radius = spec.pick_top, table_radius
    w.place_table.x, w.place_table.y = spec.place_x, spec.place_y
    w.place_table.top, w.place_table.radius = spec.place_top, table_radius
    w.obj_spec = ObjectSpec(spec.shape, spec.obj_width, spec.obj_height,
                            spec.obj_mass)
    w.obj.x, w.obj.y = spec.pick_x, spec.pick_y
    w.obj.z = spec.pick_top + 0.5 * spec.obj_height
    w.obj.yaw = spec.obj_yaw
    w.obj.support = ON_PICK
    return w


# ----------------------------------------------------------------------
# fixed evaluation scenarios

SCENARIO_NAMES = ("nominal", "heavy", "light", "square", "large_size",
                  "large_height_gap")


def scenario_episode(name: str, rng: random.Random) -> EpisodeSpec:
    """One of the six held-out scenarios: fixed tables at (+1, 0) and (-1, 0),
    robot start sampled within 3 m of the workspace center, judged at full
    difficulty (5 cm placement, 10 cm retreat)."""
    shape, width, height, mass = CYLINDER, 0.06, 0.10, 0.83
    pick_top, place_top = 0.6, 0.9
    if name == "heavy":
        mass = 1.3
    elif name == "light":
        mass = 0.47
    elif name == "square":
        shape, width = BOX, 0.05
    elif name == "large_size":
        width = 0.07
    elif name == "large_height_gap":
        pick_top, place_top = 0.0, 1.1
    elif name != "nominal":
        raise ValueError(f"unknown scenario {name!r}")

    d = rng.uniform(1.5, 2.8)
    th = rng.uniform(-PI, PI)
    rx, ry = d * math.cos(th), d * math.sin(th)
    yaw = math.atan2(-ry, -rx) + rng.uniform(-0.4, 0.4)
    return EpisodeSpec(
        robot_x=rx, robot_y=ry, robot_yaw=yaw,
        pick_x=1.0, pick_y=0.0, pick_top=pick_top,
        place_x=-1.0, place_y=0.0, place_top=place_top,
        shape=shape, obj_width=width, obj_height=height, obj_mass=mass,
        obj_yaw=rng.uniform(0.0, PI),
        place_tol=0.05, retreat_req=0.10,
        levels=(1.0, 1.0, 1.0), name=name,
    )

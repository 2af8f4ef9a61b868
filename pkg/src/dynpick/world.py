"""World state containers shared by the plant, rewards, and episode logic."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

# Object support labels.
HELD = "held"
AIR = "air"
FLOOR = "floor"
ON_PICK = "pick"
ON_PLACE = "place"

CYLINDER = "cylinder"
BOX = "box"


@dataclass(slots=True)
class Table:
    x: float
    y: float
    top: float
    radius: float


@dataclass(slots=True)
class ObjectSpec:
    shape: str          # CYLINDER or BOX
    width: float        # diameter for cylinders, side for boxes [m]
    height: float
    mass: float


@dataclass(slots=True)
class ObjectState:
    x: float
    y: float
    z: float            # center height
    yaw: float
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    support: str = ON_PICK
    toppled: bool = False


@dataclass(slots=True)
class WorldState:
    """Full mutable simulator state. All quantities in SI, world frame."""

    t: int = 0

    # Base body.
    base_x: float = 0.0
    base_y: float = 0.0
    base_yaw: float = 0.0
    base_h: float = 0.50
    base_pitch: float = 0.0
    base_vx: float = 0.0      # body-frame planar velocity
    base_vy: float = 0.0
    base_wz: float = 0.0
    base_vh: float = 0.0      # vertical (height-tracking) rate, last step
    base_wy: float = 0.0      # pitch rate, last step
    dist_x: float = 0.0       # filtered payload-reaction disturbance
    dist_y: float = 0.0
    dist_w: float = 0.0

    # Arm.
    q: tuple = (0.0,) * 6
    qd: tuple = (0.0,) * 6
    qdd: tuple = (0.0,) * 6
    tau: tuple = (0.0,) * 6   # applied actuator torque, last step

    # Cached end-effector kinematics (world frame).
    ee_rot: tuple = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)
    ee_pos: tuple = (0.0, 0.0, 0.0)
    ee_vel: tuple = (0.0, 0.0, 0.0)
    ee_acc: tuple = (0.0, 0.0, 0.0)

    gripper_closed: bool = False

    # Cached gravity torques for the next arm integration step: link-mass
    # load and the per-kilogram EE payload lever.
    grav_tau: tuple = (0.0,) * 6
    grav_lever: tuple = (0.0,) * 6

    # Object and attachment.
    obj_spec: ObjectSpec = field(default_factory=lambda: ObjectSpec(CYLINDER, 0.06, 0.10, 0.83))
    obj: ObjectState = field(default_factory=lambda: ObjectState(0.0, 0.0, 0.0, 0.0))
    attached: bool = False
    attach_offset: tuple = (0.0, 0.0, 0.0)   # object center in EE frame
    attach_yaw_off: float = 0.0
    slip: float = 0.0                        # accumulated in-gripper slip [m]

    # Scene.
    pick_table: Table = field(default_factory=lambda: Table(1.0, 0.0, 0.6, 0.10))
    place_table: Table = field(default_factory=lambda: Table(-1.0, 0.0, 0.6, 0.10))


def copy_world(w: WorldState) -> WorldState:
    """Deep-enough copy: nested dataclasses duplicated, tuples shared."""
    c = replace(w)
    c.obj_spec = replace(w.obj_spec)
    c.obj = replace(w.obj)
    c.pick_table = replace(w.pick_table)
    c.place_table = replace(w.place_table)
    return c


def object_bottom(w: WorldState) -> float:
    return w.obj.z - 0.5 * w.obj_spec.height


def table_of(w: WorldState, name: str) -> Table:
    return w.pick_table if name == ON_PICK else w.place_table
